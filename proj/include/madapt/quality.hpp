#pragma once

#include <span>
#include <string>
#include <vector>

#include "madapt/mesh.hpp"
#include "madapt/metric.hpp"

namespace madapt {

struct EdgeLengthHistogram {
  std::vector<double> bin_edges;  // ascending; last may be +inf
  std::vector<long> counts;       // one per (lo, hi] interval
  std::vector<double> percentages;
  long total_edges = 0;
};

/// Bin edges used by the adaptation tables: (0,0.3], (0.3,0.6], (0.6,0.7],
/// (0.7,0.9], (0.9,1.3], (1.3,1.41], (1.41,2], (2,5], (5,inf).
std::vector<double> default_histogram_bins();

struct NarrowBandStats {
  long element_count = 0;
  double min_h = 0.0, max_h = 0.0, avg_h = 0.0;
  double min_q = 0.0, max_q = 0.0, avg_q = 0.0;
  bool empty = true;  // extrema undefined when no element is in the band
};

/// Per-element compression ratio r_ref / r_adapted.
using CompressionField = std::vector<double>;

/// Scale-invariant shape measure beta * sum(L_j^2) / area, beta = sqrt(3)/12;
/// 1 for the equilateral triangle and > 1 otherwise.
double iso_quality_2d(const Vec2& a, const Vec2& b, const Vec2& c);

/// Ratio of inscribed radii between meshes sharing connectivity.
CompressionField compression_ratio(const Mesh& ref_mesh, const Mesh& adapted_mesh);

EdgeLengthHistogram edge_histogram(const Mesh& mesh, const MetricField& metric,
                                   std::span<const double> bin_edges = {});

/// Statistics over elements whose minimum vertex |phi| is below the band
/// threshold: count, Euclidean edge-length extrema/average over the selected
/// elements' unique edges, and iso-quality extrema/average.
NarrowBandStats narrow_band_stats(const Mesh& mesh, const ScalarField& phi, double band = 1e-2);

/// CSV row block mirroring the adaptation tables; one row per labelled mesh.
std::string narrow_band_csv(std::span<const std::pair<std::string, NarrowBandStats>> rows,
                            double band);
/// Aligned plain-text rendering of the same rows.
std::string narrow_band_table(std::span<const std::pair<std::string, NarrowBandStats>> rows);

std::string histogram_csv(const EdgeLengthHistogram& hist);
std::string histogram_table(const EdgeLengthHistogram& hist);

}  // namespace madapt
