#include "madapt/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "madapt/num_format.hpp"

namespace madapt {

double iso_quality_2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double area = signed_area(a, b, c);
  const double sum_sq = norm2(b - a) + norm2(c - b) + norm2(a - c);
  if (!(area > 1e-14 * sum_sq))
    throw std::invalid_argument("iso_quality_2d: degenerate triangle");
  const double beta = std::sqrt(3.0) / 12.0;  // equilateral scores exactly 1
  return beta * sum_sq / area;
}

CompressionField compression_ratio(const Mesh& ref_mesh, const Mesh& adapted_mesh) {
  if (ref_mesh.num_triangles() != adapted_mesh.num_triangles() ||
      ref_mesh.num_vertices() != adapted_mesh.num_vertices())
    throw std::invalid_argument("compression_ratio: meshes differ in size");
  for (int t = 0; t < ref_mesh.num_triangles(); ++t)
    if (ref_mesh.triangles[static_cast<size_t>(t)].v != adapted_mesh.triangles[static_cast<size_t>(t)].v)
      throw std::invalid_argument("compression_ratio: connectivity mismatch at triangle " +
                                  std::to_string(t));

  CompressionField q(static_cast<size_t>(ref_mesh.num_triangles()));
  for (int t = 0; t < ref_mesh.num_triangles(); ++t) {
    const auto& tri = ref_mesh.triangles[static_cast<size_t>(t)].v;
    const double r_ref = inscribed_radius(ref_mesh.position(tri[0]), ref_mesh.position(tri[1]),
                                          ref_mesh.position(tri[2]));
    const double r_adap = inscribed_radius(adapted_mesh.position(tri[0]),
                                           adapted_mesh.position(tri[1]),
                                           adapted_mesh.position(tri[2]));
    q[static_cast<size_t>(t)] = r_ref / r_adap;
  }
  return q;
}

std::vector<double> default_histogram_bins() {
  return {0.0, 0.3, 0.6, 0.7, 0.9, 1.3, 1.41, 2.0, 5.0,
          std::numeric_limits<double>::infinity()};
}

EdgeLengthHistogram edge_histogram(const Mesh& mesh, const MetricField& metric,
                                   std::span<const double> bin_edges) {
  if (metric.size() != mesh.vertices.size())
    throw std::invalid_argument("edge_histogram: metric length does not match vertex count");

  EdgeLengthHistogram hist;
  hist.bin_edges = bin_edges.empty() ? default_histogram_bins()
                                     : std::vector<double>(bin_edges.begin(), bin_edges.end());
  if (hist.bin_edges.size() < 2 || !std::is_sorted(hist.bin_edges.begin(), hist.bin_edges.end()))
    throw std::invalid_argument("edge_histogram: bin edges must be ascending");
  hist.counts.assign(hist.bin_edges.size() - 1, 0);

  const Adjacency adj = build_adjacency(mesh);
  for (const auto& e : adj.edges) {
    const double len = metric_edge_length(mesh.position(e[0]), mesh.position(e[1]),
                                          metric[static_cast<size_t>(e[0])],
                                          metric[static_cast<size_t>(e[1])]);
    // Classify into (lo, hi]; lengths at or below the first edge land in bin 0.
    size_t bin = 0;
    while (bin + 2 < hist.bin_edges.size() && len > hist.bin_edges[bin + 1]) ++bin;
    ++hist.counts[bin];
    ++hist.total_edges;
  }

  hist.percentages.assign(hist.counts.size(), 0.0);
  if (hist.total_edges > 0)
    for (size_t i = 0; i < hist.counts.size(); ++i)
      hist.percentages[i] = 100.0 * static_cast<double>(hist.counts[i]) /
                            static_cast<double>(hist.total_edges);
  return hist;
}

NarrowBandStats narrow_band_stats(const Mesh& mesh, const ScalarField& phi, double band) {
  if (!(band > 0.0)) throw std::invalid_argument("narrow_band_stats: band must be > 0");
  if (phi.size() != mesh.vertices.size())
    throw std::invalid_argument("narrow_band_stats: field length does not match vertex count");

  NarrowBandStats stats;
  stats.min_h = stats.min_q = std::numeric_limits<double>::infinity();
  stats.max_h = stats.max_q = -std::numeric_limits<double>::infinity();

  std::set<std::array<int, 2>> edges;
  double q_sum = 0.0;
  for (const Triangle& tri : mesh.triangles) {
    const double d = std::min({std::fabs(phi[static_cast<size_t>(tri.v[0])]),
                               std::fabs(phi[static_cast<size_t>(tri.v[1])]),
                               std::fabs(phi[static_cast<size_t>(tri.v[2])])});
    if (!(d < band)) continue;
    ++stats.element_count;
    const double q = iso_quality_2d(mesh.position(tri.v[0]), mesh.position(tri.v[1]),
                                    mesh.position(tri.v[2]));
    q_sum += q;
    stats.min_q = std::min(stats.min_q, q);
    stats.max_q = std::max(stats.max_q, q);
    for (int k = 0; k < 3; ++k) {
      const int a = tri.v[static_cast<size_t>(k)];
      const int b = tri.v[static_cast<size_t>((k + 1) % 3)];
      edges.insert(a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a});
    }
  }

  if (stats.element_count == 0) return stats;  // empty flag stays set
  stats.empty = false;

  double h_sum = 0.0;
  for (const auto& e : edges) {
    const double len = norm(mesh.position(e[0]) - mesh.position(e[1]));
    h_sum += len;
    stats.min_h = std::min(stats.min_h, len);
    stats.max_h = std::max(stats.max_h, len);
  }
  stats.avg_h = h_sum / static_cast<double>(edges.size());
  stats.avg_q = q_sum / static_cast<double>(stats.element_count);
  return stats;
}

namespace {

std::string stat_or_empty(const NarrowBandStats& s, double v) {
  return s.empty ? std::string() : format_double(v);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string bin_label(double lo, double hi) {
  std::string hi_str = std::isinf(hi) ? "inf" : format_double(hi);
  return "(" + format_double(lo) + "," + hi_str + "]";
}

}  // namespace

std::string narrow_band_csv(std::span<const std::pair<std::string, NarrowBandStats>> rows,
                            double band) {
  std::ostringstream out;
  out << "mesh,band,elements,min_h,max_h,avg_h,min_q_iso,max_q_iso,avg_q_iso\n";
  for (const auto& [label, s] : rows) {
    out << label << ',' << format_double(band) << ',' << s.element_count << ','
        << stat_or_empty(s, s.min_h) << ',' << stat_or_empty(s, s.max_h) << ','
        << stat_or_empty(s, s.avg_h) << ',' << stat_or_empty(s, s.min_q) << ','
        << stat_or_empty(s, s.max_q) << ',' << stat_or_empty(s, s.avg_q) << '\n';
  }
  return out.str();
}

std::string narrow_band_table(std::span<const std::pair<std::string, NarrowBandStats>> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %10s %12s %12s %12s %10s %10s %10s\n", "mesh",
                "elements", "min h", "max h", "avg h", "min Q", "max Q", "avg Q");
  out << line;
  for (const auto& [label, s] : rows) {
    if (s.empty) {
      std::snprintf(line, sizeof line, "%-14s %10ld %12s %12s %12s %10s %10s %10s\n",
                    label.c_str(), s.element_count, "-", "-", "-", "-", "-", "-");
    } else {
      std::snprintf(line, sizeof line,
                    "%-14s %10ld %12.4e %12.4e %12.4e %10.3f %10.3f %10.3f\n", label.c_str(),
                    s.element_count, s.min_h, s.max_h, s.avg_h, s.min_q, s.max_q, s.avg_q);
    }
    out << line;
  }
  return out.str();
}

std::string histogram_csv(const EdgeLengthHistogram& hist) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,percent\n";
  for (size_t i = 0; i < hist.counts.size(); ++i) {
    const double hi = hist.bin_edges[i + 1];
    out << format_double(hist.bin_edges[i]) << ',' << (std::isinf(hi) ? "inf" : format_double(hi))
        << ',' << hist.counts[i] << ',' << fixed2(hist.percentages[i]) << '\n';
  }
  return out.str();
}

std::string histogram_table(const EdgeLengthHistogram& hist) {
  std::ostringstream out;
  out << "metric edge-length histogram (" << hist.total_edges << " edges)\n";
  char line[128];
  for (size_t i = 0; i < hist.counts.size(); ++i) {
    std::snprintf(line, sizeof line, "  %-12s %10ld %9s%%\n",
                  bin_label(hist.bin_edges[i], hist.bin_edges[i + 1]).c_str(), hist.counts[i],
                  fixed2(hist.percentages[i]).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace madapt
