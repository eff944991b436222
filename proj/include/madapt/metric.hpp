#pragma once

#include <array>
#include <span>
#include <vector>

#include "madapt/mesh.hpp"

namespace madapt {

/// Symmetric 2x2 tensor (m11, m12, m22), units length^-2. Used both for
/// metrics (positive definite) and for recovered Hessians (possibly
/// indefinite); clamping operations guarantee positive definiteness.
struct SpdTensor2 {
  double m11 = 1.0;
  double m12 = 0.0;
  double m22 = 1.0;

  static SpdTensor2 isotropic(double eigenvalue) { return {eigenvalue, 0.0, eigenvalue}; }

  double det() const { return m11 * m22 - m12 * m12; }
  bool is_spd() const { return m11 > 0.0 && det() > 0.0; }
  Vec2 apply(const Vec2& v) const { return {m11 * v.x + m12 * v.y, m12 * v.x + m22 * v.y}; }
  /// Quadratic form v . M v.
  double quad(const Vec2& v) const { return dot(v, apply(v)); }
};

using MetricField = std::vector<SpdTensor2>;

/// Eigen pairs of a symmetric 2x2 tensor: lambda1 >= lambda2, orthonormal
/// eigenvectors v1, v2 (rows of the rotation, det +1).
struct SpectralDecomp2 {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  Vec2 v1{1.0, 0.0};
  Vec2 v2{0.0, 1.0};

  SpdTensor2 recompose() const {
    return {lambda1 * v1.x * v1.x + lambda2 * v2.x * v2.x,
            lambda1 * v1.x * v1.y + lambda2 * v2.x * v2.y,
            lambda1 * v1.y * v1.y + lambda2 * v2.y * v2.y};
  }
};

struct MetricBounds {
  double h_min = 1e-3;
  double h_max = 1.0;
};

/// Closed-form eigendecomposition of a symmetric 2x2 tensor. Throws on
/// non-finite entries.
SpectralDecomp2 spectral_decompose(const SpdTensor2& t);

/// Per-vertex Hessian of the P1 field u by double gradient recovery
/// (symmetrized). Exact for globally quadratic u at interior vertices whose
/// one-ring is interior.
std::vector<SpdTensor2> recover_hessian(const Mesh& mesh, const ScalarField& u);
std::vector<SpdTensor2> recover_hessian(const Mesh& mesh, std::span<const Vec2> positions,
                                        const ScalarField& u);

/// Interpolation-error metric: Hessian eigenvalues clamped into
/// [1/h_max^2, 1/h_min^2], eigenvectors kept.
MetricField physical_metric(const std::vector<SpdTensor2>& hessian, const MetricBounds& bounds);

struct LevelsetMetricResult {
  MetricField metric;
  int degenerate_gradient_count = 0;  // banded vertices with vanishing gradient
};

/// Interface-tracking metric: inside |phi| <= band_width the normal size is
/// eps and the tangential size follows the tangential curvature of phi;
/// outside, the isotropic size grows linearly from eps up to h_max. All
/// eigenvalues clamped to the bounds.
LevelsetMetricResult levelset_metric(const Mesh& mesh, const ScalarField& phi, double eps,
                                     double band_width, const MetricBounds& bounds);

/// Metric intersection by simultaneous reduction: largest ellipse contained in
/// both input ellipses. Throws on non-SPD input.
SpdTensor2 intersect(const SpdTensor2& m1, const SpdTensor2& m2);

/// Edge length in the metric pair, reducing to |e|/h for a uniform isotropic
/// metric; log-weighted mean between the endpoint lengths.
double metric_edge_length(const Vec2& pa, const Vec2& pb, const SpdTensor2& ma,
                          const SpdTensor2& mb);

/// Log-Euclidean combination of the corner metrics with barycentric weights.
SpdTensor2 interpolate_metric(const std::array<SpdTensor2, 3>& corners,
                              const std::array<double, 3>& weights);

}  // namespace madapt
