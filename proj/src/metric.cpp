#include "madapt/metric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "madapt/levelset.hpp"

namespace madapt {

SpectralDecomp2 spectral_decompose(const SpdTensor2& t) {
  if (!std::isfinite(t.m11) || !std::isfinite(t.m12) || !std::isfinite(t.m22))
    throw std::invalid_argument("spectral_decompose: non-finite entries");

  const double mean = 0.5 * (t.m11 + t.m22);
  const double half_diff = 0.5 * (t.m11 - t.m22);
  const double disc = std::hypot(half_diff, t.m12);

  SpectralDecomp2 d;
  d.lambda1 = mean + disc;
  d.lambda2 = mean - disc;

  // Eigenvector of lambda1 from the null space of (t - lambda1 I); pick the
  // better-conditioned of the two candidate rows.
  const Vec2 c1{disc + half_diff, t.m12};
  const Vec2 c2{t.m12, disc - half_diff};
  const Vec2 c = norm2(c1) >= norm2(c2) ? c1 : c2;
  const double n = norm(c);
  d.v1 = n > 0.0 ? c / n : Vec2{1.0, 0.0};
  d.v2 = perp(d.v1);  // det(R) = +1
  return d;
}

std::vector<SpdTensor2> recover_hessian(const Mesh& mesh, std::span<const Vec2> positions,
                                        const ScalarField& u) {
  const VectorField g = p1_gradient(mesh, positions, u);
  ScalarField gx(g.size()), gy(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    gx[i] = g[i].x;
    gy[i] = g[i].y;
  }
  const VectorField dgx = p1_gradient(mesh, positions, gx);
  const VectorField dgy = p1_gradient(mesh, positions, gy);

  std::vector<SpdTensor2> hessian(g.size());
  for (size_t i = 0; i < g.size(); ++i)
    hessian[i] = {dgx[i].x, 0.5 * (dgx[i].y + dgy[i].x), dgy[i].y};
  return hessian;
}

std::vector<SpdTensor2> recover_hessian(const Mesh& mesh, const ScalarField& u) {
  const VectorField pos = mesh.positions();
  return recover_hessian(mesh, pos, u);
}

namespace {

void check_bounds(const MetricBounds& bounds) {
  if (!(bounds.h_min > 0.0) || !(bounds.h_min < bounds.h_max))
    throw std::invalid_argument("MetricBounds: need 0 < h_min < h_max");
}

double clamp_eigenvalue(double abs_value, double lo, double hi) {
  return std::min(std::max(abs_value, lo), hi);
}

}  // namespace

MetricField physical_metric(const std::vector<SpdTensor2>& hessian, const MetricBounds& bounds) {
  check_bounds(bounds);
  const double lo = 1.0 / (bounds.h_max * bounds.h_max);
  const double hi = 1.0 / (bounds.h_min * bounds.h_min);

  MetricField metric(hessian.size());
  for (size_t i = 0; i < hessian.size(); ++i) {
    SpectralDecomp2 d = spectral_decompose(hessian[i]);
    d.lambda1 = clamp_eigenvalue(std::fabs(d.lambda1), lo, hi);
    d.lambda2 = clamp_eigenvalue(std::fabs(d.lambda2), lo, hi);
    metric[i] = d.recompose();
  }
  return metric;
}

LevelsetMetricResult levelset_metric(const Mesh& mesh, const ScalarField& phi, double eps,
                                     double band_width, const MetricBounds& bounds) {
  check_bounds(bounds);
  if (!(eps > 0.0)) throw std::invalid_argument("levelset_metric: eps must be > 0");
  if (!(band_width > 0.0)) throw std::invalid_argument("levelset_metric: band_width must be > 0");
  if (phi.size() != mesh.vertices.size())
    throw std::invalid_argument("levelset_metric: field length does not match vertex count");

  const double lo = 1.0 / (bounds.h_max * bounds.h_max);
  const double hi = 1.0 / (bounds.h_min * bounds.h_min);

  const VectorField grad = p1_gradient(mesh, phi);
  const std::vector<SpdTensor2> hess = recover_hessian(mesh, phi);

  LevelsetMetricResult result;
  result.metric.resize(mesh.vertices.size());
  for (size_t i = 0; i < result.metric.size(); ++i) {
    const double dist = std::fabs(phi[i]);
    if (dist <= band_width) {
      const double gn = norm(grad[i]);
      if (gn < 1e-12) {
        ++result.degenerate_gradient_count;
        result.metric[i] =
            SpdTensor2::isotropic(clamp_eigenvalue(1.0 / (eps * eps), lo, hi));
        continue;
      }
      const Vec2 n = grad[i] / gn;
      const Vec2 t = perp(n);
      const double tangential_curv = std::fabs(hess[i].quad(t));
      const double lambda_n = clamp_eigenvalue(1.0 / (eps * eps), lo, hi);
      const double lambda_t = clamp_eigenvalue(std::max(tangential_curv / eps, lo), lo, hi);
      SpectralDecomp2 d;
      d.lambda1 = lambda_n;
      d.lambda2 = lambda_t;
      d.v1 = n;
      d.v2 = t;
      result.metric[i] = d.recompose();
    } else {
      // Isotropic growth at unit rate from the band edge, saturating at h_max.
      const double h = std::min(bounds.h_max, std::max(eps + (dist - band_width), bounds.h_min));
      result.metric[i] = SpdTensor2::isotropic(clamp_eigenvalue(1.0 / (h * h), lo, hi));
    }
  }
  return result;
}

namespace {

Vec2 null_vector(const SpdTensor2& s) {
  // Null space of a (nearly) singular symmetric tensor.
  const Vec2 c1{s.m12, -s.m11};
  const Vec2 c2{s.m22, -s.m12};
  const Vec2 c = norm2(c1) >= norm2(c2) ? c1 : c2;
  const double n = norm(c);
  return n > 0.0 ? c / n : Vec2{1.0, 0.0};
}

}  // namespace

SpdTensor2 intersect(const SpdTensor2& m1, const SpdTensor2& m2) {
  if (!m1.is_spd() || !m2.is_spd())
    throw std::invalid_argument("intersect: inputs must be symmetric positive definite");

  // Generalized eigenvalues of the pencil det(m2 - mu m1) = 0.
  const double a = m1.det();
  const double b = m1.m11 * m2.m22 + m2.m11 * m1.m22 - 2.0 * m1.m12 * m2.m12;
  const double c = m2.det();
  const double disc = std::max(b * b - 4.0 * a * c, 0.0);
  const double sq = std::sqrt(disc);
  const double mu1 = (b + sq) / (2.0 * a);
  const double mu2 = (b - sq) / (2.0 * a);

  if (std::fabs(mu1 - mu2) < 1e-10 * std::fabs(mu1)) {
    // Near-multiple root: m2 ~ mu m1, handled in m1's eigenbasis.
    SpectralDecomp2 d = spectral_decompose(m1);
    d.lambda1 = std::max(d.lambda1, m2.quad(d.v1));
    d.lambda2 = std::max(d.lambda2, m2.quad(d.v2));
    return d.recompose();
  }

  auto shifted = [](const SpdTensor2& x, const SpdTensor2& y, double mu) {
    return SpdTensor2{x.m11 - mu * y.m11, x.m12 - mu * y.m12, x.m22 - mu * y.m22};
  };
  const Vec2 p1 = null_vector(shifted(m2, m1, mu1));
  const Vec2 p2 = null_vector(shifted(m2, m1, mu2));

  const double w1 = std::max(m1.quad(p1), m2.quad(p1));
  const double w2 = std::max(m1.quad(p2), m2.quad(p2));

  // M = P^{-T} diag(w) P^{-1} with P = [p1 p2] columns.
  const double det_p = p1.x * p2.y - p2.x * p1.y;
  const Vec2 q1{p2.y / det_p, -p2.x / det_p};   // first row of P^{-1}
  const Vec2 q2{-p1.y / det_p, p1.x / det_p};   // second row
  return {w1 * q1.x * q1.x + w2 * q2.x * q2.x,
          w1 * q1.x * q1.y + w2 * q2.x * q2.y,
          w1 * q1.y * q1.y + w2 * q2.y * q2.y};
}

double metric_edge_length(const Vec2& pa, const Vec2& pb, const SpdTensor2& ma,
                          const SpdTensor2& mb) {
  if (!ma.is_spd() || !mb.is_spd())
    throw std::invalid_argument("metric_edge_length: tensors must be SPD");
  const Vec2 e = pb - pa;
  if (norm2(e) == 0.0) return 0.0;
  const double la = std::sqrt(ma.quad(e));
  const double lb = std::sqrt(mb.quad(e));
  if (std::fabs(la - lb) < 1e-12 * std::max(la, lb)) return la;
  // Length under linearly interpolated size along the edge; symmetric and
  // positive for any endpoint pair.
  return la * lb * std::log(la / lb) / (la - lb);
}

SpdTensor2 interpolate_metric(const std::array<SpdTensor2, 3>& corners,
                              const std::array<double, 3>& weights) {
  double wsum = 0.0;
  for (double w : weights) {
    if (w < -1e-12) throw std::invalid_argument("interpolate_metric: negative weight");
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("interpolate_metric: weights must sum to 1");

  // Log-Euclidean mean: exp(sum w_i log M_i).
  SpdTensor2 log_sum{0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    if (!corners[static_cast<size_t>(k)].is_spd())
      throw std::invalid_argument("interpolate_metric: corner metric not SPD");
    SpectralDecomp2 d = spectral_decompose(corners[static_cast<size_t>(k)]);
    d.lambda1 = std::log(d.lambda1);
    d.lambda2 = std::log(d.lambda2);
    const SpdTensor2 lg = d.recompose();
    const double w = weights[static_cast<size_t>(k)];
    log_sum.m11 += w * lg.m11;
    log_sum.m12 += w * lg.m12;
    log_sum.m22 += w * lg.m22;
  }
  SpectralDecomp2 d = spectral_decompose(log_sum);
  d.lambda1 = std::exp(d.lambda1);
  d.lambda2 = std::exp(d.lambda2);
  return d.recompose();
}

}  // namespace madapt
