#include "madapt/levelset.hpp"

#include <cmath>
#include <stdexcept>

namespace madapt {

double eval_levelset(const AnalyticLevelSet& ls, const Vec2& p) {
  if (const auto* c = std::get_if<CircleLevelSet>(&ls)) {
    return norm(p - c->center) - c->radius;
  }
  if (const auto* f = std::get_if<FlowerLevelSet>(&ls)) {
    const Vec2 d = p - f->center;
    const double theta = std::atan2(d.y, d.x);
    return norm(d) - (f->base_radius + f->amplitude * std::cos(f->lobes * theta));
  }
  throw std::invalid_argument("eval_levelset: tabulated level-set has no pointwise form");
}

double spiral_sizemap(const Vec2& p, const SpiralSizemapParams& params) {
  const double phi = std::atan2(p.y, p.x);
  const double rho = params.s * std::sqrt(p.x * p.x + p.y * p.y);
  const double pi = std::acos(-1.0);
  const double windings = std::floor(rho / (2.0 * pi * params.a));
  const double theta1 = phi + pi * (1.0 + windings);
  const double theta2 = phi - pi * (1.0 + windings);
  return std::min(params.base + std::fabs(rho - params.a * theta1) + params.offset1,
                  params.base + std::fabs(rho + params.a * theta2) + params.offset2);
}

ScalarField sample(const Mesh& mesh, const std::function<double(Vec2)>& f) {
  ScalarField out(mesh.vertices.size());
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    out[static_cast<size_t>(i)] = f(mesh.position(i));
    if (!std::isfinite(out[static_cast<size_t>(i)]))
      throw std::runtime_error("sample: non-finite value at vertex " + std::to_string(i));
  }
  return out;
}

ScalarField sample(const Mesh& mesh, const AnalyticLevelSet& ls) {
  if (const auto* t = std::get_if<TabulatedLevelSet>(&ls)) {
    if (t->values.size() != mesh.vertices.size())
      throw std::runtime_error("sample: tabulated level-set length does not match vertex count");
    return t->values;
  }
  return sample(mesh, [&ls](Vec2 p) { return eval_levelset(ls, p); });
}

namespace {

struct TriGeometry {
  double area;
  Vec2 grad[3];  // P1 basis gradients
};

TriGeometry tri_geometry(const Vec2& p0, const Vec2& p1, const Vec2& p2, int tri_id,
                         double degenerate_tol) {
  TriGeometry g;
  g.area = signed_area(p0, p1, p2);
  if (!(g.area > degenerate_tol))
    throw std::runtime_error("p1_gradient: degenerate triangle " + std::to_string(tri_id));
  const double inv = 1.0 / (2.0 * g.area);
  g.grad[0] = Vec2{p1.y - p2.y, p2.x - p1.x} * inv;
  g.grad[1] = Vec2{p2.y - p0.y, p0.x - p2.x} * inv;
  g.grad[2] = Vec2{p0.y - p1.y, p1.x - p0.x} * inv;
  return g;
}

}  // namespace

VectorField p1_gradient(const Mesh& mesh, std::span<const Vec2> positions, const ScalarField& f) {
  if (f.size() != mesh.vertices.size())
    throw std::invalid_argument("p1_gradient: field length does not match vertex count");
  if (positions.size() != mesh.vertices.size())
    throw std::invalid_argument("p1_gradient: position count does not match vertex count");

  const double diag = mesh.bbox_diagonal();
  const double tol = 1e-16 * diag * diag;

  VectorField grad(mesh.vertices.size(), Vec2{0.0, 0.0});
  ScalarField weight(mesh.vertices.size(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<size_t>(t)].v;
    const TriGeometry g = tri_geometry(positions[static_cast<size_t>(tri[0])],
                                       positions[static_cast<size_t>(tri[1])],
                                       positions[static_cast<size_t>(tri[2])], t, tol);
    Vec2 element_grad{0.0, 0.0};
    for (int k = 0; k < 3; ++k)
      element_grad += g.grad[k] * f[static_cast<size_t>(tri[static_cast<size_t>(k)])];
    for (int k = 0; k < 3; ++k) {
      grad[static_cast<size_t>(tri[static_cast<size_t>(k)])] += element_grad * g.area;
      weight[static_cast<size_t>(tri[static_cast<size_t>(k)])] += g.area;
    }
  }
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    if (weight[static_cast<size_t>(i)] <= 0.0)
      throw std::runtime_error("p1_gradient: isolated vertex " + std::to_string(i));
    grad[static_cast<size_t>(i)] = grad[static_cast<size_t>(i)] / weight[static_cast<size_t>(i)];
  }
  return grad;
}

VectorField p1_gradient(const Mesh& mesh, const ScalarField& f) {
  const VectorField pos = mesh.positions();
  return p1_gradient(mesh, pos, f);
}

CurvatureResult curvature(const Mesh& mesh, std::span<const Vec2> positions,
                          const ScalarField& phi, double kappa_max) {
  const VectorField grad = p1_gradient(mesh, positions, phi);

  CurvatureResult result;
  result.kappa.assign(mesh.vertices.size(), 0.0);

  ScalarField nx(mesh.vertices.size(), 0.0), ny(mesh.vertices.size(), 0.0);
  std::vector<char> degenerate(mesh.vertices.size(), 0);
  for (size_t i = 0; i < grad.size(); ++i) {
    const double gn = norm(grad[i]);
    if (gn < 1e-12) {
      degenerate[i] = 1;
      ++result.degenerate_count;
      continue;
    }
    nx[i] = grad[i].x / gn;
    ny[i] = grad[i].y / gn;
  }

  const VectorField dnx = p1_gradient(mesh, positions, nx);
  const VectorField dny = p1_gradient(mesh, positions, ny);
  for (size_t i = 0; i < result.kappa.size(); ++i) {
    if (degenerate[i]) continue;  // kappa stays 0 there
    double k = dnx[i].x + dny[i].y;
    if (k > kappa_max) k = kappa_max;
    if (k < -kappa_max) k = -kappa_max;
    result.kappa[i] = k;
  }
  return result;
}

CurvatureResult curvature(const Mesh& mesh, const ScalarField& phi, double kappa_max) {
  const VectorField pos = mesh.positions();
  return curvature(mesh, pos, phi, kappa_max);
}

}  // namespace madapt
