#pragma once

#include <functional>
#include <span>
#include <variant>

#include "madapt/mesh.hpp"

namespace madapt {

struct CircleLevelSet {
  Vec2 center{0.0, 0.0};
  double radius = 0.5;
};

/// Polar cosine curve |p - c| = base_radius + amplitude * cos(lobes * theta).
struct FlowerLevelSet {
  Vec2 center{0.0, 0.0};
  double base_radius = 0.5;
  double amplitude = 0.2;
  int lobes = 4;
};

/// Per-vertex sampled level-set; values travel with the vertices and cannot be
/// re-evaluated at arbitrary points.
struct TabulatedLevelSet {
  ScalarField values;
};

using AnalyticLevelSet = std::variant<CircleLevelSet, FlowerLevelSet, TabulatedLevelSet>;

/// Signed value at a point; negative inside. Throws for TabulatedLevelSet.
double eval_levelset(const AnalyticLevelSet& ls, const Vec2& p);

struct SpiralSizemapParams {
  double a = 0.6;
  double s = 0.5;
  double offset1 = 0.005;
  double offset2 = 0.0125;
  double base = 1.6;
};

/// Isotropic size describing a double Archimedean spiral.
double spiral_sizemap(const Vec2& p, const SpiralSizemapParams& params = {});

/// Pointwise evaluation at the mesh vertices; throws (naming the vertex) on a
/// non-finite result.
ScalarField sample(const Mesh& mesh, const std::function<double(Vec2)>& f);
ScalarField sample(const Mesh& mesh, const AnalyticLevelSet& ls);

/// Per-vertex gradient of the P1 interpolant: element gradients averaged with
/// area weights. Exact for globally linear fields.
VectorField p1_gradient(const Mesh& mesh, const ScalarField& f);
/// Same, with the triangle geometry taken from an explicit (e.g. deformed)
/// position array.
VectorField p1_gradient(const Mesh& mesh, std::span<const Vec2> positions, const ScalarField& f);

struct CurvatureResult {
  ScalarField kappa;
  int degenerate_count = 0;  // vertices where the gradient vanished
};

/// Curvature of the level-set contours, div(grad(phi)/|grad(phi)|), capped to
/// |kappa| <= kappa_max.
CurvatureResult curvature(const Mesh& mesh, const ScalarField& phi, double kappa_max = 100.0);
CurvatureResult curvature(const Mesh& mesh, std::span<const Vec2> positions,
                          const ScalarField& phi, double kappa_max = 100.0);

}  // namespace madapt
