#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "madapt/levelset.hpp"
#include "madapt/mesh.hpp"
#include "madapt/monitor.hpp"

namespace madapt {

struct LaplacianClosure {};

struct ElasticityClosure {
  double mu = 1.0;
  double lambda = 1.0;
};

using Closure = std::variant<LaplacianClosure, ElasticityClosure>;

enum class Safeguard { reject_and_halve, clamp };

struct SolverConfig {
  Closure closure = LaplacianClosure{};
  int max_outer_iters = 5000;
  int jacobi_sweeps_per_outer = 1;
  double residual_drop = 1e-3;   // stop when the increment norm falls below
                                 // residual_drop times its first value
  double step_limiter = 1.0;     // in (0, 1]
  Safeguard safeguard = Safeguard::reject_and_halve;
  double tau = 0.0;              // pseudo-time damping of the diagonal
};

enum class ConstraintKind : std::uint8_t { free_vertex = 0, fixed = 1, fixed_x = 2, fixed_y = 3 };

struct Constraints {
  std::vector<ConstraintKind> kind;
  VectorField value;  // prescribed displacement where (partially) fixed
};

/// Homogeneous Dirichlet data on every boundary-tagged vertex.
Constraints make_dirichlet_constraints(const Mesh& mesh);
/// Tangential slip on straight axis-aligned boundary edges (the normal
/// component is fixed; corners are fully fixed). Throws if a boundary edge is
/// not axis-aligned.
Constraints make_slip_constraints(const Mesh& mesh);

/// Sparse symmetric block system over the vertex adjacency: per-vertex 2x2
/// diagonal blocks plus off-diagonal blocks stored CSR-style.
struct AssembledSystem {
  int num_vertices = 0;
  std::vector<Mat2> diag;
  std::vector<int> row_offset;  // size num_vertices + 1
  std::vector<int> cols;        // sorted neighbor indices per row
  std::vector<Mat2> blocks;
  std::vector<Vec2> force;

  Vec2 row_apply(int i, const VectorField& delta) const;
  int block_index(int i, int j) const;  // -1 if j is not adjacent to i
};

/// K from the weighted Laplacian closure and F from the divergence of
/// omega * Id, both on the reference configuration. omega is taken
/// piecewise-constant per element (vertex average). Throws on non-positive
/// omega.
AssembledSystem assemble_laplacian(const Mesh& ref_mesh, const Adjacency& adj,
                                   const MonitorField& omega);

/// K from the linear elasticity closure (independent of omega); F identical in
/// form to the Laplacian force.
AssembledSystem assemble_elasticity(const Mesh& ref_mesh, const Adjacency& adj, double mu,
                                    double lambda, const MonitorField& omega);

/// One simultaneous Jacobi update of all free vertices:
/// delta_i <- delta_i - step * D_i^{-1} ((K delta)_i - F_i), with D_i the
/// diagonal block optionally augmented by diag_augment[i] * I. Constrained
/// vertices keep their prescribed components.
VectorField jacobi_sweep(const AssembledSystem& system, const VectorField& delta,
                         const Constraints& constraints, double step = 1.0,
                         const std::vector<double>* diag_augment = nullptr);

/// Monitor inputs for a solve: an analytic level-set is re-evaluated at the
/// current vertex positions every outer iteration; plain fields stay attached
/// to vertices.
struct MonitorInputs {
  std::optional<AnalyticLevelSet> levelset;
  FieldSet fields;
};

enum class SolveStatus { converged, budget_exhausted, inversion_failure };

struct DiagnosticsRow {
  int iteration = 0;
  double residual = 0.0;        // increment norm
  double residual_ratio = 0.0;  // relative to the first increment
  double min_signed_area = 0.0;
  int inversions = 0;  // safeguard activations this iteration
  double wall_ms = 0.0;
};

struct SolveResult {
  VectorField displacement;
  SolveStatus status = SolveStatus::budget_exhausted;
  int iterations = 0;
  int total_inversions = 0;
  std::vector<DiagnosticsRow> history;

  bool converged() const { return status == SolveStatus::converged; }
};

/// Outer Picard loop: refresh the monitor at current positions, reassemble
/// (force only, for elasticity), relax with Jacobi sweeps, safeguard against
/// element inversion, stop on increment drop or budget exhaustion. Every
/// non-failure return carries a displacement whose deformed mesh is valid.
SolveResult solve(const Mesh& ref_mesh, const MonitorSpec& spec, const MonitorInputs& inputs,
                  const SolverConfig& config, const Constraints* boundary = nullptr,
                  const VectorField* initial_displacement = nullptr);

/// Copy of the mesh with positions displaced; validity is the caller's check.
Mesh apply_displacement(const Mesh& ref_mesh, const VectorField& displacement);

}  // namespace madapt
