#include "madapt/mmpde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace madapt {

Constraints make_dirichlet_constraints(const Mesh& mesh) {
  Constraints bc;
  bc.kind.assign(mesh.vertices.size(), ConstraintKind::free_vertex);
  bc.value.assign(mesh.vertices.size(), Vec2{0.0, 0.0});
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    if (mesh.vertices[i].boundary_tag != 0) bc.kind[i] = ConstraintKind::fixed;
  return bc;
}

Constraints make_slip_constraints(const Mesh& mesh) {
  Constraints bc;
  bc.kind.assign(mesh.vertices.size(), ConstraintKind::free_vertex);
  bc.value.assign(mesh.vertices.size(), Vec2{0.0, 0.0});

  auto restrict_normal = [&bc](int v, ConstraintKind normal_fixed) {
    ConstraintKind& k = bc.kind[static_cast<size_t>(v)];
    if (k == ConstraintKind::free_vertex)
      k = normal_fixed;
    else if (k != normal_fixed)
      k = ConstraintKind::fixed;  // corner: both normals constrained
  };

  const double tol = 1e-12 * mesh.bbox_diagonal();
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const Vec2 d = mesh.position(e.b) - mesh.position(e.a);
    if (std::fabs(d.x) <= tol) {
      restrict_normal(e.a, ConstraintKind::fixed_x);  // vertical edge: fix x
      restrict_normal(e.b, ConstraintKind::fixed_x);
    } else if (std::fabs(d.y) <= tol) {
      restrict_normal(e.a, ConstraintKind::fixed_y);
      restrict_normal(e.b, ConstraintKind::fixed_y);
    } else {
      throw std::runtime_error("make_slip_constraints: boundary edge (" + std::to_string(e.a) +
                               "," + std::to_string(e.b) + ") is not axis-aligned");
    }
  }
  return bc;
}

int AssembledSystem::block_index(int i, int j) const {
  const int lo = row_offset[static_cast<size_t>(i)];
  const int hi = row_offset[static_cast<size_t>(i) + 1];
  const auto begin = cols.begin() + lo;
  const auto end = cols.begin() + hi;
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<int>(it - cols.begin());
}

Vec2 AssembledSystem::row_apply(int i, const VectorField& delta) const {
  Vec2 r = diag[static_cast<size_t>(i)] * delta[static_cast<size_t>(i)];
  const int lo = row_offset[static_cast<size_t>(i)];
  const int hi = row_offset[static_cast<size_t>(i) + 1];
  for (int k = lo; k < hi; ++k)
    r += blocks[static_cast<size_t>(k)] * delta[static_cast<size_t>(cols[static_cast<size_t>(k)])];
  return r;
}

namespace {

void init_structure(AssembledSystem& sys, const Mesh& mesh, const Adjacency& adj) {
  sys.num_vertices = mesh.num_vertices();
  sys.diag.assign(mesh.vertices.size(), Mat2{});
  sys.force.assign(mesh.vertices.size(), Vec2{0.0, 0.0});
  sys.row_offset.assign(mesh.vertices.size() + 1, 0);
  for (size_t i = 0; i < adj.vertex_neighbors.size(); ++i)
    sys.row_offset[i + 1] = sys.row_offset[i] + static_cast<int>(adj.vertex_neighbors[i].size());
  sys.cols.clear();
  sys.cols.reserve(static_cast<size_t>(sys.row_offset.back()));
  for (const auto& nbrs : adj.vertex_neighbors)
    sys.cols.insert(sys.cols.end(), nbrs.begin(), nbrs.end());
  sys.blocks.assign(sys.cols.size(), Mat2{});
}

void zero_system(AssembledSystem& sys) {
  std::fill(sys.diag.begin(), sys.diag.end(), Mat2{});
  std::fill(sys.blocks.begin(), sys.blocks.end(), Mat2{});
  std::fill(sys.force.begin(), sys.force.end(), Vec2{0.0, 0.0});
}

struct ElementGeometry {
  double area;
  Vec2 grad[3];
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[static_cast<size_t>(t)].v;
  const Vec2& p0 = mesh.position(tri[0]);
  const Vec2& p1 = mesh.position(tri[1]);
  const Vec2& p2 = mesh.position(tri[2]);
  ElementGeometry g;
  g.area = signed_area(p0, p1, p2);
  if (!(g.area > 0.0))
    throw std::runtime_error("assemble: reference triangle " + std::to_string(t) +
                             " has non-positive area");
  const double inv = 1.0 / (2.0 * g.area);
  g.grad[0] = Vec2{p1.y - p2.y, p2.x - p1.x} * inv;
  g.grad[1] = Vec2{p2.y - p0.y, p0.x - p2.x} * inv;
  g.grad[2] = Vec2{p0.y - p1.y, p1.x - p0.x} * inv;
  return g;
}

void add_block(AssembledSystem& sys, int i, int j, const Mat2& contribution) {
  if (i == j) {
    sys.diag[static_cast<size_t>(i)] += contribution;
    return;
  }
  const int idx = sys.block_index(i, j);
  if (idx < 0) throw std::runtime_error("assemble: missing adjacency entry");
  sys.blocks[static_cast<size_t>(idx)] += contribution;
}

double element_omega(const MonitorField& omega, const Triangle& tri) {
  return (omega[static_cast<size_t>(tri.v[0])] + omega[static_cast<size_t>(tri.v[1])] +
          omega[static_cast<size_t>(tri.v[2])]) /
         3.0;
}

void check_omega(const Mesh& mesh, const MonitorField& omega) {
  if (omega.size() != mesh.vertices.size())
    throw std::invalid_argument("assemble: monitor length does not match vertex count");
  for (double w : omega)
    if (!(w > 0.0)) throw std::invalid_argument("assemble: monitor must be strictly positive");
}

/// F_i = -sum_K omega_K |K| grad(phi_i), the weak divergence of omega * Id.
void fill_force(AssembledSystem& sys, const Mesh& mesh, const MonitorField& omega) {
  std::fill(sys.force.begin(), sys.force.end(), Vec2{0.0, 0.0});
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangles[static_cast<size_t>(t)];
    const ElementGeometry g = element_geometry(mesh, t);
    const double w = element_omega(omega, tri) * g.area;
    for (int a = 0; a < 3; ++a)
      sys.force[static_cast<size_t>(tri.v[static_cast<size_t>(a)])] -= g.grad[a] * w;
  }
}

void fill_laplacian_stiffness(AssembledSystem& sys, const Mesh& mesh, const MonitorField& omega) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangles[static_cast<size_t>(t)];
    const ElementGeometry g = element_geometry(mesh, t);
    const double w = element_omega(omega, tri) * g.area;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        add_block(sys, tri.v[static_cast<size_t>(a)], tri.v[static_cast<size_t>(b)],
                  Mat2::scaled_identity(w * dot(g.grad[a], g.grad[b])));
  }
}

void fill_elasticity_stiffness(AssembledSystem& sys, const Mesh& mesh, double mu, double lambda) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangles[static_cast<size_t>(t)];
    const ElementGeometry g = element_geometry(mesh, t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        // 2 mu eps(u):eps(v) + lambda div(u) div(v) with P1 gradients.
        const Mat2 block = (Mat2::scaled_identity(mu * dot(g.grad[a], g.grad[b])) +
                            Mat2::outer(g.grad[b], g.grad[a]) * mu +
                            Mat2::outer(g.grad[a], g.grad[b]) * lambda) *
                           g.area;
        add_block(sys, tri.v[static_cast<size_t>(a)], tri.v[static_cast<size_t>(b)], block);
      }
  }
}

}  // namespace

AssembledSystem assemble_laplacian(const Mesh& ref_mesh, const Adjacency& adj,
                                   const MonitorField& omega) {
  check_omega(ref_mesh, omega);
  AssembledSystem sys;
  init_structure(sys, ref_mesh, adj);
  fill_laplacian_stiffness(sys, ref_mesh, omega);
  fill_force(sys, ref_mesh, omega);
  return sys;
}

AssembledSystem assemble_elasticity(const Mesh& ref_mesh, const Adjacency& adj, double mu,
                                    double lambda, const MonitorField& omega) {
  if (!(mu > 0.0) || lambda < 0.0)
    throw std::invalid_argument("assemble_elasticity: need mu > 0 and lambda >= 0");
  check_omega(ref_mesh, omega);
  AssembledSystem sys;
  init_structure(sys, ref_mesh, adj);
  fill_elasticity_stiffness(sys, ref_mesh, mu, lambda);
  fill_force(sys, ref_mesh, omega);
  return sys;
}

VectorField jacobi_sweep(const AssembledSystem& system, const VectorField& delta,
                         const Constraints& constraints, double step,
                         const std::vector<double>* diag_augment) {
  if (delta.size() != static_cast<size_t>(system.num_vertices))
    throw std::invalid_argument("jacobi_sweep: displacement length mismatch");
  if (constraints.kind.size() != delta.size())
    throw std::invalid_argument("jacobi_sweep: constraint length mismatch");

  VectorField next(delta.size());
  for (int i = 0; i < system.num_vertices; ++i) {
    const ConstraintKind kind = constraints.kind[static_cast<size_t>(i)];
    if (kind == ConstraintKind::fixed) {
      next[static_cast<size_t>(i)] = constraints.value[static_cast<size_t>(i)];
      continue;
    }
    const Vec2 residual = system.row_apply(i, delta) - system.force[static_cast<size_t>(i)];
    Mat2 d = system.diag[static_cast<size_t>(i)];
    if (diag_augment) {
      d.a11 += (*diag_augment)[static_cast<size_t>(i)];
      d.a22 += (*diag_augment)[static_cast<size_t>(i)];
    }
    Vec2 update = delta[static_cast<size_t>(i)];
    if (kind == ConstraintKind::free_vertex) {
      if (std::fabs(d.det()) < 1e-300)
        throw std::runtime_error("jacobi_sweep: singular diagonal block at vertex " +
                                 std::to_string(i));
      update -= d.solve(residual) * step;
    } else if (kind == ConstraintKind::fixed_x) {
      if (d.a22 == 0.0)
        throw std::runtime_error("jacobi_sweep: singular diagonal block at vertex " +
                                 std::to_string(i));
      update.x = constraints.value[static_cast<size_t>(i)].x;
      update.y -= step * residual.y / d.a22;
    } else {  // fixed_y
      if (d.a11 == 0.0)
        throw std::runtime_error("jacobi_sweep: singular diagonal block at vertex " +
                                 std::to_string(i));
      update.y = constraints.value[static_cast<size_t>(i)].y;
      update.x -= step * residual.x / d.a11;
    }
    next[static_cast<size_t>(i)] = update;
  }
  return next;
}

Mesh apply_displacement(const Mesh& ref_mesh, const VectorField& displacement) {
  if (displacement.size() != ref_mesh.vertices.size())
    throw std::invalid_argument("apply_displacement: length mismatch");
  Mesh out = ref_mesh;
  for (size_t i = 0; i < out.vertices.size(); ++i) out.vertices[i].position += displacement[i];
  return out;
}

namespace {

/// Count of non-positive signed areas and the minimum area of ref + delta.
std::pair<int, double> deformed_area_scan(const Mesh& mesh, const VectorField& delta) {
  int inverted = 0;
  double min_area = std::numeric_limits<double>::infinity();
  for (const Triangle& tri : mesh.triangles) {
    const double area = signed_area(mesh.position(tri.v[0]) + delta[static_cast<size_t>(tri.v[0])],
                                    mesh.position(tri.v[1]) + delta[static_cast<size_t>(tri.v[1])],
                                    mesh.position(tri.v[2]) + delta[static_cast<size_t>(tri.v[2])]);
    min_area = std::min(min_area, area);
    if (area <= 0.0) ++inverted;
  }
  if (mesh.triangles.empty()) min_area = 0.0;
  return {inverted, min_area};
}

FieldSet refresh_fields(const Mesh& mesh, const MonitorInputs& inputs,
                        const VectorField& positions) {
  FieldSet fields = inputs.fields;
  if (inputs.levelset) {
    if (const auto* tab = std::get_if<TabulatedLevelSet>(&*inputs.levelset)) {
      fields.phi = tab->values;  // vertex-attached, moves with the nodes
    } else {
      ScalarField phi(mesh.vertices.size());
      for (size_t i = 0; i < positions.size(); ++i)
        phi[i] = eval_levelset(*inputs.levelset, positions[i]);
      fields.phi = std::move(phi);
    }
  }
  return fields;
}

std::vector<double> lumped_mass(const Mesh& mesh) {
  std::vector<double> mass(mesh.vertices.size(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle& tri = mesh.triangles[static_cast<size_t>(t)];
    const double third = signed_area(mesh.position(tri.v[0]), mesh.position(tri.v[1]),
                                     mesh.position(tri.v[2])) /
                         3.0;
    for (int k = 0; k < 3; ++k) mass[static_cast<size_t>(tri.v[static_cast<size_t>(k)])] += third;
  }
  return mass;
}

/// Shortest incident edge per vertex, used by the clamp safeguard.
std::vector<double> local_edge_scale(const Mesh& mesh, const Adjacency& adj,
                                     const VectorField& positions) {
  std::vector<double> scale(mesh.vertices.size(), std::numeric_limits<double>::infinity());
  for (const auto& e : adj.edges) {
    const double len = norm(positions[static_cast<size_t>(e[0])] - positions[static_cast<size_t>(e[1])]);
    scale[static_cast<size_t>(e[0])] = std::min(scale[static_cast<size_t>(e[0])], len);
    scale[static_cast<size_t>(e[1])] = std::min(scale[static_cast<size_t>(e[1])], len);
  }
  return scale;
}

double increment_norm(const VectorField& a, const VectorField& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += norm2(a[i] - b[i]);
  return std::sqrt(sum);
}

}  // namespace

SolveResult solve(const Mesh& ref_mesh, const MonitorSpec& spec, const MonitorInputs& inputs,
                  const SolverConfig& config, const Constraints* boundary,
                  const VectorField* initial_displacement) {
  if (config.max_outer_iters < 1 || config.jacobi_sweeps_per_outer < 1)
    throw std::invalid_argument("solve: iteration counts must be >= 1");
  if (!(config.residual_drop > 0.0) || !(config.residual_drop < 1.0))
    throw std::invalid_argument("solve: residual_drop must be in (0,1)");
  if (!(config.step_limiter > 0.0) || config.step_limiter > 1.0)
    throw std::invalid_argument("solve: step_limiter must be in (0,1]");
  if (config.tau < 0.0) throw std::invalid_argument("solve: tau must be >= 0");

  const auto t_start = std::chrono::steady_clock::now();
  const Adjacency adj = build_adjacency(ref_mesh);

  Constraints bc = boundary ? *boundary : make_dirichlet_constraints(ref_mesh);
  if (bc.kind.size() != ref_mesh.vertices.size() || bc.value.size() != ref_mesh.vertices.size())
    throw std::invalid_argument("solve: constraint length mismatch");

  SolveResult result;
  result.displacement.assign(ref_mesh.vertices.size(), Vec2{0.0, 0.0});
  if (initial_displacement) {
    if (initial_displacement->size() != ref_mesh.vertices.size())
      throw std::invalid_argument("solve: initial displacement length mismatch");
    result.displacement = *initial_displacement;
  }
  // Constrained components hold their prescribed values from the start.
  for (size_t i = 0; i < bc.kind.size(); ++i) {
    if (bc.kind[i] == ConstraintKind::fixed)
      result.displacement[i] = bc.value[i];
    else if (bc.kind[i] == ConstraintKind::fixed_x)
      result.displacement[i].x = bc.value[i].x;
    else if (bc.kind[i] == ConstraintKind::fixed_y)
      result.displacement[i].y = bc.value[i].y;
  }

  const VectorField ref_positions = ref_mesh.positions();
  const bool is_elastic = std::holds_alternative<ElasticityClosure>(config.closure);

  AssembledSystem sys;
  init_structure(sys, ref_mesh, adj);
  if (is_elastic) {
    const auto& ela = std::get<ElasticityClosure>(config.closure);
    if (!(ela.mu > 0.0) || ela.lambda < 0.0)
      throw std::invalid_argument("solve: need mu > 0 and lambda >= 0");
    fill_elasticity_stiffness(sys, ref_mesh, ela.mu, ela.lambda);
  }

  std::vector<double> diag_augment;
  if (config.tau > 0.0) {
    diag_augment = lumped_mass(ref_mesh);
    for (double& m : diag_augment) m *= config.tau;  // delta_tau = 1
  }

  MonitorState monitor_state;
  VectorField positions(ref_mesh.vertices.size());
  double first_increment = -1.0;

  for (int outer = 1; outer <= config.max_outer_iters; ++outer) {
    for (size_t i = 0; i < positions.size(); ++i)
      positions[i] = ref_positions[i] + result.displacement[i];

    const FieldSet fields = refresh_fields(ref_mesh, inputs, positions);
    const MonitorField omega = build_monitor_field(ref_mesh, spec, fields, positions, &monitor_state);

    if (!is_elastic) {
      zero_system(sys);
      fill_laplacian_stiffness(sys, ref_mesh, omega);
    }
    fill_force(sys, ref_mesh, omega);

    // Relax, then safeguard against inverted elements.
    int safeguard_hits = 0;
    VectorField candidate;
    double scale = config.step_limiter;
    double clamp_fraction = 0.25;
    std::pair<int, double> scan{0, 0.0};
    bool accepted = false;
    for (int attempt = 0; attempt <= 10; ++attempt) {
      candidate = result.displacement;
      for (int s = 0; s < config.jacobi_sweeps_per_outer; ++s)
        candidate = jacobi_sweep(sys, candidate, bc, scale,
                                 diag_augment.empty() ? nullptr : &diag_augment);
      if (config.safeguard == Safeguard::clamp && attempt > 0) {
        const std::vector<double> scale_len = local_edge_scale(ref_mesh, adj, positions);
        for (size_t i = 0; i < candidate.size(); ++i) {
          const Vec2 inc = candidate[i] - result.displacement[i];
          const double limit = clamp_fraction * scale_len[i];
          const double len = norm(inc);
          if (len > limit) candidate[i] = result.displacement[i] + inc * (limit / len);
        }
      }
      scan = deformed_area_scan(ref_mesh, candidate);
      if (scan.first == 0) {
        accepted = true;
        break;
      }
      ++safeguard_hits;
      if (config.safeguard == Safeguard::reject_and_halve)
        scale *= 0.5;
      else
        clamp_fraction *= 0.5;
    }
    result.total_inversions += safeguard_hits;

    if (!accepted) {
      // Last valid state stays in result.displacement.
      result.status = SolveStatus::inversion_failure;
      result.iterations = outer;
      return result;
    }

    const double inc = increment_norm(candidate, result.displacement);
    result.displacement = std::move(candidate);
    if (first_increment < 0.0) first_increment = inc;

    DiagnosticsRow row;
    row.iteration = outer;
    row.residual = inc;
    row.residual_ratio = first_increment > 0.0 ? inc / first_increment : 0.0;
    row.min_signed_area = scan.second;
    row.inversions = safeguard_hits;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            t_start)
                      .count();
    result.history.push_back(row);
    result.iterations = outer;

    if (inc <= config.residual_drop * first_increment) {
      result.status = SolveStatus::converged;
      return result;
    }
  }

  result.status = SolveStatus::budget_exhausted;
  return result;
}

}  // namespace madapt
