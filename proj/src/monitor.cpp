#include "madapt/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "madapt/levelset.hpp"
#include "madapt/metric.hpp"

namespace madapt {

double omega_gb(double phi, double alpha0, double alpha_phi, double beta_phi) {
  return std::sqrt(alpha0 + alpha_phi * std::exp(-beta_phi * phi * phi));
}

double omega_pc(double phi, const PiecewiseConstantMonitor& spec) {
  if (spec.levels.size() != spec.thresholds.size() + 1)
    throw std::invalid_argument("omega_pc: need one more level than thresholds");
  const double a = std::fabs(phi);
  for (size_t j = 0; j < spec.thresholds.size(); ++j)
    if (a <= spec.thresholds[j]) return spec.levels[j];
  return spec.levels.back();
}

double capped_gradient(double grad_norm, double beta_u, double grad_ref) {
  if (!(grad_ref > 0.0)) throw std::invalid_argument("capped_gradient: grad_ref must be > 0");
  if (!(beta_u > 0.0)) throw std::invalid_argument("capped_gradient: beta_u must be > 0");
  return std::min(1.0, grad_norm / (beta_u * grad_ref));
}

double omega_solution(double capped, double alpha_u) {
  return std::sqrt(1.0 + alpha_u * capped * capped);
}

double omega_combined(double phi, double omega_phi, double omega_u, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("omega_combined: eps must be > 0");
  return std::fabs(phi) <= eps ? omega_phi : std::max(omega_phi, omega_u);
}

double regularized_heaviside(double H, double eps_h) {
  if (!(eps_h > 0.0)) throw std::invalid_argument("regularized_heaviside: eps_h must be > 0");
  if (H < 0.0) throw std::invalid_argument("regularized_heaviside: negative depth");
  if (H > eps_h) return 1.0;
  if (H == 0.0) return 0.0;
  return H / eps_h;
}

double omega_shoreline(double capped_eta, double grad_phi_h_norm, double alpha_eta,
                       double alpha_dry) {
  return std::sqrt(1.0 + alpha_eta * capped_eta * capped_eta +
                   alpha_dry * grad_phi_h_norm * grad_phi_h_norm);
}

namespace {

const ScalarField& require_field(const std::optional<ScalarField>& field, const Mesh& mesh,
                                 const char* name) {
  if (!field)
    throw std::runtime_error(std::string("build_monitor_field: missing required field '") + name +
                             "'");
  if (field->size() != mesh.vertices.size())
    throw std::runtime_error(std::string("build_monitor_field: field '") + name +
                             "' length does not match vertex count");
  return *field;
}

double max_gradient_norm(const VectorField& grad) {
  double m = 0.0;
  for (const Vec2& g : grad) m = std::max(m, norm(g));
  return m;
}

/// Reference gradient for capping, cached when the spec asks for a frozen one.
double reference_gradient(const VectorField& grad, bool frozen, std::optional<double>* cache) {
  if (frozen && cache && *cache) return **cache;
  const double ref = std::max(max_gradient_norm(grad), 1e-300);
  if (cache) *cache = ref;
  return ref;
}

ScalarField inner_levelset_field(const Mesh& mesh,
                                 const std::variant<GradientBasedMonitor, PiecewiseConstantMonitor>& inner,
                                 const ScalarField& phi, std::span<const Vec2> positions);

ScalarField gb_field(const Mesh& mesh, const GradientBasedMonitor& gb, const ScalarField& phi,
                     std::span<const Vec2> positions) {
  ScalarField omega(phi.size());
  if (gb.mode == GradientBasedMonitor::Alpha0Mode::curvature_scaled) {
    const CurvatureResult curv = curvature(mesh, positions, phi, gb.kappa_max);
    for (size_t i = 0; i < phi.size(); ++i) {
      const double alpha0 = std::max(gb.alpha0 * std::fabs(curv.kappa[i]), gb.alpha0_floor);
      omega[i] = omega_gb(phi[i], alpha0, gb.alpha_phi, gb.beta_phi);
    }
  } else {
    for (size_t i = 0; i < phi.size(); ++i)
      omega[i] = omega_gb(phi[i], gb.alpha0, gb.alpha_phi, gb.beta_phi);
  }
  return omega;
}

ScalarField inner_levelset_field(const Mesh& mesh,
                                 const std::variant<GradientBasedMonitor, PiecewiseConstantMonitor>& inner,
                                 const ScalarField& phi, std::span<const Vec2> positions) {
  if (const auto* gb = std::get_if<GradientBasedMonitor>(&inner))
    return gb_field(mesh, *gb, phi, positions);
  const auto& pc = std::get<PiecewiseConstantMonitor>(inner);
  ScalarField omega(phi.size());
  for (size_t i = 0; i < phi.size(); ++i) omega[i] = omega_pc(phi[i], pc);
  return omega;
}

ScalarField solution_field(const Mesh& mesh, const SolutionMonitor& sol, const ScalarField& u,
                           std::span<const Vec2> positions, MonitorState* state) {
  const VectorField grad = p1_gradient(mesh, positions, u);
  const double grad_ref =
      reference_gradient(grad, sol.frozen_reference, state ? &state->grad_ref_u : nullptr);
  ScalarField omega(u.size());
  for (size_t i = 0; i < u.size(); ++i)
    omega[i] = omega_solution(capped_gradient(norm(grad[i]), sol.beta_u, grad_ref), sol.alpha_u);
  return omega;
}

}  // namespace

MonitorField build_monitor_field(const Mesh& mesh, const MonitorSpec& spec, const FieldSet& fields,
                                 std::span<const Vec2> current_positions, MonitorState* state) {
  MonitorField omega;

  if (const auto* gen = std::get_if<GeneralMonitor>(&spec)) {
    const ScalarField& u = require_field(fields.u, mesh, "u");
    const VectorField grad = p1_gradient(mesh, current_positions, u);
    const std::vector<SpdTensor2> hess = recover_hessian(mesh, current_positions, u);
    omega.resize(u.size());
    for (size_t i = 0; i < u.size(); ++i) {
      const double hnorm = std::sqrt(hess[i].m11 * hess[i].m11 + 2.0 * hess[i].m12 * hess[i].m12 +
                                     hess[i].m22 * hess[i].m22);
      omega[i] = std::pow(1.0 + gen->alpha * u[i] + gen->beta * norm(grad[i]) + gen->gamma * hnorm,
                          gen->p);
    }
  } else if (const auto* gb = std::get_if<GradientBasedMonitor>(&spec)) {
    const ScalarField& phi = require_field(fields.phi, mesh, "phi");
    omega = gb_field(mesh, *gb, phi, current_positions);
  } else if (const auto* pc = std::get_if<PiecewiseConstantMonitor>(&spec)) {
    const ScalarField& phi = require_field(fields.phi, mesh, "phi");
    omega.resize(phi.size());
    for (size_t i = 0; i < phi.size(); ++i) omega[i] = omega_pc(phi[i], *pc);
  } else if (const auto* sol = std::get_if<SolutionMonitor>(&spec)) {
    const ScalarField& u = require_field(fields.u, mesh, "u");
    omega = solution_field(mesh, *sol, u, current_positions, state);
  } else if (const auto* comb = std::get_if<CombinedMonitor>(&spec)) {
    const ScalarField& phi = require_field(fields.phi, mesh, "phi");
    const ScalarField& u = require_field(fields.u, mesh, "u");
    const ScalarField omega_phi = inner_levelset_field(mesh, comb->inner, phi, current_positions);
    const ScalarField omega_u = solution_field(mesh, comb->outer, u, current_positions, state);
    omega.resize(phi.size());
    for (size_t i = 0; i < phi.size(); ++i)
      omega[i] = omega_combined(phi[i], omega_phi[i], omega_u[i], comb->eps);
  } else if (const auto* shore = std::get_if<ShorelineMonitor>(&spec)) {
    const ScalarField& depth = require_field(fields.depth, mesh, "depth");
    const ScalarField& eta = require_field(fields.eta, mesh, "eta");
    ScalarField phi_h(depth.size());
    for (size_t i = 0; i < depth.size(); ++i)
      phi_h[i] = regularized_heaviside(depth[i], shore->eps_h);
    const VectorField grad_phi_h = p1_gradient(mesh, current_positions, phi_h);
    const VectorField grad_eta = p1_gradient(mesh, current_positions, eta);
    const double grad_ref =
        reference_gradient(grad_eta, false, state ? &state->grad_ref_eta : nullptr);
    omega.resize(depth.size());
    for (size_t i = 0; i < depth.size(); ++i) {
      const double capped = capped_gradient(norm(grad_eta[i]), 1.0, grad_ref);
      omega[i] = omega_shoreline(capped, norm(grad_phi_h[i]), shore->alpha_eta, shore->alpha_dry);
    }
  }

  for (double& w : omega) {
    if (!std::isfinite(w)) throw std::runtime_error("build_monitor_field: non-finite monitor value");
    w = std::max(w, kMonitorFloor);
  }
  return omega;
}

}  // namespace madapt
