#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "madapt/mesh.hpp"

namespace madapt {

/// omega = (1 + alpha u + beta |grad u| + gamma |H(u)|_F)^p.
struct GeneralMonitor {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double p = 1.0;
};

struct GradientBasedMonitor {
  enum class Alpha0Mode { constant, curvature_scaled };
  Alpha0Mode mode = Alpha0Mode::constant;
  double alpha0 = 1.0;           // constant mode offset, or the |kappa| coefficient
  double alpha0_floor = 0.1;     // lower bound in curvature-scaled mode
  double kappa_max = 100.0;      // curvature cap in curvature-scaled mode
  double alpha_phi = 40.0;
  double beta_phi = 300.0;
};

struct PiecewiseConstantMonitor {
  std::vector<double> thresholds;  // strictly increasing, size N-1
  std::vector<double> levels;      // positive, size N
};

struct SolutionMonitor {
  double alpha_u = 1.0;
  double beta_u = 1.0;
  bool frozen_reference = false;  // keep the first reference gradient
};

struct CombinedMonitor {
  double eps = 0.05;
  std::variant<GradientBasedMonitor, PiecewiseConstantMonitor> inner;
  SolutionMonitor outer;
};

struct ShorelineMonitor {
  double eps_h = 1e-3;
  double alpha_eta = 1.0;
  double alpha_dry = 1.0;
};

using MonitorSpec = std::variant<GeneralMonitor, GradientBasedMonitor, PiecewiseConstantMonitor,
                                 SolutionMonitor, CombinedMonitor, ShorelineMonitor>;

/// Per-vertex positive stiffness weight; floored at 1e-6.
using MonitorField = std::vector<double>;

inline constexpr double kMonitorFloor = 1e-6;

/// Vertex-attached input fields a monitor may consume.
struct FieldSet {
  std::optional<ScalarField> phi;
  std::optional<ScalarField> u;
  std::optional<ScalarField> depth;  // water depth H >= 0
  std::optional<ScalarField> eta;    // free surface level
};

/// Mutable per-solve cache (frozen reference gradients).
struct MonitorState {
  std::optional<double> grad_ref_u;
  std::optional<double> grad_ref_eta;
};

double omega_gb(double phi, double alpha0, double alpha_phi, double beta_phi);
double omega_pc(double phi, const PiecewiseConstantMonitor& spec);
double capped_gradient(double grad_norm, double beta_u, double grad_ref);
double omega_solution(double capped, double alpha_u);
double omega_combined(double phi, double omega_phi, double omega_u, double eps);
/// 0 at H = 0, H/eps_h on (0, eps_h], 1 above. Throws for H < 0.
double regularized_heaviside(double H, double eps_h);
double omega_shoreline(double capped_eta, double grad_phi_h_norm, double alpha_eta,
                       double alpha_dry);

/// Assembles the per-vertex monitor field; gradient-dependent terms are
/// evaluated on the current (possibly deformed) positions. Throws naming any
/// missing required field.
MonitorField build_monitor_field(const Mesh& mesh, const MonitorSpec& spec, const FieldSet& fields,
                                 std::span<const Vec2> current_positions,
                                 MonitorState* state = nullptr);

}  // namespace madapt
