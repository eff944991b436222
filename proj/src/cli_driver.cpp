#include "madapt/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "madapt/levelset.hpp"
#include "madapt/medit_io.hpp"
#include "madapt/mesh.hpp"
#include "madapt/metric.hpp"
#include "madapt/mmpde.hpp"
#include "madapt/monitor.hpp"
#include "madapt/num_format.hpp"
#include "madapt/quality.hpp"

namespace madapt {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& context) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      values.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(context + ": cannot parse number '" + item + "'");
    }
  }
  if (values.empty()) throw UsageError(context + ": empty number list");
  return values;
}

AnalyticLevelSet parse_levelset(const std::string& spec) {
  const size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? std::string() : spec.substr(colon + 1);

  if (kind == "circle") {
    CircleLevelSet c;
    if (!args.empty()) {
      const auto v = parse_numbers(args, "--levelset circle");
      if (v.size() != 3) throw UsageError("--levelset circle expects cx,cy,r");
      c.center = {v[0], v[1]};
      c.radius = v[2];
    }
    if (!(c.radius > 0.0)) throw UsageError("--levelset circle: radius must be > 0");
    return c;
  }
  if (kind == "flower") {
    FlowerLevelSet f;
    if (!args.empty()) {
      const auto v = parse_numbers(args, "--levelset flower");
      if (v.size() != 5) throw UsageError("--levelset flower expects cx,cy,R0,A,k");
      f.center = {v[0], v[1]};
      f.base_radius = v[2];
      f.amplitude = v[3];
      f.lobes = static_cast<int>(v[4]);
    }
    if (!(f.base_radius > f.amplitude) || f.amplitude < 0.0 || f.lobes < 1)
      throw UsageError("--levelset flower: need R0 > A >= 0 and k >= 1");
    return f;
  }
  throw UsageError("unknown level-set '" + kind + "' (expected circle:... or flower:...)");
}

std::variant<GradientBasedMonitor, PiecewiseConstantMonitor> parse_levelset_monitor(
    const std::string& kind, const std::string& args) {
  if (kind == "gb" || kind == "gbk") {
    const auto v = parse_numbers(args, "--monitor " + kind);
    if (v.size() != 3)
      throw UsageError("--monitor " + kind + " expects " +
                       (kind == "gb" ? "alpha0" : std::string("coeff")) + ",alpha_phi,beta_phi");
    GradientBasedMonitor gb;
    gb.mode = kind == "gb" ? GradientBasedMonitor::Alpha0Mode::constant
                           : GradientBasedMonitor::Alpha0Mode::curvature_scaled;
    gb.alpha0 = v[0];
    gb.alpha_phi = v[1];
    gb.beta_phi = v[2];
    if (gb.alpha0 < 0.0 || gb.alpha_phi < 0.0 || gb.beta_phi < 0.0)
      throw UsageError("--monitor " + kind + ": parameters must be >= 0");
    if (gb.mode == GradientBasedMonitor::Alpha0Mode::constant && !(gb.alpha0 + gb.alpha_phi > 0.0))
      throw UsageError("--monitor gb: alpha0 + alpha_phi must be > 0");
    return gb;
  }
  if (kind == "pc") {
    const size_t slash = args.find('/');
    if (slash == std::string::npos)
      throw UsageError("--monitor pc expects thresholds/levels, e.g. pc:0.05,1,1.75/225,90,70,20");
    PiecewiseConstantMonitor pc;
    pc.thresholds = parse_numbers(args.substr(0, slash), "--monitor pc thresholds");
    pc.levels = parse_numbers(args.substr(slash + 1), "--monitor pc levels");
    if (pc.levels.size() != pc.thresholds.size() + 1)
      throw UsageError("--monitor pc: need one more level than thresholds");
    for (size_t i = 0; i + 1 < pc.thresholds.size(); ++i)
      if (!(pc.thresholds[i] < pc.thresholds[i + 1]))
        throw UsageError("--monitor pc: thresholds must be strictly increasing");
    for (double w : pc.levels)
      if (!(w > 0.0)) throw UsageError("--monitor pc: levels must be positive");
    return pc;
  }
  throw UsageError("unknown level-set monitor '" + kind + "'");
}

SolutionMonitor parse_solution_monitor(const std::string& args) {
  SolutionMonitor sol;
  std::stringstream ss(args);
  std::string item;
  std::vector<std::string> parts;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  if (parts.size() < 2) throw UsageError("--monitor sol expects alpha_u,beta_u[,frozen]");
  try {
    sol.alpha_u = std::stod(parts[0]);
    sol.beta_u = std::stod(parts[1]);
  } catch (const std::exception&) {
    throw UsageError("--monitor sol: cannot parse parameters");
  }
  if (parts.size() > 2) {
    if (parts[2] == "frozen")
      sol.frozen_reference = true;
    else
      throw UsageError("--monitor sol: unknown option '" + parts[2] + "'");
  }
  if (sol.alpha_u < 0.0 || !(sol.beta_u > 0.0))
    throw UsageError("--monitor sol: need alpha_u >= 0 and beta_u > 0");
  return sol;
}

MonitorSpec parse_monitor(const std::string& spec) {
  const size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? std::string() : spec.substr(colon + 1);

  if (kind == "gb" || kind == "gbk" || kind == "pc") {
    auto inner = parse_levelset_monitor(kind, args);
    if (auto* gb = std::get_if<GradientBasedMonitor>(&inner)) return *gb;
    return std::get<PiecewiseConstantMonitor>(inner);
  }
  if (kind == "sol") return parse_solution_monitor(args);
  if (kind == "combined") {
    // combined:eps;inner-monitor;sol:alpha_u,beta_u
    std::vector<std::string> parts;
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ';')) parts.push_back(item);
    if (parts.size() != 3)
      throw UsageError("--monitor combined expects eps;<gb|gbk|pc monitor>;<sol monitor>");
    CombinedMonitor comb;
    try {
      comb.eps = std::stod(parts[0]);
    } catch (const std::exception&) {
      throw UsageError("--monitor combined: cannot parse eps");
    }
    if (!(comb.eps > 0.0)) throw UsageError("--monitor combined: eps must be > 0");
    const size_t c1 = parts[1].find(':');
    comb.inner = parse_levelset_monitor(parts[1].substr(0, c1),
                                        c1 == std::string::npos ? "" : parts[1].substr(c1 + 1));
    if (parts[2].rfind("sol:", 0) != 0)
      throw UsageError("--monitor combined: outer monitor must be sol:...");
    comb.outer = parse_solution_monitor(parts[2].substr(4));
    return comb;
  }
  if (kind == "shore") {
    const auto v = parse_numbers(args, "--monitor shore");
    if (v.size() != 3) throw UsageError("--monitor shore expects eps_h,alpha_eta,alpha_dry");
    ShorelineMonitor shore{v[0], v[1], v[2]};
    if (!(shore.eps_h > 0.0) || shore.alpha_eta < 0.0 || shore.alpha_dry < 0.0)
      throw UsageError("--monitor shore: need eps_h > 0 and alpha >= 0");
    return shore;
  }
  if (kind == "gen") {
    const auto v = parse_numbers(args, "--monitor gen");
    if (v.size() != 4) throw UsageError("--monitor gen expects alpha,beta,gamma,p");
    GeneralMonitor gen{v[0], v[1], v[2], v[3]};
    if (gen.alpha < 0.0 || gen.beta < 0.0 || gen.gamma < 0.0 || gen.p < 1.0)
      throw UsageError("--monitor gen: need nonnegative coefficients and p >= 1");
    return gen;
  }
  throw UsageError("unknown monitor '" + kind + "'");
}

Closure parse_closure(const std::string& spec) {
  if (spec == "laplace") return LaplacianClosure{};
  if (spec == "elastic") return ElasticityClosure{};
  if (spec.rfind("elastic:", 0) == 0) {
    const auto v = parse_numbers(spec.substr(8), "--closure elastic");
    if (v.size() != 2) throw UsageError("--closure elastic expects mu,lambda");
    if (!(v[0] > 0.0) || v[1] < 0.0) throw UsageError("--closure elastic: need mu > 0, lambda >= 0");
    return ElasticityClosure{v[0], v[1]};
  }
  throw UsageError("unknown closure '" + spec + "' (expected laplace or elastic[:mu,lambda])");
}

Rect parse_domain(const std::string& spec) {
  const auto v = parse_numbers(spec, "--domain");
  if (v.size() != 4) throw UsageError("--domain expects x0,x1,y0,y1");
  Rect r{v[0], v[1], v[2], v[3]};
  if (!(r.x0 < r.x1) || !(r.y0 < r.y1)) throw UsageError("--domain: need x0 < x1 and y0 < y1");
  return r;
}

Mesh load_mesh(const std::string& path) {
  Mesh mesh = read_mesh(path);
  const ValidityReport report = validate(mesh);
  if (!report.valid()) {
    std::string what = path + ": invalid mesh";
    if (!report.inverted.empty())
      what += ", " + std::to_string(report.inverted.size()) + " non-positive element(s)";
    if (!report.conforming) what += ", " + report.conformity_error;
    if (report.duplicate_vertices > 0)
      what += ", " + std::to_string(report.duplicate_vertices) + " duplicate vertex pair(s)";
    throw std::runtime_error(what);
  }
  return mesh;
}

ScalarField load_scalar_sol(const std::string& path, long expected) {
  const auto fields = read_sol(path, expected);
  for (const SolField& f : fields)
    if (f.kind == SolKind::scalar) return f.scalars;
  throw std::runtime_error(path + ": no scalar field found");
}

MetricField load_tensor_sol(const std::string& path, long expected) {
  const auto fields = read_sol(path, expected);
  for (const SolField& f : fields)
    if (f.kind == SolKind::sym_tensor) return f.tensors;
  throw std::runtime_error(path + ": no symmetric tensor field found");
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows,
                           bool timings) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "iteration,residual,residual_ratio,min_signed_area,inversions,wall_ms\n";
  for (const DiagnosticsRow& r : rows)
    out << r.iteration << ',' << format_double(r.residual) << ',' << format_double(r.residual_ratio)
        << ',' << format_double(r.min_signed_area) << ',' << r.inversions << ','
        << format_double(timings ? r.wall_ms : 0.0) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Subcommand options

struct GenerateOptions {
  std::string domain = "-1,1,-1,1";
  double h = 0.0;
  std::string out;
};

struct SampleOptions {
  std::string mesh_path, levelset_spec, sizemap_spec, out;
};

struct MetricOptions {
  std::string kind, mesh_path, field_path, levelset_spec, phi_path, a_path, b_path, out;
  double eps = 0.01, band = 0.05, hmin = 1e-3, hmax = 0.5;
};

struct AdaptOptions {
  std::string mesh_path, levelset_spec, monitor_spec, closure_spec = "laplace";
  std::string phi_path, solution_path, depth_path, eta_path;
  std::string out, diag_path, config_path;
  double tol = 1e-3;
  int max_iter = 5000;
  int sweeps = 1;
  double step = 1.0;
  std::string safeguard = "halve";
  double tau = 0.0;
  std::string bc = "dirichlet";
  bool timings = false;
};

struct StatsOptions {
  std::string ref_path, adapted_path, phi_path, levelset_spec;
  double band = 1e-2;
  std::string out, metric_path, hist_path, qr_path;
};

int cmd_generate(const GenerateOptions& opt) {
  const Rect domain = parse_domain(opt.domain);
  if (!(opt.h > 0.0)) throw UsageError("--h must be > 0");
  const Mesh mesh = generate_uniform(domain, opt.h);
  write_mesh(mesh, opt.out);
  std::cout << "wrote " << opt.out << ": " << mesh.num_vertices() << " vertices, "
            << mesh.num_triangles() << " triangles\n";
  return 0;
}

int cmd_sample(const SampleOptions& opt) {
  if (opt.levelset_spec.empty() == opt.sizemap_spec.empty())
    throw UsageError("sample: give exactly one of --levelset or --sizemap");
  const Mesh mesh = load_mesh(opt.mesh_path);
  ScalarField values;
  if (!opt.levelset_spec.empty()) {
    values = sample(mesh, parse_levelset(opt.levelset_spec));
  } else {
    SpiralSizemapParams params;
    if (opt.sizemap_spec != "spiral") {
      if (opt.sizemap_spec.rfind("spiral:", 0) != 0)
        throw UsageError("--sizemap expects spiral or spiral:a,s");
      const auto v = parse_numbers(opt.sizemap_spec.substr(7), "--sizemap spiral");
      if (v.size() != 2) throw UsageError("--sizemap spiral expects a,s");
      params.a = v[0];
      params.s = v[1];
      if (!(params.a > 0.0) || !(params.s > 0.0))
        throw UsageError("--sizemap spiral: need a > 0 and s > 0");
    }
    values = sample(mesh, [&params](Vec2 p) { return spiral_sizemap(p, params); });
  }
  write_sol(opt.out, {make_scalar_sol(std::move(values))});
  std::cout << "wrote " << opt.out << '\n';
  return 0;
}

int cmd_metric(const MetricOptions& opt) {
  if (!(opt.hmin > 0.0) || !(opt.hmin < opt.hmax))
    throw UsageError("metric: need 0 < --hmin < --hmax");
  const MetricBounds bounds{opt.hmin, opt.hmax};

  MetricField metric;
  if (opt.kind == "physical") {
    if (opt.mesh_path.empty() || opt.field_path.empty())
      throw UsageError("metric --kind physical needs --mesh and --field");
    const Mesh mesh = load_mesh(opt.mesh_path);
    const ScalarField u = load_scalar_sol(opt.field_path, mesh.num_vertices());
    metric = physical_metric(recover_hessian(mesh, u), bounds);
  } else if (opt.kind == "levelset") {
    if (opt.mesh_path.empty()) throw UsageError("metric --kind levelset needs --mesh");
    if (opt.levelset_spec.empty() == opt.phi_path.empty())
      throw UsageError("metric --kind levelset: give exactly one of --levelset or --phi");
    if (!(opt.eps > 0.0) || !(opt.band > 0.0))
      throw UsageError("metric --kind levelset: need --eps > 0 and --band > 0");
    const Mesh mesh = load_mesh(opt.mesh_path);
    const ScalarField phi = opt.phi_path.empty()
                                ? sample(mesh, parse_levelset(opt.levelset_spec))
                                : load_scalar_sol(opt.phi_path, mesh.num_vertices());
    const LevelsetMetricResult result = levelset_metric(mesh, phi, opt.eps, opt.band, bounds);
    if (result.degenerate_gradient_count > 0)
      std::fprintf(stderr, "warning: %d banded vertices with vanishing gradient\n",
                   result.degenerate_gradient_count);
    metric = result.metric;
  } else if (opt.kind == "intersect") {
    if (opt.a_path.empty() || opt.b_path.empty())
      throw UsageError("metric --kind intersect needs --a and --b");
    const long expected = opt.mesh_path.empty() ? -1 : load_mesh(opt.mesh_path).num_vertices();
    const MetricField a = load_tensor_sol(opt.a_path, expected);
    const MetricField b = load_tensor_sol(opt.b_path, expected);
    if (a.size() != b.size())
      throw std::runtime_error("metric intersect: field lengths differ");
    metric.resize(a.size());
    for (size_t i = 0; i < a.size(); ++i) metric[i] = intersect(a[i], b[i]);
  } else {
    throw UsageError("metric: unknown --kind '" + opt.kind +
                     "' (expected physical, levelset or intersect)");
  }
  write_sol(opt.out, {make_tensor_sol(std::move(metric))});
  std::cout << "wrote " << opt.out << '\n';
  return 0;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::map<std::string, std::string> config;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_number) +
                               ": expected key=value");
    const std::string key = line.substr(0, eq);
    config[key] = line.substr(eq + 1);
  }
  return config;
}

int cmd_adapt(AdaptOptions opt, const CLI::App* cli) {
  if (!opt.config_path.empty()) {
    const auto config = read_config_file(opt.config_path);
    auto apply = [&](const char* key, const char* flag, auto setter) {
      const auto it = config.find(key);
      if (it == config.end()) return;
      if (cli->count(flag) > 0)
        std::fprintf(stderr, "warning: config '%s' overrides %s\n", key, flag);
      setter(it->second);
    };
    auto to_double = [](const std::string& v, const char* key) {
      try {
        return std::stod(v);
      } catch (const std::exception&) {
        throw UsageError(std::string("config ") + key + ": cannot parse '" + v + "'");
      }
    };
    auto to_int = [](const std::string& v, const char* key) {
      try {
        return std::stoi(v);
      } catch (const std::exception&) {
        throw UsageError(std::string("config ") + key + ": cannot parse '" + v + "'");
      }
    };
    apply("mesh", "--mesh", [&](const std::string& v) { opt.mesh_path = v; });
    apply("levelset", "--levelset", [&](const std::string& v) { opt.levelset_spec = v; });
    apply("monitor", "--monitor", [&](const std::string& v) { opt.monitor_spec = v; });
    apply("closure", "--closure", [&](const std::string& v) { opt.closure_spec = v; });
    apply("phi", "--phi", [&](const std::string& v) { opt.phi_path = v; });
    apply("solution", "--solution", [&](const std::string& v) { opt.solution_path = v; });
    apply("depth", "--depth", [&](const std::string& v) { opt.depth_path = v; });
    apply("eta", "--eta", [&](const std::string& v) { opt.eta_path = v; });
    apply("out", "--out", [&](const std::string& v) { opt.out = v; });
    apply("diag", "--diag", [&](const std::string& v) { opt.diag_path = v; });
    apply("tol", "--tol", [&](const std::string& v) { opt.tol = to_double(v, "tol"); });
    apply("max-iter", "--max-iter", [&](const std::string& v) { opt.max_iter = to_int(v, "max-iter"); });
    apply("sweeps", "--sweeps", [&](const std::string& v) { opt.sweeps = to_int(v, "sweeps"); });
    apply("step", "--step", [&](const std::string& v) { opt.step = to_double(v, "step"); });
    apply("safeguard", "--safeguard", [&](const std::string& v) { opt.safeguard = v; });
    apply("tau", "--tau", [&](const std::string& v) { opt.tau = to_double(v, "tau"); });
    apply("bc", "--bc", [&](const std::string& v) { opt.bc = v; });
    apply("timings", "--timings",
          [&](const std::string& v) { opt.timings = (v == "1" || v == "true"); });
  }

  if (opt.mesh_path.empty()) throw UsageError("adapt: --mesh is required");
  if (opt.monitor_spec.empty()) throw UsageError("adapt: --monitor is required");
  if (opt.out.empty()) throw UsageError("adapt: --out is required");

  const Mesh mesh = load_mesh(opt.mesh_path);

  MonitorInputs inputs;
  if (!opt.levelset_spec.empty()) inputs.levelset = parse_levelset(opt.levelset_spec);
  if (!opt.phi_path.empty()) {
    if (inputs.levelset) throw UsageError("adapt: give only one of --levelset and --phi");
    inputs.fields.phi = load_scalar_sol(opt.phi_path, mesh.num_vertices());
  }
  if (!opt.solution_path.empty())
    inputs.fields.u = load_scalar_sol(opt.solution_path, mesh.num_vertices());
  if (!opt.depth_path.empty())
    inputs.fields.depth = load_scalar_sol(opt.depth_path, mesh.num_vertices());
  if (!opt.eta_path.empty())
    inputs.fields.eta = load_scalar_sol(opt.eta_path, mesh.num_vertices());

  SolverConfig config;
  config.closure = parse_closure(opt.closure_spec);
  config.max_outer_iters = opt.max_iter;
  config.jacobi_sweeps_per_outer = opt.sweeps;
  config.residual_drop = opt.tol;
  config.step_limiter = opt.step;
  config.tau = opt.tau;
  if (opt.safeguard == "halve")
    config.safeguard = Safeguard::reject_and_halve;
  else if (opt.safeguard == "clamp")
    config.safeguard = Safeguard::clamp;
  else
    throw UsageError("adapt: --safeguard must be halve or clamp");
  if (config.max_outer_iters < 1 || config.jacobi_sweeps_per_outer < 1)
    throw UsageError("adapt: iteration counts must be >= 1");
  if (!(config.residual_drop > 0.0) || !(config.residual_drop < 1.0))
    throw UsageError("adapt: --tol must be in (0,1)");
  if (!(config.step_limiter > 0.0) || config.step_limiter > 1.0)
    throw UsageError("adapt: --step must be in (0,1]");
  if (config.tau < 0.0) throw UsageError("adapt: --tau must be >= 0");

  Constraints bc;
  if (opt.bc == "dirichlet")
    bc = make_dirichlet_constraints(mesh);
  else if (opt.bc == "slip")
    bc = make_slip_constraints(mesh);
  else
    throw UsageError("adapt: --bc must be dirichlet or slip");

  const MonitorSpec spec = parse_monitor(opt.monitor_spec);
  const SolveResult result = solve(mesh, spec, inputs, config, &bc);

  if (!opt.diag_path.empty()) write_diagnostics_csv(opt.diag_path, result.history, opt.timings);
  write_mesh(apply_displacement(mesh, result.displacement), opt.out);

  const double ratio = result.history.empty() ? 0.0 : result.history.back().residual_ratio;
  if (result.status == SolveStatus::inversion_failure)
    throw SolverFailure("adapt: unrecoverable element inversion at iteration " +
                        std::to_string(result.iterations) + " (last valid mesh written)");
  if (result.status == SolveStatus::budget_exhausted)
    std::fprintf(stderr, "warning: not converged after %d iterations (residual ratio %.3e)\n",
                 result.iterations, ratio);
  std::cout << "wrote " << opt.out << ": " << result.iterations << " iterations, residual ratio "
            << format_double(ratio) << ", " << result.total_inversions
            << " safeguard activations\n";
  return 0;
}

int cmd_stats(const StatsOptions& opt) {
  if (opt.phi_path.empty() == opt.levelset_spec.empty())
    throw UsageError("stats: give exactly one of --phi or --levelset");
  if (!(opt.band > 0.0)) throw UsageError("stats: --band must be > 0");

  const Mesh ref_mesh = load_mesh(opt.ref_path);
  std::optional<Mesh> adapted;
  if (!opt.adapted_path.empty()) adapted = load_mesh(opt.adapted_path);

  std::optional<AnalyticLevelSet> ls;
  std::optional<ScalarField> phi_file;
  if (!opt.levelset_spec.empty())
    ls = parse_levelset(opt.levelset_spec);
  else
    phi_file = load_scalar_sol(opt.phi_path, ref_mesh.num_vertices());

  auto phi_for = [&](const Mesh& mesh) {
    return ls ? sample(mesh, *ls) : *phi_file;
  };

  std::vector<std::pair<std::string, NarrowBandStats>> rows;
  rows.emplace_back("reference", narrow_band_stats(ref_mesh, phi_for(ref_mesh), opt.band));
  if (adapted)
    rows.emplace_back("adapted", narrow_band_stats(*adapted, phi_for(*adapted), opt.band));

  std::cout << narrow_band_table(rows);
  if (!opt.out.empty()) {
    std::ofstream out(opt.out);
    if (!out) throw std::runtime_error("cannot open '" + opt.out + "' for writing");
    out << narrow_band_csv(rows, opt.band);
  }

  if (adapted) {
    const CompressionField qr = compression_ratio(ref_mesh, *adapted);
    double qr_min = qr.empty() ? 0.0 : qr[0], qr_max = qr_min, qr_sum = 0.0;
    for (double q : qr) {
      qr_min = std::min(qr_min, q);
      qr_max = std::max(qr_max, q);
      qr_sum += q;
    }
    if (!qr.empty())
      std::cout << "compression ratio: min " << format_double(qr_min) << ", avg "
                << format_double(qr_sum / static_cast<double>(qr.size())) << ", max "
                << format_double(qr_max) << '\n';
    if (!opt.qr_path.empty()) {
      std::ofstream out(opt.qr_path);
      if (!out) throw std::runtime_error("cannot open '" + opt.qr_path + "' for writing");
      out << "element,q_r,centroid_phi\n";
      for (size_t t = 0; t < qr.size(); ++t) {
        const auto& tri = adapted->triangles[t].v;
        const Vec2 centroid = (adapted->position(tri[0]) + adapted->position(tri[1]) +
                               adapted->position(tri[2])) /
                              3.0;
        std::string phi_str;
        if (ls) {
          phi_str = format_double(eval_levelset(*ls, centroid));
        } else {
          const ScalarField& phi = *phi_file;
          phi_str = format_double((phi[static_cast<size_t>(tri[0])] +
                                   phi[static_cast<size_t>(tri[1])] +
                                   phi[static_cast<size_t>(tri[2])]) /
                                  3.0);
        }
        out << t << ',' << format_double(qr[t]) << ',' << phi_str << '\n';
      }
    }
  } else if (!opt.qr_path.empty()) {
    throw UsageError("stats: --qr needs --adapted");
  }

  if (!opt.metric_path.empty()) {
    const Mesh& hist_mesh = adapted ? *adapted : ref_mesh;
    const MetricField metric = load_tensor_sol(opt.metric_path, hist_mesh.num_vertices());
    const EdgeLengthHistogram hist = edge_histogram(hist_mesh, metric);
    std::cout << histogram_table(hist);
    if (!opt.hist_path.empty()) {
      std::ofstream out(opt.hist_path);
      if (!out) throw std::runtime_error("cannot open '" + opt.hist_path + "' for writing");
      out << histogram_csv(hist);
    }
  } else if (!opt.hist_path.empty()) {
    throw UsageError("stats: --hist needs --metric");
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"2D simplicial mesh adaptation: metric construction and moving-mesh solver"};
  app.require_subcommand(1);

  GenerateOptions gen_opt;
  CLI::App* gen = app.add_subcommand("generate", "Generate a uniform triangulation");
  gen->add_option("--domain", gen_opt.domain, "Rectangle x0,x1,y0,y1 (default -1,1,-1,1)");
  gen->add_option("--h", gen_opt.h, "Target edge size")->required();
  gen->add_option("--out", gen_opt.out, "Output .mesh path")->required();

  SampleOptions sample_opt;
  CLI::App* smp = app.add_subcommand("sample", "Sample a level-set or sizemap at mesh vertices");
  smp->add_option("--mesh", sample_opt.mesh_path, "Input .mesh")->required();
  smp->add_option("--levelset", sample_opt.levelset_spec, "circle:cx,cy,r | flower:cx,cy,R0,A,k");
  smp->add_option("--sizemap", sample_opt.sizemap_spec, "spiral | spiral:a,s");
  smp->add_option("--out", sample_opt.out, "Output .sol path")->required();

  MetricOptions metric_opt;
  CLI::App* met = app.add_subcommand("metric", "Build a metric field (.sol tensor)");
  met->add_option("--kind", metric_opt.kind, "physical | levelset | intersect")->required();
  met->add_option("--mesh", metric_opt.mesh_path, "Input .mesh");
  met->add_option("--field", metric_opt.field_path, "Scalar .sol for --kind physical");
  met->add_option("--levelset", metric_opt.levelset_spec, "Analytic level-set for --kind levelset");
  met->add_option("--phi", metric_opt.phi_path, "Sampled level-set .sol for --kind levelset");
  met->add_option("--a", metric_opt.a_path, "First tensor .sol for --kind intersect");
  met->add_option("--b", metric_opt.b_path, "Second tensor .sol for --kind intersect");
  met->add_option("--eps", metric_opt.eps, "Interface approximation error");
  met->add_option("--band", metric_opt.band, "Band half-width around the zero level-set");
  met->add_option("--hmin", metric_opt.hmin, "Minimum allowed size");
  met->add_option("--hmax", metric_opt.hmax, "Maximum allowed size");
  met->add_option("--out", metric_opt.out, "Output .sol path")->required();

  AdaptOptions adapt_opt;
  CLI::App* adp = app.add_subcommand("adapt", "Run the moving-mesh solver");
  adp->add_option("--mesh", adapt_opt.mesh_path, "Reference .mesh");
  adp->add_option("--levelset", adapt_opt.levelset_spec,
                  "Analytic level-set, re-evaluated at current positions");
  adp->add_option("--phi", adapt_opt.phi_path, "Vertex-attached level-set .sol");
  adp->add_option("--solution", adapt_opt.solution_path, "Vertex-attached solution .sol");
  adp->add_option("--depth", adapt_opt.depth_path, "Water depth .sol (shoreline monitor)");
  adp->add_option("--eta", adapt_opt.eta_path, "Free surface .sol (shoreline monitor)");
  adp->add_option("--monitor", adapt_opt.monitor_spec,
                  "gb:a0,ap,bp | gbk:c,ap,bp | pc:t1,../w1,.. | sol:au,bu | combined:... | "
                  "shore:eh,ae,ad | gen:a,b,g,p");
  adp->add_option("--closure", adapt_opt.closure_spec, "laplace | elastic[:mu,lambda]");
  adp->add_option("--tol", adapt_opt.tol, "Relative increment drop for convergence");
  adp->add_option("--max-iter", adapt_opt.max_iter, "Outer iteration budget");
  adp->add_option("--sweeps", adapt_opt.sweeps, "Jacobi sweeps per outer iteration");
  adp->add_option("--step", adapt_opt.step, "Step limiter in (0,1]");
  adp->add_option("--safeguard", adapt_opt.safeguard, "halve | clamp");
  adp->add_option("--tau", adapt_opt.tau, "Pseudo-time relaxation coefficient");
  adp->add_option("--bc", adapt_opt.bc, "dirichlet | slip");
  adp->add_option("--out", adapt_opt.out, "Adapted .mesh path");
  adp->add_option("--diag", adapt_opt.diag_path, "Diagnostics CSV path");
  adp->add_option("--config", adapt_opt.config_path,
                  "key=value file; overrides flags with a warning");
  adp->add_flag("--timings", adapt_opt.timings, "Write real wall times to the diagnostics CSV");

  StatsOptions stats_opt;
  CLI::App* sts = app.add_subcommand("stats", "Narrow-band statistics, compression, histogram");
  sts->add_option("--ref", stats_opt.ref_path, "Reference .mesh")->required();
  sts->add_option("--adapted", stats_opt.adapted_path, "Adapted .mesh (same connectivity)");
  sts->add_option("--phi", stats_opt.phi_path, "Level-set .sol");
  sts->add_option("--levelset", stats_opt.levelset_spec, "Analytic level-set");
  sts->add_option("--band", stats_opt.band, "Narrow-band threshold on |phi|");
  sts->add_option("--out", stats_opt.out, "Narrow-band stats CSV path");
  sts->add_option("--metric", stats_opt.metric_path, "Metric .sol for the edge histogram");
  sts->add_option("--hist", stats_opt.hist_path, "Histogram CSV path");
  sts->add_option("--qr", stats_opt.qr_path, "Per-element compression CSV path");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(gen_opt);
    if (smp->parsed()) return cmd_sample(sample_opt);
    if (met->parsed()) return cmd_metric(metric_opt);
    if (adp->parsed()) return cmd_adapt(adapt_opt, adp);
    if (sts->parsed()) return cmd_stats(stats_opt);
    throw UsageError("no subcommand given");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  } catch (const SolverFailure& e) {
    std::fprintf(stderr, "error: solver: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: input: %s\n", e.what());
    return 3;
  }
}

}  // namespace madapt
