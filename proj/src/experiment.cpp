#include "flowlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "flowlab/commutator_lab.hpp"
#include "flowlab/continuity_lab.hpp"
#include "flowlab/flow_engine.hpp"
#include "flowlab/rng.hpp"
#include "flowlab/util.hpp"

#ifndef FLOWLAB_BUILD_ID
#define FLOWLAB_BUILD_ID "untracked"
#endif

namespace flowlab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvWriter {
  std::ostringstream os;
  void header(const std::string& line) { os << line << '\n'; }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << fmt17(values[i]);
    os << '\n';
  }
};

struct Config {
  std::string experiment;
  json field_desc;
  FieldSpec field;
  bool has_field = false;
  int dim = 0;
  double horizon = 1.0;
  double p = 2.0, q = 2.0;
  std::optional<double> user_r;
  std::optional<double> exp_c;
  QuadratureScheme quad;
  int time_steps = 100;
  std::size_t particles = 10000;
  std::uint64_t seed = 0;
  std::string out_prefix = "flowlab_run";
  std::optional<std::string> trajectories_out;
  // sweep
  bool has_sweep = false;
  std::string sweep_key;
  std::vector<double> sweep_values;
  // commutator extras
  std::vector<double> eps_grid{1.0, 0.3, 0.1, 0.03, 0.01};
  std::string v_name = "z1";
  json raw;
};

const std::vector<std::string> kExperiments = {
    "density_bound",    "commutator_sweep", "semigroup",
    "stability",        "dimension_consistency", "rotated_flow",
    "ou_properties",    "cancellation_identities"};

ScalarFn named_test_function(const std::string& name) {
  if (name == "one") return [](std::span<const double>) { return 1.0; };
  if (name == "z1") return [](std::span<const double> x) { return x[0]; };
  if (name == "z1_sq") return [](std::span<const double> x) { return x[0] * x[0]; };
  if (name == "h2") return [](std::span<const double> x) { return x[0] * x[0] - 1.0; };
  throw ConfigError("unknown test function \"" + name + "\" (one|z1|z1_sq|h2)");
}

Config parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  Config cfg;
  cfg.raw = j;
  if (!j.contains("experiment")) throw ConfigError("config missing \"experiment\"");
  cfg.experiment = j.at("experiment").get<std::string>();
  bool known = false;
  for (const auto& e : kExperiments) known = known || e == cfg.experiment;
  if (!known) throw ConfigError("unknown experiment \"" + cfg.experiment + "\"");

  cfg.horizon = j.value("horizon", 1.0);
  if (cfg.horizon <= 0.0) throw ConfigError("horizon must be positive");

  if (j.contains("field")) {
    cfg.field_desc = j.at("field");
    if (!cfg.field_desc.contains("params")) cfg.field_desc["params"] = json::object();
    cfg.field_desc["params"]["horizon"] = cfg.horizon;
    cfg.field = make_field_from_json(cfg.field_desc.dump());
    cfg.has_field = true;
    cfg.dim = cfg.field.dim;
  }
  if (j.contains("dim")) {
    const int dim = j.at("dim").get<int>();
    if (cfg.has_field && dim != cfg.dim)
      throw ConfigError("config dim disagrees with the field dimension");
    cfg.dim = dim;
  }
  if (cfg.dim <= 0) throw ConfigError("config needs a positive dim (or a field)");

  const json expo = j.value("exponents", json::object());
  cfg.p = expo.value("p", 2.0);
  cfg.q = expo.value("q", 2.0);
  if (cfg.p <= 1.0) throw ConfigError("exponent p must be > 1");
  if (cfg.q <= 1.0 || cfg.q > 2.0) throw ConfigError("exponent q must be in (1, 2]");
  if (expo.contains("r")) cfg.user_r = expo.at("r").get<double>();
  if (expo.contains("c")) cfg.exp_c = expo.at("c").get<double>();
  if (cfg.has_field) {
    cfg.field.p = cfg.p;
    cfg.field.q = cfg.q;
  }

  const double r = std::max(conjugate_exponent(cfg.p), conjugate_exponent(cfg.q));
  if (cfg.user_r && std::abs(*cfg.user_r - r) > 1e-9)
    throw ConfigError("supplied r=" + std::to_string(*cfg.user_r) +
                      " does not equal max{p', q'}=" + std::to_string(r));
  if (cfg.experiment == "density_bound" && cfg.exp_c && *cfg.exp_c < r * cfg.horizon - 1e-12)
    throw ConfigError("density_bound requires c >= r*T");

  const json quad = j.value("quadrature", json::object());
  const std::string quad_kind = quad.value("kind", std::string("gauss_hermite"));
  const std::uint64_t seed = j.value("seed", 0ull);
  cfg.seed = seed;
  if (quad_kind == "gauss_hermite")
    cfg.quad = make_quadrature(QuadKind::GaussHermite, cfg.dim,
                               quad.value("nodes_per_axis", 20));
  else if (quad_kind == "monte_carlo")
    cfg.quad = make_quadrature(QuadKind::MonteCarlo, cfg.dim, quad.value("samples", 100000L),
                               split_seed(seed, "experiment.quadrature"));
  else
    throw ConfigError("quadrature kind must be gauss_hermite or monte_carlo");

  cfg.time_steps = j.value("time_steps", 100);
  if (cfg.time_steps < 1) throw ConfigError("time_steps must be >= 1");
  cfg.particles = j.value("particles", 10000u);
  if (cfg.particles < 2) throw ConfigError("particles must be >= 2");
  cfg.out_prefix = j.value("output", std::string("flowlab_run"));
  if (j.contains("trajectories_out"))
    cfg.trajectories_out = j.at("trajectories_out").get<std::string>();

  if (j.contains("sweep")) {
    cfg.has_sweep = true;
    cfg.sweep_key = j.at("sweep").value("key", std::string());
    if (cfg.sweep_key != "dt" && cfg.sweep_key != "K" && cfg.sweep_key != "N" &&
        cfg.sweep_key != "n_smoothing")
      throw ConfigError("sweep key must be one of dt|K|N|n_smoothing");
    cfg.sweep_values = j.at("sweep").value("values", std::vector<double>{});
    if (cfg.sweep_values.size() < 3)
      throw ConfigError("sweep needs at least 3 values");
    const bool inc = cfg.sweep_values[1] > cfg.sweep_values[0];
    for (std::size_t i = 0; i + 1 < cfg.sweep_values.size(); ++i) {
      const bool step_inc = cfg.sweep_values[i + 1] > cfg.sweep_values[i];
      if (step_inc != inc || cfg.sweep_values[i + 1] == cfg.sweep_values[i])
        throw ConfigError("sweep values must be strictly monotone");
    }
  }

  if (j.contains("commutator")) {
    const json cj = j.at("commutator");
    if (cj.contains("eps_grid")) cfg.eps_grid = cj.at("eps_grid").get<std::vector<double>>();
    cfg.v_name = cj.value("v", std::string("z1"));
    named_test_function(cfg.v_name);  // validate early
    for (std::size_t i = 0; i + 1 < cfg.eps_grid.size(); ++i)
      if (cfg.eps_grid[i + 1] >= cfg.eps_grid[i])
        throw ConfigError("eps_grid must be strictly decreasing");
  }

  const bool needs_field = cfg.experiment == "density_bound" ||
                           cfg.experiment == "commutator_sweep" ||
                           cfg.experiment == "semigroup" || cfg.experiment == "stability" ||
                           cfg.experiment == "dimension_consistency" ||
                           cfg.experiment == "rotated_flow";
  if (needs_field && !cfg.has_field)
    throw ConfigError("experiment \"" + cfg.experiment + "\" needs a field descriptor");
  return cfg;
}

struct ExperimentOutput {
  ordered_json results;
  CsvWriter table;
  bool pass = true;
};

// ---- individual experiments ------------------------------------------------

ExperimentOutput run_density_bound_k_sweep(const Config& cfg) {
  // K sweep: the Monte-Carlo error of the final-time density estimate, with
  // its empirical decay order (about 1/2 in K).
  ExperimentOutput out;
  const auto grid = uniform_grid(0.0, cfg.horizon, cfg.time_steps);
  out.table.header("K,metric,rate");
  std::vector<double> metrics;
  for (const double kv : cfg.sweep_values) {
    const auto particles = static_cast<std::size_t>(kv);
    const auto batch = integrate_flow(cfg.field, particles, cfg.seed, grid);
    metrics.push_back(density_lr_norm(batch, 2.0, batch.nodes() - 1).std_error);
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    double rate = std::numeric_limits<double>::quiet_NaN();
    if (i > 0 && metrics[i] > 0.0 && metrics[i - 1] > 0.0)
      rate = std::log(metrics[i - 1] / metrics[i]) /
             std::log(cfg.sweep_values[i] / cfg.sweep_values[i - 1]);
    out.table.row({cfg.sweep_values[i], metrics[i], rate});
  }
  out.results["K"] = cfg.sweep_values;
  out.results["metric"] = metrics;
  return out;
}

ExperimentOutput run_density_bound(const Config& cfg) {
  if (cfg.has_sweep && cfg.sweep_key == "K") return run_density_bound_k_sweep(cfg);
  ExperimentOutput out;
  const auto grid = uniform_grid(0.0, cfg.horizon, cfg.time_steps);
  std::vector<double> r_values = {2.0, conjugate_exponent(cfg.p), conjugate_exponent(cfg.q)};
  std::sort(r_values.begin(), r_values.end());
  r_values.erase(std::unique(r_values.begin(), r_values.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 r_values.end());

  out.table.header("r,t,lhs,std_error,rhs,margin");
  for (const double r : r_values) {
    const auto report =
        check_density_bound(cfg.field, r, cfg.particles, grid, cfg.quad, cfg.seed);
    ordered_json jr;
    jr["r"] = r;
    jr["rhs"] = report.rhs_finite ? json(report.rhs) : json("inf");
    jr["rhs_finite"] = report.rhs_finite;
    jr["pass"] = report.pass;
    jr["dead_particles"] = report.dead_count;
    jr["lhs"] = report.lhs;
    jr["std_error"] = report.std_error;
    out.results["reports"].push_back(jr);
    out.pass = out.pass && report.pass;
    for (std::size_t i = 0; i < report.times.size(); ++i)
      out.table.row({r, report.times[i], report.lhs[i], report.std_error[i], report.rhs,
                     report.margin[i]});
  }
  if (cfg.trajectories_out) {
    const auto batch = integrate_flow(cfg.field, cfg.particles, cfg.seed, grid);
    export_trajectories_csv(batch, *cfg.trajectories_out);
  }
  return out;
}

ExperimentOutput run_commutator_sweep(const Config& cfg) {
  ExperimentOutput out;
  const auto c = snapshot(cfg.field, 0.0);
  const auto inner = make_inner_quadrature(cfg.dim, cfg.seed);
  const auto report = commutator_report(named_test_function(cfg.v_name), c, cfg.p, cfg.q,
                                        cfg.eps_grid, cfg.quad, inner, cfg.particles, cfg.seed);
  std::ostringstream csv;
  report.write_csv(csv);
  out.table.os << csv.str();
  out.results = ordered_json::parse(report.to_json());
  for (std::size_t i = 0; i < report.eps_grid.size(); ++i)
    out.pass = out.pass && report.bound_holds(i);
  return out;
}

ExperimentOutput run_semigroup(const Config& cfg) {
  ExperimentOutput out;
  out.table.header("dt,discrepancy,rate");
  if (cfg.has_sweep && cfg.sweep_key == "dt") {
    std::vector<double> metrics;
    for (const double dt : cfg.sweep_values) {
      const int steps = std::max(1, static_cast<int>(std::lround(cfg.horizon / 2.0 / dt)));
      metrics.push_back(semigroup_discrepancy(cfg.field, 0.0, cfg.horizon / 2.0, cfg.horizon,
                                              cfg.particles, cfg.seed, steps));
    }
    std::vector<double> rates;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      double rate = std::numeric_limits<double>::quiet_NaN();
      if (i > 0 && metrics[i] > 0.0 && metrics[i - 1] > 0.0)
        rate = std::log(metrics[i - 1] / metrics[i]) /
               std::log(cfg.sweep_values[i - 1] / cfg.sweep_values[i]);
      rates.push_back(rate);
      out.table.row({cfg.sweep_values[i], metrics[i], rate});
    }
    out.results["dt"] = cfg.sweep_values;
    out.results["discrepancy"] = metrics;
    out.results["rate"] = rates;
    // RK4 order 4 +- 0.3, judged on the finest consecutive pair.
    if (rates.size() > 1 && std::isfinite(rates.back()))
      out.pass = std::abs(rates.back() - 4.0) <= 0.3;
  } else {
    const double value = semigroup_discrepancy(cfg.field, 0.0, cfg.horizon / 2.0, cfg.horizon,
                                               cfg.particles, cfg.seed, cfg.time_steps);
    out.results["discrepancy"] = value;
    const double dt = cfg.horizon / 2.0 / cfg.time_steps;
    out.table.row({dt, value, std::numeric_limits<double>::quiet_NaN()});
    if (cfg.field.kind == "constant") out.pass = value <= 1e-10;
  }
  return out;
}

ExperimentOutput run_stability(const Config& cfg) {
  ExperimentOutput out;
  std::vector<double> n_values = cfg.has_sweep && cfg.sweep_key == "n_smoothing"
                                     ? cfg.sweep_values
                                     : std::vector<double>{4, 8, 16, 32, 64};
  const auto grid = uniform_grid(0.0, cfg.horizon, cfg.time_steps);
  const auto initial =
      sample_gaussian(cfg.particles, cfg.dim, split_seed(cfg.seed, "flow.particles"));
  IntegratorOptions opts;
  opts.track_logs = false;
  const auto reference = integrate_flow(cfg.field, initial, grid, opts);

  out.table.header("n_smoothing,metric,rate");
  std::vector<double> metrics;
  for (const double n : n_values) {
    const auto smoothed = smooth_field(cfg.field, 1.0 / n);
    const auto batch = integrate_flow(smoothed, initial, grid, opts);
    // int sup_t |X_n - X| dgamma, MC over the shared initial samples.
    std::vector<double> sup(cfg.particles, 0.0);
    for (std::size_t k = 0; k < cfg.particles; ++k) {
      double worst = 0.0;
      for (std::size_t i = 0; i < batch.nodes(); ++i) {
        const auto a = batch.position(k, i);
        const auto b = reference.position(k, i);
        double sq = 0.0;
        for (int d = 0; d < cfg.dim; ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
        worst = std::max(worst, std::sqrt(sq));
      }
      sup[k] = worst;
    }
    metrics.push_back(pairwise_sum(sup) / static_cast<double>(cfg.particles));
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    double rate = std::numeric_limits<double>::quiet_NaN();
    if (i > 0 && metrics[i] > 0.0 && metrics[i - 1] > 0.0)
      rate = std::log(metrics[i - 1] / metrics[i]) /
             std::log(n_values[i] / n_values[i - 1]);
    out.table.row({n_values[i], metrics[i], rate});
    // Strictly decreasing, except when smoothing leaves the field fixed and
    // every metric is already at roundoff level.
    if (i > 0 && metrics[i] >= metrics[i - 1] && metrics[i] > 1e-14) out.pass = false;
  }
  out.results["n_smoothing"] = n_values;
  out.results["metric"] = metrics;
  return out;
}

ExperimentOutput run_dimension_consistency(const Config& cfg) {
  ExperimentOutput out;
  std::vector<double> n_values = cfg.has_sweep && cfg.sweep_key == "N"
                                     ? cfg.sweep_values
                                     : std::vector<double>{1, 2, 3, 4, 5};
  const int n_max = static_cast<int>(n_values.back());
  const auto grid = uniform_grid(0.0, cfg.horizon, cfg.time_steps);
  const auto base =
      sample_gaussian(cfg.particles, n_max, split_seed(cfg.seed, "flow.particles"));
  IntegratorOptions opts;
  opts.track_logs = false;

  auto build_field = [&](int dim) -> FieldSpec {
    json desc = cfg.field_desc;
    desc["params"]["dim"] = dim;
    return make_field_from_json(desc.dump());
  };
  const auto reference = integrate_flow(build_field(n_max), base, grid, opts);

  const bool product = cfg.field.kind == "product_sin";
  out.table.header("N,metric,rate");
  std::vector<double> metrics;
  for (const double nv : n_values) {
    const int dim = static_cast<int>(nv);
    std::vector<double> initial(cfg.particles * dim);
    for (std::size_t k = 0; k < cfg.particles; ++k)
      for (int d = 0; d < dim; ++d) initial[k * dim + d] = base[k * n_max + d];
    const auto batch = integrate_flow(build_field(dim), initial, grid, opts);
    // L1 distance between the first min(dim, compare) coordinates of the
    // dim-run and the n_max-run.
    const int compare = product ? dim : std::min(dim, static_cast<int>(n_values.front()));
    std::vector<double> dist(cfg.particles, 0.0);
    for (std::size_t k = 0; k < cfg.particles; ++k) {
      double worst = 0.0;
      for (std::size_t i = 0; i < batch.nodes(); ++i) {
        const auto a = batch.position(k, i);
        const auto b = reference.position(k, i);
        double sq = 0.0;
        for (int d = 0; d < compare; ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
        worst = std::max(worst, std::sqrt(sq));
      }
      dist[k] = worst;
    }
    metrics.push_back(pairwise_sum(dist) / static_cast<double>(cfg.particles));
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    double rate = std::numeric_limits<double>::quiet_NaN();
    if (i > 0 && metrics[i] > 0.0 && metrics[i - 1] > 0.0)
      rate = std::log(metrics[i - 1] / metrics[i]) /
             std::log(n_values[i] / n_values[i - 1]);
    out.table.row({n_values[i], metrics[i], rate});
  }
  out.results["N"] = n_values;
  out.results["metric"] = metrics;
  if (product) {
    for (double m : metrics) out.pass = out.pass && m == 0.0;
  } else {
    for (std::size_t i = 1; i + 1 < metrics.size(); ++i)  // last value compares to itself
      out.pass = out.pass && metrics[i] <= metrics[i - 1] + 1e-15;
  }
  return out;
}

ExperimentOutput run_rotated_flow(const Config& cfg) {
  ExperimentOutput out;
  Mat skew(cfg.dim, cfg.dim);
  if (cfg.raw.contains("rotation") && cfg.raw.at("rotation").contains("generator")) {
    const auto rows = cfg.raw.at("rotation").at("generator");
    for (int i = 0; i < cfg.dim; ++i)
      for (int j = 0; j < cfg.dim; ++j) skew(i, j) = rows.at(i).at(j).get<double>();
  } else if (cfg.dim >= 2) {
    skew(0, 1) = -1.0;
    skew(1, 0) = 1.0;
  }
  const auto g = make_rotation_group(skew);
  const auto grid = uniform_grid(0.0, cfg.horizon, cfg.time_steps);
  const auto initial =
      sample_gaussian(cfg.particles, cfg.dim, split_seed(cfg.seed, "flow.particles"));
  const auto result = rotated_flow_solve(cfg.field, g, initial, grid);
  out.table.header("t,duhamel_residual");
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.table.row({grid[i], result.duhamel_residual[i]});
    worst = std::max(worst, result.duhamel_residual[i]);
  }
  out.results["max_duhamel_residual"] = worst;
  if (cfg.trajectories_out) export_trajectories_csv(result.batch, *cfg.trajectories_out);
  return out;
}

ExperimentOutput run_ou_properties(const Config&) {
  ExperimentOutput out;
  const auto inner = make_quadrature(QuadKind::GaussHermite, 1, 20);
  const double t = 0.35;
  const OuOperator op{t, inner};

  // Hermite eigenrelation through degree 4.
  const std::vector<ScalarFn> hermite = {
      [](std::span<const double> x) { return x[0]; },
      [](std::span<const double> x) { return x[0] * x[0] - 1.0; },
      [](std::span<const double> x) { return x[0] * (x[0] * x[0] - 3.0); },
      [](std::span<const double> x) {
        const double s = x[0] * x[0];
        return s * s - 6.0 * s + 3.0;
      }};
  out.table.header("check,value,tolerance");
  double worst_eigen = 0.0;
  for (std::size_t k = 0; k < hermite.size(); ++k) {
    const double decay = std::exp(-static_cast<double>(k + 1) * t);
    for (const double x : {-1.7, -0.4, 0.0, 0.8, 2.3}) {
      const Vec point{x};
      const double expected = decay * hermite[k](point);
      const double got = mehler_apply(hermite[k], op, point);
      const double scale = std::max(1.0, std::abs(expected));
      worst_eigen = std::max(worst_eigen, std::abs(got - expected) / scale);
    }
  }
  out.table.row({0, worst_eigen, 1e-8});
  out.results["hermite_eigen_residual"] = worst_eigen;

  // Semigroup law on x^2 and x^3.
  double worst_semi = 0.0;
  const OuOperator op2{0.2, inner};
  const OuOperator op_sum{t + 0.2, inner};
  for (const auto& u : hermite) {
    for (const double x : {-1.1, 0.3, 1.9}) {
      const Vec point{x};
      const double composed = mehler_apply(
          [&](std::span<const double> y) { return mehler_apply(u, op, y); }, op2, point);
      const double direct = mehler_apply(u, op_sum, point);
      worst_semi = std::max(worst_semi, std::abs(composed - direct));
    }
  }
  out.table.row({1, worst_semi, 1e-8});
  out.results["semigroup_residual"] = worst_semi;

  // Self-adjointness on polynomials.
  const auto outer = make_quadrature(QuadKind::GaussHermite, 1, 30);
  const auto [lhs, rhs] = self_adjoint_check(
      [](std::span<const double> x) { return x[0] * x[0]; },
      [](std::span<const double> x) { return x[0] * x[0] * x[0]; }, t, outer, inner);
  const double adj = std::abs(lhs - rhs);
  out.table.row({2, adj, 1e-8});
  out.results["self_adjoint_residual"] = adj;

  out.pass = worst_eigen <= 1e-8 && worst_semi <= 1e-8 && adj <= 1e-8;
  return out;
}

ExperimentOutput run_cancellation_identities(const Config& cfg) {
  ExperimentOutput out;
  SplitMix64 rng(split_seed(cfg.seed, "cancellation.matrices"));
  out.table.header("check,value,tolerance");
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + static_cast<int>(rng.next() % 3);
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = 2.0 * rng.uniform() - 1.0;
    const double c = 2.0 * rng.uniform() - 1.0;
    const auto quad = make_quadrature(QuadKind::GaussHermite, n, 7);
    const auto qc = quadratic_cancellation(a, c, quad);
    worst = std::max(worst, std::abs(qc.lhs_sq - qc.rhs_sq));
  }
  out.table.row({0, worst, 1e-8});
  out.results["quadratic_cancellation_residual"] = worst;
  out.pass = worst <= 1e-8;

  const auto mc = make_quadrature(QuadKind::MonteCarlo, 3, 1000000,
                                  split_seed(cfg.seed, "cancellation.mc"));
  const Vec l{3.0, 4.0, 0.0};
  bool mc_ok = true;
  double worst_sigma = 0.0;
  for (const double p : {1.0, 1.5, 3.0}) {
    const auto mi = moment_identity_check(l, p, mc);
    const double sigmas = mi.lhs_se > 0 ? std::abs(mi.lhs - mi.rhs) / mi.lhs_se : 0.0;
    worst_sigma = std::max(worst_sigma, sigmas);
    mc_ok = mc_ok && sigmas <= 3.0;
    out.table.row({p, mi.lhs - mi.rhs, 3.0 * mi.lhs_se});
  }
  out.results["moment_identity_max_sigma"] = worst_sigma;
  out.pass = out.pass && mc_ok;
  return out;
}

}  // namespace

std::string validate_config(const std::string& config_path) {
  return parse_config(config_path).experiment;
}

std::vector<std::string> catalogue_lines() {
  return {
      "constant         params: vector [v_1..v_N]",
      "linear           params: matrix [[...]] (N x N)",
      "rotation         params: dim (>= 2); b = (-x2, x1, 0, ...)",
      "gradient_sin     params: dim, amplitude; b = -x (1 + a sin x_1)",
      "product_sin      params: dim, amplitude; b^i = -x_i (1 + a sin x_i)",
      "low_regularity   params: dim, alpha in (0,1), delta, scale; b = s x / max(|x|, delta)^{1-alpha}",
      "weakly_coupled   params: dim, coupling; b^i = -x_i + c 2^{-i} x_{i+1}",
  };
}

int run_experiment(const std::string& config_path, const RunOverrides& overrides) {
  Config cfg;
  try {
    cfg = parse_config(config_path);
    if (overrides.seed) {
      cfg.seed = *overrides.seed;
      cfg.raw["seed"] = *overrides.seed;
    }
    if (overrides.out_prefix) cfg.out_prefix = *overrides.out_prefix;
    if (overrides.threads) set_thread_count(*overrides.threads);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "flowlab: configuration error: %s\n", e.what());
    return 2;
  }

  ExperimentOutput result;
  try {
    if (cfg.experiment == "density_bound") result = run_density_bound(cfg);
    else if (cfg.experiment == "commutator_sweep") result = run_commutator_sweep(cfg);
    else if (cfg.experiment == "semigroup") result = run_semigroup(cfg);
    else if (cfg.experiment == "stability") result = run_stability(cfg);
    else if (cfg.experiment == "dimension_consistency") result = run_dimension_consistency(cfg);
    else if (cfg.experiment == "rotated_flow") result = run_rotated_flow(cfg);
    else if (cfg.experiment == "ou_properties") result = run_ou_properties(cfg);
    else result = run_cancellation_identities(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "flowlab: configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "flowlab: experiment failed: %s\n", e.what());
    return 1;
  }

  ordered_json report;
  report["experiment"] = cfg.experiment;
  report["build_id"] = FLOWLAB_BUILD_ID;
  report["seed"] = cfg.seed;
  report["config"] = cfg.raw;
  report["results"] = result.results;
  report["pass"] = result.pass;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  report["timestamp"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count();

  {
    std::ofstream os(cfg.out_prefix + ".report.json", std::ios::binary);
    if (!os) {
      std::fprintf(stderr, "flowlab: cannot write %s.report.json\n", cfg.out_prefix.c_str());
      return 2;
    }
    os << report.dump(2) << '\n';
  }
  {
    std::ofstream os(cfg.out_prefix + ".table.csv", std::ios::binary);
    if (!os) {
      std::fprintf(stderr, "flowlab: cannot write %s.table.csv\n", cfg.out_prefix.c_str());
      return 2;
    }
    os << result.table.os.str();
  }
  return result.pass ? 0 : 1;
}

}  // namespace flowlab
