#include "flowlab/flow_engine.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "flowlab/rng.hpp"
#include "flowlab/util.hpp"

namespace flowlab {

namespace {
constexpr double kExpArgGuard = 700.0;  // exp overflows just above 709
}

std::span<const double> FlowTrajectoryBatch::position(std::size_t k, std::size_t ti) const {
  const std::size_t stride = nodes() * static_cast<std::size_t>(dim);
  return std::span(positions).subspan(k * stride + ti * dim, dim);
}

double FlowTrajectoryBatch::logj(std::size_t k, std::size_t ti) const {
  return log_jacobian[k * nodes() + ti];
}

double FlowTrajectoryBatch::logu(std::size_t k, std::size_t ti) const {
  return log_density[k * nodes() + ti];
}

std::size_t FlowTrajectoryBatch::dead_count() const {
  std::size_t n = 0;
  for (auto a : alive)
    if (!a) ++n;
  return n;
}

std::vector<double> uniform_grid(double t0, double t1, int steps) {
  if (steps < 1 || t1 <= t0) throw ConfigError("uniform_grid needs steps >= 1 and t1 > t0");
  std::vector<double> g(steps + 1);
  for (int i = 0; i <= steps; ++i)
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / steps;
  g.back() = t1;
  return g;
}

namespace {

struct ParticleState {
  Vec x;
  double logj = 0.0;
  double logu = 0.0;
};

// One RK4 step of the extended system (X, log J, log u) over [t, t+h].
// Returns false when a non-finite value shows up.
bool rk4_step(const FieldSpec& f, double t, double h, bool track_logs, ParticleState& st,
              Vec& stage_x, Vec& k1, Vec& k2, Vec& k3, Vec& k4) {
  const int dim = f.dim;
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0;  // div b at stages
  double g1 = 0, g2 = 0, g3 = 0, g4 = 0;  // div_gamma b at stages

  auto eval_stage = [&](double ts, const Vec& xs, Vec& k, double& dv, double& gv) {
    f.value(ts, xs, k);
    if (track_logs) {
      dv = euclidean_divergence(f, ts, xs);
      gv = dv - dot(k, xs);
    }
  };

  eval_stage(t, st.x, k1, d1, g1);
  for (int d = 0; d < dim; ++d) stage_x[d] = st.x[d] + 0.5 * h * k1[d];
  eval_stage(t + 0.5 * h, stage_x, k2, d2, g2);
  for (int d = 0; d < dim; ++d) stage_x[d] = st.x[d] + 0.5 * h * k2[d];
  eval_stage(t + 0.5 * h, stage_x, k3, d3, g3);
  for (int d = 0; d < dim; ++d) stage_x[d] = st.x[d] + h * k3[d];
  eval_stage(t + h, stage_x, k4, d4, g4);

  double sumsq = 0.0;
  for (int d = 0; d < dim; ++d) {
    st.x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    sumsq += st.x[d] * st.x[d];
  }
  if (track_logs) {
    st.logj += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
    st.logu -= h / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4);
  }
  return std::isfinite(sumsq) && std::isfinite(st.logj) && std::isfinite(st.logu);
}

}  // namespace

FlowTrajectoryBatch integrate_flow(const FieldSpec& f, std::span<const double> initial,
                                   std::span<const double> time_grid, IntegratorOptions opts) {
  const int dim = f.dim;
  if (time_grid.size() < 1) throw ConfigError("integrate_flow needs a nonempty time grid");
  for (std::size_t i = 0; i + 1 < time_grid.size(); ++i)
    if (!(time_grid[i] < time_grid[i + 1]))
      throw ConfigError("time grid must be strictly increasing");
  const std::size_t count = initial.size() / dim;
  const std::size_t m = time_grid.size();

  FlowTrajectoryBatch batch;
  batch.dim = dim;
  batch.time_grid.assign(time_grid.begin(), time_grid.end());
  batch.positions.resize(count * m * dim);
  batch.log_jacobian.assign(count * m, 0.0);
  batch.log_density.assign(count * m, 0.0);
  batch.alive.assign(count, 1);
  batch.frozen_at.assign(count, -1);

  const double guard_sq = opts.blow_up_radius * opts.blow_up_radius;
  parallel_for(count, [&](std::size_t k) {
    ParticleState st;
    st.x.assign(initial.begin() + k * dim, initial.begin() + (k + 1) * dim);
    Vec stage(dim), k1(dim), k2(dim), k3(dim), k4(dim);
    bool live = true;

    auto store = [&](std::size_t ti) {
      double* pos = batch.positions.data() + (k * m + ti) * dim;
      for (int d = 0; d < dim; ++d) pos[d] = st.x[d];
      batch.log_jacobian[k * m + ti] = st.logj;
      batch.log_density[k * m + ti] = st.logu;
    };

    store(0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (live) {
        const double t0 = time_grid[i];
        const double h = (time_grid[i + 1] - t0) / opts.substeps;
        ParticleState saved = st;
        for (int sub = 0; sub < opts.substeps && live; ++sub) {
          if (!rk4_step(f, t0 + sub * h, h, opts.track_logs, st, stage, k1, k2, k3, k4) ||
              dot(st.x, st.x) > guard_sq) {
            // Freeze at the last grid-node state; the maximal time landed
            // inside this interval.
            st = saved;
            live = false;
            batch.alive[k] = 0;
            batch.frozen_at[k] = static_cast<long>(i);
          }
        }
      }
      store(i + 1);
    }
  });
  return batch;
}

FlowTrajectoryBatch integrate_flow(const FieldSpec& f, std::size_t count, std::uint64_t seed,
                                   std::span<const double> time_grid, IntegratorOptions opts) {
  const auto points = sample_gaussian(count, f.dim, split_seed(seed, "flow.particles"));
  return integrate_flow(f, points, time_grid, opts);
}

FlowTrajectoryBatch flow_from_time(const FieldSpec& f, double s,
                                   std::span<const double> initial,
                                   std::span<const double> grid_from_s,
                                   IntegratorOptions opts) {
  if (grid_from_s.empty() || std::abs(grid_from_s.front() - s) > 1e-12)
    throw ConfigError("flow_from_time grid must start at s");
  return integrate_flow(f, initial, grid_from_s, opts);
}

DensityEstimate density_lr_norm(const FlowTrajectoryBatch& batch, double r,
                                std::size_t t_index) {
  if (r < 1.0) throw ConfigError("density_lr_norm requires r >= 1");
  const std::size_t count = batch.particles();
  if (count == 0 || batch.dead_count() == count)
    throw std::runtime_error("density_lr_norm: no alive particles");
  std::vector<double> terms(count);
  for (std::size_t k = 0; k < count; ++k)
    terms[k] = std::exp((r - 1.0) * batch.logu(k, t_index));
  DensityEstimate out;
  out.estimate = pairwise_sum(terms) / static_cast<double>(count);
  out.dead_count = batch.dead_count();
  if (count > 1) {
    std::vector<double> sq(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double d = terms[k] - out.estimate;
      sq[k] = d * d;
    }
    out.std_error =
        std::sqrt(pairwise_sum(sq) / static_cast<double>(count - 1) / static_cast<double>(count));
  }
  return out;
}

ExpBound divergence_exp_bound(const FieldSpec& f, double r, const QuadratureScheme& quad,
                              std::span<const double> time_nodes) {
  ExpBound out;
  out.value = 0.0;
  const double horizon = f.horizon;
  for (const double t : time_nodes) {
    double node_value;
    try {
      node_value = expectation(
          [&](std::span<const double> x) {
            const double neg = std::max(0.0, -gaussian_divergence(f, t, x));
            const double arg = horizon * r * neg;
            if (arg > kExpArgGuard)
              throw EvalError("divergence_exp_bound overflow",
                              std::vector<double>(x.begin(), x.end()));
            return std::exp(arg);
          },
          quad);
    } catch (const EvalError& e) {
      out.value = std::numeric_limits<double>::infinity();
      out.overflow = true;
      out.overflow_time = t;
      out.overflow_point = e.point();
      return out;
    }
    if (node_value > out.value) {
      out.value = node_value;
      out.arg_time = t;
    }
  }
  return out;
}

DensityBoundReport check_density_bound(const FieldSpec& f, double r, std::size_t particles,
                                       std::span<const double> time_grid,
                                       const QuadratureScheme& quad, std::uint64_t seed,
                                       IntegratorOptions opts) {
  DensityBoundReport report;
  report.r = r;
  const auto batch = integrate_flow(f, particles, seed, time_grid, opts);
  const auto bound = divergence_exp_bound(f, r, quad, time_grid);
  report.rhs = bound.value;
  report.rhs_finite = !bound.overflow;
  report.dead_count = batch.dead_count();
  report.pass = true;
  for (std::size_t i = 0; i < time_grid.size(); ++i) {
    const auto est = density_lr_norm(batch, r, i);
    report.times.push_back(time_grid[i]);
    report.lhs.push_back(est.estimate);
    report.std_error.push_back(est.std_error);
    report.margin.push_back(report.rhs - est.estimate);
    const double slack = 1e-12 * (1.0 + std::abs(report.rhs));  // quadrature roundoff
    if (report.rhs_finite && est.estimate > report.rhs + 3.0 * est.std_error + slack)
      report.pass = false;
  }
  return report;
}

double semigroup_discrepancy(const FieldSpec& f, double r, double s, double t,
                             std::size_t particles, std::uint64_t seed,
                             int steps_per_segment, IntegratorOptions opts) {
  if (!(0.0 <= r && r <= s && s <= t)) throw ConfigError("need 0 <= r <= s <= t");
  opts.track_logs = false;
  const auto initial = sample_gaussian(particles, f.dim, split_seed(seed, "flow.particles"));
  const int dim = f.dim;

  auto end_points = [&](std::span<const double> from, double a, double b) {
    if (b <= a + 1e-15) return std::vector<double>(from.begin(), from.end());
    const auto grid = uniform_grid(a, b, steps_per_segment);
    const auto batch = integrate_flow(f, from, grid, opts);
    std::vector<double> out(from.size());
    for (std::size_t k = 0; k < batch.particles(); ++k) {
      const auto p = batch.position(k, batch.nodes() - 1);
      for (int d = 0; d < dim; ++d) out[k * dim + d] = p[d];
    }
    return out;
  };

  const auto mid = end_points(initial, r, s);        // X^r(s, x)
  const auto chained = end_points(mid, s, t);        // X^s(t, X^r(s, x))
  const auto direct = end_points(initial, r, t);     // X^r(t, x)

  std::vector<double> terms(particles);
  for (std::size_t k = 0; k < particles; ++k) {
    double sq = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = chained[k * dim + d] - direct[k * dim + d];
      sq += diff * diff;
    }
    terms[k] = std::sqrt(sq);
  }
  return pairwise_sum(terms) / static_cast<double>(particles);
}

RotatedFlowResult rotated_flow_solve(const FieldSpec& f, const RotationGroup& g,
                                     std::span<const double> initial,
                                     std::span<const double> time_grid,
                                     IntegratorOptions opts) {
  const int dim = f.dim;
  const FieldSpec c = rotate_field(f, g);
  RotatedFlowResult result;
  result.batch = integrate_flow(c, initial, time_grid, opts);
  FlowTrajectoryBatch& batch = result.batch;
  const std::size_t m = batch.nodes();
  const std::size_t count = batch.particles();

  // X(t) = Q_t Y(t); logs carry over since Q_t preserves gamma and volume.
  std::vector<Mat> q_at(m);
  for (std::size_t i = 0; i < m; ++i) q_at[i] = g.at(time_grid[i]);
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      double* pos = batch.positions.data() + (k * m + i) * dim;
      const Vec rotated = q_at[i].apply(std::span<const double>(pos, dim));
      for (int d = 0; d < dim; ++d) pos[d] = rotated[d];
    }

  // Duhamel residual on the stored grid (trapezoid in s):
  // X(t_i) - Q_{t_i} x - int_0^{t_i} Q_{t_i - s} b_s(X(s)) ds.
  std::unordered_map<long long, Mat> q_cache;
  auto q_of = [&](double dt) -> const Mat& {
    const long long key = std::llround(dt * 1e12);
    auto it = q_cache.find(key);
    if (it == q_cache.end()) it = q_cache.emplace(key, g.at(dt)).first;
    return it->second;
  };

  result.duhamel_residual.assign(m, 0.0);
  std::vector<Vec> b_along(m);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t j = 0; j < m; ++j)
      b_along[j] = f.eval(time_grid[j], batch.position(k, j));
    const auto x0 = std::span<const double>(initial).subspan(k * dim, dim);
    for (std::size_t i = 0; i < m; ++i) {
      Vec integral(dim, 0.0);
      for (std::size_t j = 0; j + 1 <= i; ++j) {
        const double w = 0.5 * (time_grid[j + 1] - time_grid[j]);
        const Vec a = q_of(time_grid[i] - time_grid[j]).apply(b_along[j]);
        const Vec b = q_of(time_grid[i] - time_grid[j + 1]).apply(b_along[j + 1]);
        for (int d = 0; d < dim; ++d) integral[d] += w * (a[d] + b[d]);
      }
      const Vec qx = q_of(time_grid[i]).apply(x0);
      const auto xi = batch.position(k, i);
      double sq = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff = xi[d] - qx[d] - integral[d];
        sq += diff * diff;
      }
      result.duhamel_residual[i] += std::sqrt(sq) / static_cast<double>(count);
    }
  }
  return result;
}

void export_trajectories_csv(const FlowTrajectoryBatch& batch, std::ostream& os) {
  char buf[40];
  os << "particle_id,t";
  for (int d = 1; d <= batch.dim; ++d) os << ",x_" << d;
  os << ",log_jacobian,log_density,alive\n";
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (std::size_t k = 0; k < batch.particles(); ++k)
    for (std::size_t i = 0; i < batch.nodes(); ++i) {
      os << k;
      put(batch.time_grid[i]);
      const auto pos = batch.position(k, i);
      for (int d = 0; d < batch.dim; ++d) put(pos[d]);
      put(batch.logj(k, i));
      put(batch.logu(k, i));
      os << ',' << (batch.alive[k] ? 1 : 0) << '\n';
    }
}

void export_trajectories_csv(const FlowTrajectoryBatch& batch, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!os) throw ConfigError("cannot open trajectory output file: " + path);
  export_trajectories_csv(batch, os);
}

}  // namespace flowlab
