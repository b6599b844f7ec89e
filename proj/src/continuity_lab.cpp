#include "flowlab/continuity_lab.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "flowlab/util.hpp"

namespace flowlab {

double TestFunction::value(std::span<const double> x) const {
  double acc = 0.0;
  for (const auto& term : terms) {
    double prod = term.coeff;
    for (int d = 0; d < coords; ++d)
      for (int e = 0; e < term.exponents[d]; ++e) prod *= x[d];
    acc += prod;
  }
  if (mollifier_radius > 0.0) {
    double sq = 0.0;
    for (int d = 0; d < coords; ++d) sq += x[d] * x[d];
    acc *= std::exp(-0.5 * sq / (mollifier_radius * mollifier_radius));
  }
  return acc;
}

Vec TestFunction::gradient(std::span<const double> x, int ambient_dim) const {
  Vec g(ambient_dim, 0.0);
  for (const auto& term : terms)
    for (int d = 0; d < coords; ++d) {
      if (term.exponents[d] == 0) continue;
      double prod = term.coeff * term.exponents[d];
      for (int j = 0; j < coords; ++j) {
        const int e = term.exponents[j] - (j == d ? 1 : 0);
        for (int k = 0; k < e; ++k) prod *= x[j];
      }
      g[d] += prod;
    }
  if (mollifier_radius > 0.0) {
    const double r2 = mollifier_radius * mollifier_radius;
    double sq = 0.0;
    for (int d = 0; d < coords; ++d) sq += x[d] * x[d];
    const double moll = std::exp(-0.5 * sq / r2);
    double poly = 0.0;
    for (const auto& term : terms) {
      double prod = term.coeff;
      for (int d = 0; d < coords; ++d)
        for (int e = 0; e < term.exponents[d]; ++e) prod *= x[d];
      poly += prod;
    }
    for (int d = 0; d < coords; ++d) g[d] = moll * (g[d] - poly * x[d] / r2);
  }
  return g;
}

TestFunction cylindrical_polynomial(int coords, std::vector<Monomial> terms,
                                    double mollifier_radius) {
  for (auto& t : terms) {
    if (static_cast<int>(t.exponents.size()) != coords)
      throw ConfigError("monomial exponent list must have one entry per coordinate");
    int degree = 0;
    for (int e : t.exponents) degree += e;
    if (degree > 4) throw ConfigError("cylindrical test polynomials are capped at degree 4");
  }
  return TestFunction{coords, std::move(terms), mollifier_radius};
}

double RenormalizationProfile::beta(double z) const {
  if (kind == Kind::SmoothBeta) return std::sqrt(1.0 + z * z) - 1.0;
  if (z <= 0.0) return 0.0;
  return std::sqrt(z * z + eps * eps) - eps;
}

double RenormalizationProfile::beta_prime(double z) const {
  if (kind == Kind::SmoothBeta) return z / std::sqrt(1.0 + z * z);
  if (z <= 0.0) return 0.0;
  return z / std::sqrt(z * z + eps * eps);
}

BackwardDensity backward_density(const FieldSpec& f, double t, std::span<const double> y,
                                 int steps, IntegratorOptions opts) {
  BackwardDensity out;
  if (t <= 0.0) {
    out.density = 1.0;
    out.origin.assign(y.begin(), y.end());
    return out;
  }
  // Reversed field: Z' (s) = -b(t - s, Z), s in [0, t].
  FieldSpec reversed;
  reversed.dim = f.dim;
  reversed.horizon = t;
  reversed.value = [f, t](double s, std::span<const double> z, std::span<double> o) {
    f.value(t - s, z, o);
    for (auto& v : o) v = -v;
  };
  if (f.jacobian)
    reversed.jacobian = [f, t](double s, std::span<const double> z) {
      Mat j = f.jacobian(t - s, z);
      j *= -1.0;
      return j;
    };
  IntegratorOptions back_opts = opts;
  back_opts.track_logs = false;
  const auto back_grid = uniform_grid(0.0, t, steps);
  const auto back = integrate_flow(reversed, y, back_grid, back_opts);
  if (!back.alive[0]) {
    out.dead = true;
    out.origin.assign(y.begin(), y.end());
    return out;
  }
  const auto origin = back.position(0, back.nodes() - 1);
  out.origin.assign(origin.begin(), origin.end());

  const auto forward_grid = uniform_grid(0.0, t, steps);
  const auto forward = integrate_flow(f, out.origin, forward_grid, opts);
  if (!forward.alive[0]) {
    out.dead = true;
    return out;
  }
  out.density = std::exp(forward.logu(0, forward.nodes() - 1));
  return out;
}

WeakResidual weak_residual(
    const FieldSpec& f, const FlowTrajectoryBatch& batch, const TestFunction& phi,
    std::size_t t_index,
    const std::function<double(double, std::span<const double>)>& source) {
  const std::size_t m = batch.nodes();
  if (m < 2) throw ConfigError("weak_residual needs at least two grid nodes");
  const std::size_t count = batch.particles();
  const int dim = batch.dim;

  auto phi_mean = [&](std::size_t ti) {
    std::vector<double> terms(count);
    for (std::size_t k = 0; k < count; ++k) terms[k] = phi.value(batch.position(k, ti));
    return pairwise_sum(terms) / static_cast<double>(count);
  };

  WeakResidual out;
  std::size_t lo, hi;
  if (t_index == 0) {
    lo = 0;
    hi = 1;
    out.one_sided = true;
  } else if (t_index + 1 >= m) {
    lo = m - 2;
    hi = m - 1;
    out.one_sided = true;
  } else {
    lo = t_index - 1;
    hi = t_index + 1;
  }
  out.lhs = (phi_mean(hi) - phi_mean(lo)) / (batch.time_grid[hi] - batch.time_grid[lo]);

  const double t = batch.time_grid[t_index];
  std::vector<double> terms(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto x = batch.position(k, t_index);
    const Vec b = f.eval(t, x);
    const Vec grad = phi.gradient(x, dim);
    double v = dot(b, grad);
    if (source) v += source(t, x) * phi.value(x);
    terms[k] = v;
  }
  out.rhs = pairwise_sum(terms) / static_cast<double>(count);
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

namespace {

// beta(u) and [beta(u) - u beta'(u)] div_gamma b on the quadrature nodes at
// one time, weighted; dead backward trajectories are skipped with a warning
// through the returned dead counter.
struct RenormSlice {
  double beta_integral = 0.0;
  double defect_integral = 0.0;
  double defect_se = 0.0;  // nonzero only for Monte Carlo rules
  std::size_t dead = 0;
};

RenormSlice renorm_slice(const FieldSpec& f, const RenormalizationProfile& profile,
                         double t, const QuadratureScheme& quad, int backward_steps,
                         const IntegratorOptions& opts) {
  const std::size_t n = quad.size();
  std::vector<double> beta_terms(n, 0.0), defect_terms(n, 0.0);
  std::vector<std::uint8_t> dead(n, 0);
  parallel_for(n, [&](std::size_t k) {
    Vec y(quad.dim);
    const double w = quad.load_node(k, y);
    const auto bd = backward_density(f, t, y, backward_steps, opts);
    if (bd.dead) {
      dead[k] = 1;
      return;
    }
    const double u = bd.density;
    beta_terms[k] = w * profile.beta(u);
    defect_terms[k] =
        w * (profile.beta(u) - u * profile.beta_prime(u)) * gaussian_divergence(f, t, y);
  });
  RenormSlice slice;
  slice.beta_integral = pairwise_sum(beta_terms);
  slice.defect_integral = pairwise_sum(defect_terms);
  for (auto d : dead) slice.dead += d;
  if (quad.is_monte_carlo() && n > 1) {
    std::vector<double> sq(n);
    const double scaled_mean = slice.defect_integral;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = defect_terms[k] * static_cast<double>(n) - scaled_mean;
      sq[k] = v * v;
    }
    slice.defect_se =
        std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return slice;
}

}  // namespace

std::vector<ResidualRow> renormalization_residual(const FieldSpec& f,
                                                  const RenormalizationProfile& profile,
                                                  std::span<const double> time_grid,
                                                  const QuadratureScheme& quad,
                                                  int backward_steps, IntegratorOptions opts) {
  const std::size_t m = time_grid.size();
  if (m < 3) throw ConfigError("renormalization_residual needs >= 3 time nodes");
  std::vector<RenormSlice> slices(m);
  for (std::size_t i = 0; i < m; ++i)
    slices[i] = renorm_slice(f, profile, time_grid[i], quad, backward_steps, opts);

  std::vector<ResidualRow> rows;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    ResidualRow row;
    row.t = time_grid[i];
    row.lhs = (slices[i + 1].beta_integral - slices[i - 1].beta_integral) /
              (time_grid[i + 1] - time_grid[i - 1]);
    row.rhs = slices[i].defect_integral;
    row.residual = std::abs(row.lhs - row.rhs);
    row.std_error = slices[i].defect_se;
    rows.push_back(row);
  }
  return rows;
}

double divergence_negative_part(const FieldSpec& f, double t, const QuadratureScheme& quad) {
  return expectation(
      [&](std::span<const double> x) {
        return std::max(0.0, -gaussian_divergence(f, t, x));
      },
      quad);
}

double sign_preservation_probe(const FieldSpec& f, const ScalarFn& u0,
                               std::span<const double> time_grid,
                               const QuadratureScheme& quad, int backward_steps,
                               IntegratorOptions opts) {
  double worst = 0.0;
  const std::size_t n = quad.size();
  for (const double t : time_grid) {
    std::vector<double> terms(n, 0.0);
    parallel_for(n, [&](std::size_t k) {
      Vec y(quad.dim);
      const double w = quad.load_node(k, y);
      const auto bd = backward_density(f, t, y, backward_steps, opts);
      if (bd.dead) return;
      const double u = u0(bd.origin) * bd.density;
      terms[k] = w * std::max(0.0, u);
    });
    worst = std::max(worst, pairwise_sum(terms));
  }
  return worst;
}

void export_residuals_csv(std::span<const ResidualRow> rows, std::ostream& os) {
  os << "t,lhs,rhs,residual,std_error\n";
  char buf[40];
  auto put = [&](double v, bool lead_comma) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (lead_comma) os << ',';
    os << buf;
  };
  for (const auto& row : rows) {
    put(row.t, false);
    put(row.lhs, true);
    put(row.rhs, true);
    put(row.residual, true);
    put(row.std_error, true);
    os << '\n';
  }
}

}  // namespace flowlab
