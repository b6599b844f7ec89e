#include "flowlab/gaussian_core.hpp"

#include <cmath>
#include <sstream>

#include "flowlab/rng.hpp"
#include "flowlab/util.hpp"

namespace flowlab {

namespace {

constexpr long kMaxNodes = 10'000'000;

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

void gauss_hermite_rule(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  // Jacobi matrix for probabilists' Hermite polynomials: zero diagonal,
  // off-diagonal sqrt(k). Total measure is 1.
  nodes.assign(n, 0.0);
  std::vector<double> off(n > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  std::vector<double> first;
  symmetric_tridiagonal_eigen(nodes, off, first);
  weights.resize(n);
  for (int i = 0; i < n; ++i) weights[i] = first[i] * first[i];
  // Symmetrize: the rule is symmetric in exact arithmetic; enforcing it makes
  // odd moments vanish identically.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (nodes[j] - nodes[i]);
    nodes[i] = -x;
    nodes[j] = x;
    const double w = 0.5 * (weights[i] + weights[j]);
    weights[i] = weights[j] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

void gauss_legendre_rule(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  std::vector<double> off(n > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  std::vector<double> first;
  symmetric_tridiagonal_eigen(nodes, off, first);
  weights.resize(n);
  for (int i = 0; i < n; ++i) weights[i] = 2.0 * first[i] * first[i];
}

std::size_t QuadratureScheme::size() const {
  if (kind == QuadKind::MonteCarlo) return static_cast<std::size_t>(sample_count);
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(nodes_per_axis);
  return total;
}

double QuadratureScheme::load_node(std::size_t k, std::span<double> out) const {
  if (kind == QuadKind::MonteCarlo) {
    const double* p = mc_nodes.data() + k * static_cast<std::size_t>(dim);
    for (int d = 0; d < dim; ++d) out[d] = p[d];
    return 1.0 / static_cast<double>(sample_count);
  }
  double w = 1.0;
  std::size_t rest = k;
  for (int d = dim - 1; d >= 0; --d) {
    const std::size_t idx = rest % nodes_per_axis;
    rest /= nodes_per_axis;
    out[d] = axis_nodes[idx];
    w *= axis_weights[idx];
  }
  return w;
}

QuadratureScheme make_quadrature(QuadKind kind, int dim, long resolution,
                                 std::uint64_t seed) {
  if (dim < 1) throw ConfigError("quadrature dim must be >= 1");
  if (resolution < 1) throw ConfigError("quadrature resolution must be >= 1");
  QuadratureScheme q;
  q.kind = kind;
  q.dim = dim;
  if (kind == QuadKind::GaussHermite) {
    if (static_cast<double>(dim) * std::log(static_cast<double>(resolution)) >
        std::log(static_cast<double>(kMaxNodes)) + 1e-12)
      throw ConfigError("tensor Gauss-Hermite node count exceeds 10^7");
    q.nodes_per_axis = static_cast<int>(resolution);
    gauss_hermite_rule(q.nodes_per_axis, q.axis_nodes, q.axis_weights);
  } else {
    if (resolution > kMaxNodes) throw ConfigError("Monte Carlo sample count exceeds 10^7");
    q.sample_count = resolution;
    q.seed = seed;
    q.mc_nodes = sample_gaussian(static_cast<std::size_t>(resolution), dim, seed);
  }
  return q;
}

double expectation(const ScalarFn& f, const QuadratureScheme& quad) {
  return expectation_with_error(f, quad).value;
}

EstimateWithError expectation_with_error(const ScalarFn& f, const QuadratureScheme& quad) {
  const std::size_t n = quad.size();
  std::vector<double> terms(n);
  std::vector<double> values;
  if (quad.is_monte_carlo()) values.resize(n);
  parallel_for(n, [&](std::size_t k) {
    std::vector<double> x(quad.dim);
    const double w = quad.load_node(k, x);
    const double v = f(x);
    if (!std::isfinite(v))
      throw EvalError("non-finite integrand value at node " + format_point(x),
                      std::vector<double>(x.begin(), x.end()));
    terms[k] = w * v;
    if (quad.is_monte_carlo()) values[k] = v;
  });
  EstimateWithError out;
  out.value = pairwise_sum(terms);
  if (quad.is_monte_carlo() && n > 1) {
    std::vector<double> sq(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double d = values[k] - out.value;
      sq[k] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    out.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

double lp_norm(const ScalarFn& f, double p, const QuadratureScheme& quad) {
  const double m = expectation(
      [&](std::span<const double> x) { return std::pow(std::abs(f(x)), p); }, quad);
  return std::pow(m, 1.0 / p);
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double lambda_moment(double p) {
  if (p < 1.0) throw ConfigError("lambda_moment requires p >= 1");
  // Integrand peaks near sqrt(p); beyond R the tail is below 1e-300.
  const double radius = std::max(16.0, 2.0 * std::sqrt(p) + 16.0);
  const auto integrand = [p](double x) {
    return 2.0 / std::sqrt(2.0 * M_PI) * std::pow(x, p) * std::exp(-0.5 * x * x);
  };
  // Rough scale for the absolute tolerance backing the 1e-10 relative target.
  const double scale = std::max(1.0, std::pow(std::sqrt(p), p) * std::exp(-0.5 * p));
  const double moment = integrate_adaptive(integrand, 0.0, radius, 1e-12 * scale);
  return std::pow(moment, 1.0 / p);
}

MomentTable moment_table(double p) { return MomentTable{p, lambda_moment(p)}; }

void gaussian_rotation(std::span<const double> x, std::span<const double> y,
                       double eps, std::span<double> z, std::span<double> w) {
  const double c = std::exp(-eps);
  const double s = std::sqrt(1.0 - c * c);
  for (std::size_t i = 0; i < x.size(); ++i) {
    z[i] = c * x[i] + s * y[i];
    w[i] = -s * x[i] + c * y[i];
  }
}

MomentIdentity moment_identity_check(const Vec& l, double p, const QuadratureScheme& quad) {
  const auto est = expectation_with_error(
      [&](std::span<const double> w) { return std::pow(std::abs(dot(l, w)), p); }, quad);
  MomentIdentity out;
  out.lhs = std::pow(est.value, 1.0 / p);
  out.rhs = lambda_moment(p) * norm(l);
  // Delta method through the 1/p power.
  if (est.value > 0.0)
    out.lhs_se = est.std_error / p * std::pow(est.value, 1.0 / p - 1.0);
  return out;
}

QuadraticCancellation quadratic_cancellation(const Mat& a, double c,
                                             const QuadratureScheme& quad) {
  const auto est = expectation_with_error(
      [&](std::span<const double> w) {
        const Vec aw = a.apply(w);
        const double d = dot(aw, w) - c;
        return d * d;
      },
      quad);
  QuadraticCancellation out;
  out.lhs_sq = est.value;
  out.lhs_se = est.std_error;
  const double hs = hs_norm(a.symmetric_part());
  const double t = a.trace() - c;
  out.rhs_sq = 2.0 * hs * hs + t * t;
  return out;
}

}  // namespace flowlab
