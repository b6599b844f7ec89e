#include "flowlab/ou_semigroup.hpp"

#include <cmath>
#include <stdexcept>

#include "flowlab/rng.hpp"
#include "flowlab/util.hpp"

namespace flowlab {

QuadratureScheme make_inner_quadrature(int dim, std::uint64_t master_seed,
                                       int gh_nodes, long mc_samples) {
  if (dim <= 4) return make_quadrature(QuadKind::GaussHermite, dim, gh_nodes);
  return make_quadrature(QuadKind::MonteCarlo, dim, mc_samples,
                         split_seed(master_seed, "ou.inner"));
}

double mehler_apply(const ScalarFn& u, const OuOperator& op, std::span<const double> x) {
  const double decay = std::exp(-op.t);
  const double spread = std::sqrt(std::max(0.0, 1.0 - decay * decay));
  const int dim = op.inner.dim;
  return expectation(
      [&](std::span<const double> y) {
        Vec shifted(dim);
        for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
        return u(shifted);
      },
      op.inner);
}

Vec mehler_gradient(const ScalarFn& u, const OuOperator& op, std::span<const double> x) {
  if (op.t < kMinGradientTime)
    throw std::domain_error("mehler_gradient: t below 1e-6; raise t or use analytic gradients");
  const double decay = std::exp(-op.t);
  const double spread = std::sqrt(1.0 - decay * decay);
  const int dim = op.inner.dim;
  const std::size_t n = op.inner.size();

  std::vector<double> terms(n * dim);
  parallel_for(n, [&](std::size_t k) {
    Vec y(dim), shifted(dim);
    const double w = op.inner.load_node(k, y);
    for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
    const double v = u(shifted);
    if (!std::isfinite(v)) throw EvalError("non-finite value in mehler_gradient", shifted);
    for (int d = 0; d < dim; ++d) terms[d * n + k] = w * v * y[d];
  });
  Vec grad(dim);
  for (int d = 0; d < dim; ++d)
    grad[d] = decay / spread * pairwise_sum(std::span(terms).subspan(d * n, n));
  return grad;
}

double smoothed_divergence(const ScalarFn& v, const VectorFn& c, double eps,
                           const QuadratureScheme& inner, std::span<const double> x) {
  if (eps < kMinGradientTime)
    throw std::domain_error("smoothed_divergence: eps below 1e-6");
  const double decay = std::exp(-eps);
  const double spread = std::sqrt(1.0 - decay * decay);
  const int dim = inner.dim;
  const std::size_t n = inner.size();

  std::vector<double> terms(n);
  parallel_for(n, [&](std::size_t k) {
    Vec y(dim), shifted(dim);
    const double w = inner.load_node(k, y);
    for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
    const double vs = v(shifted);
    const Vec cs = c(shifted);
    if (!std::isfinite(vs) || !std::isfinite(dot(cs, cs)))
      throw EvalError("non-finite value in smoothed_divergence", shifted);
    // (v c)(s) . (y/spread - s): gradient representation minus T_eps(z.(vc)).
    terms[k] = w * vs * (dot(cs, y) / spread - dot(cs, shifted));
  });
  return pairwise_sum(terms);
}

std::pair<double, double> self_adjoint_check(const ScalarFn& u, const ScalarFn& v,
                                             double t, const QuadratureScheme& outer,
                                             const QuadratureScheme& inner) {
  OuOperator op{t, inner};
  const double lhs = expectation(
      [&](std::span<const double> x) { return v(x) * mehler_apply(u, op, x); }, outer);
  const double rhs = expectation(
      [&](std::span<const double> x) { return u(x) * mehler_apply(v, op, x); }, outer);
  return {lhs, rhs};
}

}  // namespace flowlab
