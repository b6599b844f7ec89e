#pragma once

#include <functional>
#include <span>
#include <utility>

#include "flowlab/gaussian_core.hpp"

namespace flowlab {

using VectorFn = std::function<Vec(std::span<const double>)>;

// Smallest semigroup time accepted by the gradient-type formulas; below it
// the 1/sqrt(1 - e^{-2t}) factor amplifies inner-quadrature noise instead of
// failing loudly.
inline constexpr double kMinGradientTime = 1e-6;

// The Ornstein-Uhlenbeck operator T_t realized through Mehler's formula,
// with the y-integral carried out by inner_quad.
struct OuOperator {
  double t = 0.0;
  QuadratureScheme inner;
};

// Default inner rule: Gauss-Hermite for dim <= 4, seeded Monte Carlo above.
// The MC stream is sub-seeded from the master seed ("ou.inner").
QuadratureScheme make_inner_quadrature(int dim, std::uint64_t master_seed,
                                       int gh_nodes = 20, long mc_samples = 8192);

// T_t u(x) = int u(e^{-t} x + sqrt(1-e^{-2t}) y) dgamma(y).
double mehler_apply(const ScalarFn& u, const OuOperator& op, std::span<const double> x);

// grad T_t u(x) = e^{-t} int u(...) y / sqrt(1-e^{-2t}) dgamma(y); t must be
// at least kMinGradientTime.
Vec mehler_gradient(const ScalarFn& u, const OuOperator& op, std::span<const double> x);

// T_eps(div_gamma(v c))(x) without differentiating v or c:
//   int (v c)(e^{-eps}x + s y) . y / s dgamma(y) - T_eps(z -> z.(v c)(z))(x)
// with s = sqrt(1-e^{-2 eps}).
double smoothed_divergence(const ScalarFn& v, const VectorFn& c, double eps,
                           const QuadratureScheme& inner, std::span<const double> x);

// (int v T_t u dgamma, int u T_t v dgamma); equal when T_t is self-adjoint.
std::pair<double, double> self_adjoint_check(const ScalarFn& u, const ScalarFn& v,
                                             double t, const QuadratureScheme& outer,
                                             const QuadratureScheme& inner);

}  // namespace flowlab
