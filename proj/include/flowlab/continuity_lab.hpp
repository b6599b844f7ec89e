#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "flowlab/flow_engine.hpp"

namespace flowlab {

// Cylindrical test function: a polynomial of degree <= 4 in the first
// `coords` coordinates, optionally times the Gaussian mollifier
// exp(-|x_{1..M}|^2 / (2 R^2)).
struct Monomial {
  std::vector<int> exponents;  // size = coords, total degree <= 4
  double coeff = 0.0;
};

struct TestFunction {
  int coords = 1;
  std::vector<Monomial> terms;
  double mollifier_radius = 0.0;  // 0 -> pure polynomial

  double value(std::span<const double> x) const;
  // Gradient in the ambient dimension; components past `coords` vanish.
  Vec gradient(std::span<const double> x, int ambient_dim) const;
};
TestFunction cylindrical_polynomial(int coords, std::vector<Monomial> terms,
                                    double mollifier_radius = 0.0);

// beta profiles admissible for renormalization: beta' and z beta' - beta
// bounded. BetaEpsPositivePart is sqrt(z^2+eps^2)-eps for z >= 0, 0 below;
// it satisfies -eps <= beta(z) - z beta'(z) <= 0.
struct RenormalizationProfile {
  enum class Kind { SmoothBeta, BetaEpsPositivePart };
  Kind kind = Kind::SmoothBeta;
  double eps = 0.0;  // BetaEpsPositivePart parameter

  double beta(double z) const;
  double beta_prime(double z) const;
};

struct BackwardDensity {
  double density = 0.0;  // u_t(y); 0 when the backward trajectory blows up
  Vec origin;            // recovered x = X^{-1}(t, y)
  bool dead = false;
};
// Integrates the time-reversed ODE from (t, y) down to time 0, then the
// forward trajectory from the recovered origin, and returns
// exp(-int_0^t div_gamma b_tau(X(tau)) dtau).
BackwardDensity backward_density(const FieldSpec& f, double t, std::span<const double> y,
                                 int steps, IntegratorOptions opts = {});

struct WeakResidual {
  double residual = 0.0;
  double lhs = 0.0;  // d/dt <phi(X(t,.))> by time differencing
  double rhs = 0.0;  // <<b_t(X), grad phi(X)>> (+ source term when given)
  bool one_sided = false;
};
// Residual of the weak continuity equation along a computed batch at grid
// node t_index (central difference inside, one-sided at the ends).
WeakResidual weak_residual(
    const FieldSpec& f, const FlowTrajectoryBatch& batch, const TestFunction& phi,
    std::size_t t_index,
    const std::function<double(double, std::span<const double>)>& source = {});

struct ResidualRow {
  double t = 0.0;
  double lhs = 0.0;  // d/dt int beta(u_t) dgamma
  double rhs = 0.0;  // int [beta(u) - u beta'(u)] div_gamma b_t dgamma
  double residual = 0.0;
  double std_error = 0.0;
};
// Both sides of the renormalization identity with test function 1, on the
// interior nodes of time_grid; u_t on quadrature nodes comes from
// backward_density.
std::vector<ResidualRow> renormalization_residual(const FieldSpec& f,
                                                  const RenormalizationProfile& profile,
                                                  std::span<const double> time_grid,
                                                  const QuadratureScheme& quad,
                                                  int backward_steps,
                                                  IntegratorOptions opts = {});

// int [div_gamma b_t]^- dgamma; the right side of the one-sided estimate
// d/dt int beta_eps(u_t) dgamma <= eps * this.
double divergence_negative_part(const FieldSpec& f, double t, const QuadratureScheme& quad);

// Transports a signed initial density u_0 and returns
// max over the grid of int max(0, u_t) dgamma; zero when signs are preserved.
double sign_preservation_probe(const FieldSpec& f, const ScalarFn& u0,
                               std::span<const double> time_grid,
                               const QuadratureScheme& quad, int backward_steps,
                               IntegratorOptions opts = {});

void export_residuals_csv(std::span<const ResidualRow> rows, std::ostream& os);

}  // namespace flowlab
