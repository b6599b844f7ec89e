#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "flowlab/linalg.hpp"

namespace flowlab {

using ScalarFn = std::function<double(std::span<const double>)>;

enum class QuadKind { GaussHermite, MonteCarlo };

// A rule for expectations against the standard Gaussian gamma on R^dim.
// Probabilists' normalization throughout: weights are >= 0 and sum to 1.
// Tensor Gauss-Hermite nodes are enumerated lazily (odometer order, last
// axis fastest) so large tensor grids never materialize.
struct QuadratureScheme {
  QuadKind kind = QuadKind::GaussHermite;
  int dim = 1;

  // Gauss-Hermite
  int nodes_per_axis = 0;
  std::vector<double> axis_nodes;
  std::vector<double> axis_weights;

  // Monte Carlo
  long sample_count = 0;
  std::uint64_t seed = 0;
  std::vector<double> mc_nodes;  // flat [sample][coordinate]

  std::size_t size() const;
  // Writes node k into out (size dim) and returns its weight.
  double load_node(std::size_t k, std::span<double> out) const;
  bool is_monte_carlo() const { return kind == QuadKind::MonteCarlo; }
};

// resolution = nodes per axis (GH) or sample count (MC).
QuadratureScheme make_quadrature(QuadKind kind, int dim, long resolution,
                                 std::uint64_t seed = 0);

// 1-D rules, exposed for reuse. GH is for weight e^{-x^2/2}/sqrt(2*pi)
// (weights sum to 1); GL is for the interval [-1, 1] (weights sum to 2).
// Both come from Golub-Welsch on the corresponding Jacobi matrix.
void gauss_hermite_rule(int n, std::vector<double>& nodes, std::vector<double>& weights);
void gauss_legendre_rule(int n, std::vector<double>& nodes, std::vector<double>& weights);

double expectation(const ScalarFn& f, const QuadratureScheme& quad);

struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;  // 0 for deterministic (GH) rules
};
EstimateWithError expectation_with_error(const ScalarFn& f, const QuadratureScheme& quad);

// L^p(gamma) norm of a scalar function.
double lp_norm(const ScalarFn& f, double p, const QuadratureScheme& quad);

// Lambda(p) = ( (2*pi)^{-1/2} int |x|^p e^{-x^2/2} dx )^{1/p}, p >= 1,
// by adaptive quadrature to relative 1e-10 (no special functions).
double lambda_moment(double p);

struct MomentTable {
  double p = 0.0;
  double lambda_p = 0.0;
};
MomentTable moment_table(double p);

// The two-copy rotation (x, y) -> (z, w):
//   z =  e^{-eps} x + sqrt(1 - e^{-2 eps}) y
//   w = -sqrt(1 - e^{-2 eps}) x + e^{-eps} y
// It maps gamma x gamma to gamma x gamma and preserves |x|^2 + |y|^2.
void gaussian_rotation(std::span<const double> x, std::span<const double> y,
                       double eps, std::span<double> z, std::span<double> w);

struct MomentIdentity {
  double lhs = 0.0;  // ( int |l.w|^p dgamma )^{1/p} via quad
  double rhs = 0.0;  // Lambda(p) |l|
  double lhs_se = 0.0;
};
MomentIdentity moment_identity_check(const Vec& l, double p, const QuadratureScheme& quad);

struct QuadraticCancellation {
  double lhs_sq = 0.0;  // int |<Aw,w> - c|^2 dgamma via quad
  double rhs_sq = 0.0;  // 2 ||A^sym||_HS^2 + (tr A - c)^2
  double lhs_se = 0.0;
};
QuadraticCancellation quadratic_cancellation(const Mat& a, double c,
                                             const QuadratureScheme& quad);

}  // namespace flowlab
