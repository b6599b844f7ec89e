#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowlab/gaussian_core.hpp"
#include "flowlab/linalg.hpp"

namespace flowlab {

// A time-dependent vector field b_t on R^dim with optional analytic
// attributes. Callbacks must be pure; FieldSpec is immutable once built.
// Missing attributes fall back to finite differences of value.
struct FieldSpec {
  int dim = 1;
  double horizon = 1.0;

  // b(t, x) written into out (size dim).
  std::function<void(double, std::span<const double>, std::span<double>)> value;
  // Optional: J_ij = d b^i / d x_j.
  std::function<Mat(double, std::span<const double>)> jacobian;
  // Optional: Euclidean divergence div b.
  std::function<double(double, std::span<const double>)> divergence;
  // Optional: closed-form Gaussian divergence div_gamma b = div b - <b, x>.
  std::function<double(double, std::span<const double>)> gaussian_div;

  double p = 2.0;  // integrability exponent of |b|, p > 1
  double q = 2.0;  // exponent of the symmetric gradient / divergence, q in (1, 2]
  double fd_step = 0.0;  // 0 -> cbrt(machine eps) * max(1, |x|)
  std::string kind;      // catalogue tag ("" for ad hoc fields)

  Vec eval(double t, std::span<const double> x) const;
};

double conjugate_exponent(double p);
// r = max{p', q'}; recomputed on demand, never stored.
double r_exponent(const FieldSpec& f);

double fd_default_step(std::span<const double> x);

// Analytic Jacobian when present, central finite differences otherwise.
Mat jacobian_matrix(const FieldSpec& f, double t, std::span<const double> x);
double euclidean_divergence(const FieldSpec& f, double t, std::span<const double> x);
// Resolution order: gaussian_div callback, divergence - <b,x>, trace(J) - <b,x>.
double gaussian_divergence(const FieldSpec& f, double t, std::span<const double> x);
// Exactly symmetric (J + J^T)/2.
Mat symmetric_gradient(const FieldSpec& f, double t, std::span<const double> x);

// int_0^T ( int ||(grad b_t)^sym||_HS^q dgamma )^{1/q} dt, trapezoid in time.
double ld_seminorm(const FieldSpec& f, double q, const QuadratureScheme& quad,
                   std::span<const double> time_nodes);

// Q_t = exp(t L) for a skew-symmetric generator L (scaling-and-squaring).
struct RotationGroup {
  int dim = 0;
  Mat generator;
  Mat at(double t) const;
};
RotationGroup make_rotation_group(Mat skew);

// Conditional expectation onto the first m coordinates: component i < m of
// the result at (t, x) is int b^i(t, x, y) dgamma_{dim-m}(y) via quad_tail.
FieldSpec cylindrical_projection(const FieldSpec& f, int m, const QuadratureScheme& quad_tail);

// b_eps^i = T_eps b^i componentwise; div_gamma(b_eps) = e^{-eps} T_eps(div_gamma b).
FieldSpec smooth_field(const FieldSpec& f, double eps, const QuadratureScheme& inner);
FieldSpec smooth_field(const FieldSpec& f, double eps);  // default inner rule

// c_t(x) = Q_{-t} b(t, Q_t x); div_gamma c_t(x) = div_gamma b_t(Q_t x).
FieldSpec rotate_field(const FieldSpec& f, const RotationGroup& g);

// ---- built-in catalogue ----
FieldSpec constant_field(Vec v, double horizon = 1.0);
FieldSpec linear_field(Mat a, double horizon = 1.0);
// (-x2, x1, 0, ..., 0): divergence-free and gamma-divergence-free.
FieldSpec rotation_field(int dim, double horizon = 1.0);
// b(x) = -x (1 + a sin x_1).
FieldSpec gradient_sin_field(int dim, double amplitude, double horizon = 1.0);
// Product field b^i(x) = -x_i (1 + a sin x_i): coordinates decouple.
FieldSpec product_sin_field(int dim, double amplitude, double horizon = 1.0);
// b(x) = scale * x / max(|x|, delta)^{1-alpha}, alpha in (0,1).
FieldSpec low_regularity_field(int dim, double alpha, double delta, double scale = 1.0,
                               double horizon = 1.0);
// Consistent family: b^i = -x_i + coupling 2^{-i} x_{i+1} (last component pure decay).
FieldSpec weakly_coupled_field(int dim, double coupling, double horizon = 1.0);

// JSON descriptor {"kind": ..., "params": {...}}; the catalogue is the only
// external field source.
FieldSpec make_field_from_json(const std::string& descriptor_text);
std::vector<std::string> catalogue_names();

}  // namespace flowlab
