#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowlab/field_model.hpp"
#include "flowlab/ou_semigroup.hpp"

namespace flowlab {

// A vector field frozen at one time, with the attributes the commutator
// machinery needs.
struct FieldSnapshot {
  int dim = 0;
  VectorFn value;
  std::function<Mat(std::span<const double>)> jacobian;
  std::function<double(std::span<const double>)> gaussian_div;
};
FieldSnapshot snapshot(const FieldSpec& f, double t);

// r^eps(v, c)(x) = e^eps <c(x), grad T_eps v (x)> - T_eps(div_gamma(v c))(x).
// No derivative of v or c is ever taken.
double commutator_eval(const ScalarFn& v, const FieldSnapshot& c, double eps,
                       const QuadratureScheme& inner, std::span<const double> x);

struct CommutatorReport {
  double p = 0.0, q = 0.0, r = 0.0;
  double c_lp_norm = 0.0;    // ||c||_{L^p}
  double div_lq_norm = 0.0;  // ||div_gamma c||_{L^q}
  double sym_lq_norm = 0.0;  // || ||(grad c)^sym||_HS ||_{L^q}
  double v_lr_norm = 0.0;    // ||v||_{L^r}
  std::vector<double> eps_grid;
  std::vector<double> l1_norm, l1_se;
  std::vector<double> moment_term, div_term, sym_term;
  std::vector<double> limit_residual, limit_se;  // ||r^eps + v div_gamma c||_1

  double bound(std::size_t i) const {
    return moment_term[i] + div_term[i] + sym_term[i];
  }
  bool bound_holds(std::size_t i, double sigmas = 3.0) const {
    return l1_norm[i] <= bound(i) + sigmas * l1_se[i];
  }
  std::string to_json() const;
  void write_csv(std::ostream& os) const;
};

// Certifies the estimate
//   ||r^eps||_1 <= ||v||_r [ Lambda(p) eps/sqrt(1-e^{-2 eps}) ||c||_p
//                            + 2^{1/q'} ||div_gamma c||_q
//                            + 2^{1/q'} sqrt(2) || ||(grad c)^sym||_HS ||_q ]
// on a decreasing eps grid. Outer L^1 norms over x use outer_points seeded
// gamma samples (stream "commutator.outer"); norms use norm_quad.
CommutatorReport commutator_report(const ScalarFn& v, const FieldSnapshot& c, double p,
                                   double q, std::span<const double> eps_grid,
                                   const QuadratureScheme& norm_quad,
                                   const QuadratureScheme& inner, std::size_t outer_points,
                                   std::uint64_t seed);

// The interpolated split -r^eps = beta_eps int alpha_eps (A_eps + B_eps) dgamma(y)
// with beta_eps = eps/sqrt(1-e^{-2 eps}). The inner [0,1] integral runs in the
// substituted variable s = sqrt(1-e^{-2 t eps}) (Gauss-Legendre, t_nodes
// points), which removes the endpoint singularity; in that variable
//   A_eps = (1/eps) int_0^S [ <J(g) d, d> - c(g).g ] ds,
//   B_eps = (1/eps) int_0^S (s/mu) c(g).d ds,
// where mu = sqrt(1-s^2), g = mu x + s y, d = s x - mu y, S = sqrt(1-e^{-2 eps}).
struct SplitComponents {
  double a_value = 0.0;
  double b_value = 0.0;
};
SplitComponents commutator_split_components(const FieldSnapshot& c, double eps,
                                            std::span<const double> x,
                                            std::span<const double> y, int t_nodes);

struct SplitDiagnostic {
  double a_term = 0.0;  // int alpha_eps A_eps dgamma(y)
  double b_term = 0.0;  // int alpha_eps B_eps dgamma(y)
  double beta_eps = 0.0;
};
SplitDiagnostic commutator_split_diagnostic(const ScalarFn& v, const FieldSnapshot& c,
                                            double eps, std::span<const double> x,
                                            const QuadratureScheme& quad_y, int t_nodes);

}  // namespace flowlab
