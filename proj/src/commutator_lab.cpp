#include "flowlab/commutator_lab.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "flowlab/rng.hpp"
#include "flowlab/util.hpp"

namespace flowlab {

FieldSnapshot snapshot(const FieldSpec& f, double t) {
  FieldSnapshot s;
  s.dim = f.dim;
  s.value = [f, t](std::span<const double> x) { return f.eval(t, x); };
  s.jacobian = [f, t](std::span<const double> x) { return jacobian_matrix(f, t, x); };
  s.gaussian_div = [f, t](std::span<const double> x) { return gaussian_divergence(f, t, x); };
  return s;
}

double commutator_eval(const ScalarFn& v, const FieldSnapshot& c, double eps,
                       const QuadratureScheme& inner, std::span<const double> x) {
  const OuOperator op{eps, inner};
  const Vec grad = mehler_gradient(v, op, x);
  const Vec cx = c.value(x);
  const double transport = std::exp(eps) * dot(cx, grad);
  const double smoothed =
      smoothed_divergence(v, [&c](std::span<const double> z) { return c.value(z); }, eps,
                          inner, x);
  return transport - smoothed;
}

CommutatorReport commutator_report(const ScalarFn& v, const FieldSnapshot& c, double p,
                                   double q, std::span<const double> eps_grid,
                                   const QuadratureScheme& norm_quad,
                                   const QuadratureScheme& inner, std::size_t outer_points,
                                   std::uint64_t seed) {
  if (p <= 1.0) throw ConfigError("commutator_report requires p > 1");
  if (q <= 1.0 || q > 2.0) throw ConfigError("commutator_report requires q in (1, 2]");
  CommutatorReport rep;
  rep.p = p;
  rep.q = q;
  rep.r = std::max(conjugate_exponent(p), conjugate_exponent(q));

  rep.c_lp_norm = lp_norm(
      [&](std::span<const double> x) { return norm(c.value(x)); }, p, norm_quad);
  rep.div_lq_norm = lp_norm(
      [&](std::span<const double> x) { return c.gaussian_div(x); }, q, norm_quad);
  rep.sym_lq_norm = lp_norm(
      [&](std::span<const double> x) { return hs_norm(c.jacobian(x).symmetric_part()); }, q,
      norm_quad);
  rep.v_lr_norm = lp_norm(v, rep.r, norm_quad);

  const double lambda_p = lambda_moment(p);
  const double qprime = conjugate_exponent(q);
  const double factor = std::pow(2.0, 1.0 / qprime);

  const auto points =
      sample_gaussian(outer_points, c.dim, split_seed(seed, "commutator.outer"));
  const std::size_t count = outer_points;
  const int dim = c.dim;

  rep.eps_grid.assign(eps_grid.begin(), eps_grid.end());
  for (const double eps : eps_grid) {
    std::vector<double> abs_r(count), abs_limit(count);
    parallel_for(count, [&](std::size_t k) {
      const std::span<const double> x(points.data() + k * dim, dim);
      const double value = commutator_eval(v, c, eps, inner, x);
      abs_r[k] = std::abs(value);
      abs_limit[k] = std::abs(value + v(x) * c.gaussian_div(x));
    });
    auto mean_se = [count](std::span<const double> terms, double& mean, double& se) {
      mean = pairwise_sum(terms) / static_cast<double>(count);
      double var = 0.0;
      std::vector<double> sq(count);
      for (std::size_t k = 0; k < count; ++k) {
        const double d = terms[k] - mean;
        sq[k] = d * d;
      }
      var = pairwise_sum(sq) / static_cast<double>(count - 1);
      se = std::sqrt(var / static_cast<double>(count));
    };
    double m = 0, s = 0;
    mean_se(abs_r, m, s);
    rep.l1_norm.push_back(m);
    rep.l1_se.push_back(s);
    mean_se(abs_limit, m, s);
    rep.limit_residual.push_back(m);
    rep.limit_se.push_back(s);

    const double beta_eps = eps / std::sqrt(1.0 - std::exp(-2.0 * eps));
    rep.moment_term.push_back(lambda_p * beta_eps * rep.c_lp_norm * rep.v_lr_norm);
    rep.div_term.push_back(factor * rep.div_lq_norm * rep.v_lr_norm);
    rep.sym_term.push_back(factor * std::sqrt(2.0) * rep.sym_lq_norm * rep.v_lr_norm);
  }
  return rep;
}

std::string CommutatorReport::to_json() const {
  nlohmann::ordered_json j;
  j["p"] = p;
  j["q"] = q;
  j["r"] = r;
  j["norms"] = {{"c_lp", c_lp_norm},
                {"div_gamma_lq", div_lq_norm},
                {"sym_grad_lq", sym_lq_norm},
                {"v_lr", v_lr_norm}};
  j["eps"] = eps_grid;
  j["l1_norm"] = l1_norm;
  j["l1_std_error"] = l1_se;
  j["moment_term"] = moment_term;
  j["div_term"] = div_term;
  j["sym_term"] = sym_term;
  j["limit_residual"] = limit_residual;
  j["limit_std_error"] = limit_se;
  std::vector<bool> ok;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) ok.push_back(bound_holds(i));
  j["bound_holds"] = ok;
  return j.dump(2);
}

void CommutatorReport::write_csv(std::ostream& os) const {
  os << "eps,l1_norm,l1_std_error,moment_term,div_term,sym_term,bound,"
        "limit_residual,limit_std_error,bound_holds\n";
  char buf[40];
  auto put = [&](double v, bool lead_comma = true) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (lead_comma) os << ',';
    os << buf;
  };
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    put(eps_grid[i], false);
    put(l1_norm[i]);
    put(l1_se[i]);
    put(moment_term[i]);
    put(div_term[i]);
    put(sym_term[i]);
    put(bound(i));
    put(limit_residual[i]);
    put(limit_se[i]);
    os << ',' << (bound_holds(i) ? 1 : 0) << '\n';
  }
}

SplitComponents commutator_split_components(const FieldSnapshot& c, double eps,
                                            std::span<const double> x,
                                            std::span<const double> y, int t_nodes) {
  const int dim = c.dim;
  const double s_max = std::sqrt(1.0 - std::exp(-2.0 * eps));
  std::vector<double> gl_nodes, gl_weights;
  gauss_legendre_rule(t_nodes, gl_nodes, gl_weights);

  SplitComponents out;
  Vec g(dim), d(dim);
  for (int i = 0; i < t_nodes; ++i) {
    const double s = 0.5 * s_max * (gl_nodes[i] + 1.0);
    const double w = 0.5 * s_max * gl_weights[i];
    const double mu = std::sqrt(1.0 - s * s);
    for (int k = 0; k < dim; ++k) {
      g[k] = mu * x[k] + s * y[k];
      d[k] = s * x[k] - mu * y[k];
    }
    const Mat jac = c.jacobian(g);
    const Vec cg = c.value(g);
    double quad_form = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) quad_form += jac(a, b) * d[a] * d[b];
    out.a_value += w * (quad_form - dot(cg, g)) / eps;
    out.b_value += w * (s / mu) * dot(cg, d) / eps;
  }
  return out;
}

SplitDiagnostic commutator_split_diagnostic(const ScalarFn& v, const FieldSnapshot& c,
                                            double eps, std::span<const double> x,
                                            const QuadratureScheme& quad_y, int t_nodes) {
  const int dim = c.dim;
  const double decay = std::exp(-eps);
  const double spread = std::sqrt(1.0 - decay * decay);
  const std::size_t count = quad_y.size();
  std::vector<double> a_terms(count), b_terms(count);
  parallel_for(count, [&](std::size_t k) {
    Vec y(dim), shifted(dim);
    const double w = quad_y.load_node(k, y);
    for (int dd = 0; dd < dim; ++dd) shifted[dd] = decay * x[dd] + spread * y[dd];
    const double alpha = v(shifted);
    const auto parts = commutator_split_components(c, eps, x, y, t_nodes);
    a_terms[k] = w * alpha * parts.a_value;
    b_terms[k] = w * alpha * parts.b_value;
  });
  SplitDiagnostic out;
  out.a_term = pairwise_sum(a_terms);
  out.b_term = pairwise_sum(b_terms);
  out.beta_eps = eps / spread;
  return out;
}

}  // namespace flowlab
