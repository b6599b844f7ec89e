#include "flowlab/field_model.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "flowlab/ou_semigroup.hpp"
#include "flowlab/util.hpp"

namespace flowlab {

Vec FieldSpec::eval(double t, std::span<const double> x) const {
  Vec out(dim);
  value(t, x, out);
  return out;
}

double conjugate_exponent(double p) {
  if (p <= 1.0) throw ConfigError("conjugate exponent requires p > 1");
  return p / (p - 1.0);
}

double r_exponent(const FieldSpec& f) {
  return std::max(conjugate_exponent(f.p), conjugate_exponent(f.q));
}

double fd_default_step(std::span<const double> x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, norm(x));
}

Mat jacobian_matrix(const FieldSpec& f, double t, std::span<const double> x) {
  if (f.jacobian) return f.jacobian(t, x);
  const double h = f.fd_step > 0.0 ? f.fd_step : fd_default_step(x);
  const int n = f.dim;
  Mat j(n, n);
  Vec xp(x.begin(), x.end()), plus(n), minus(n);
  for (int col = 0; col < n; ++col) {
    const double orig = xp[col];
    xp[col] = orig + h;
    f.value(t, xp, plus);
    xp[col] = orig - h;
    f.value(t, xp, minus);
    xp[col] = orig;
    for (int row = 0; row < n; ++row) j(row, col) = (plus[row] - minus[row]) / (2.0 * h);
  }
  return j;
}

double euclidean_divergence(const FieldSpec& f, double t, std::span<const double> x) {
  if (f.divergence) return f.divergence(t, x);
  return jacobian_matrix(f, t, x).trace();
}

double gaussian_divergence(const FieldSpec& f, double t, std::span<const double> x) {
  if (f.gaussian_div) return f.gaussian_div(t, x);
  return euclidean_divergence(f, t, x) - dot(f.eval(t, x), x);
}

Mat symmetric_gradient(const FieldSpec& f, double t, std::span<const double> x) {
  return jacobian_matrix(f, t, x).symmetric_part();
}

double ld_seminorm(const FieldSpec& f, double q, const QuadratureScheme& quad,
                   std::span<const double> time_nodes) {
  if (time_nodes.size() < 2) throw ConfigError("ld_seminorm needs >= 2 time nodes");
  std::vector<double> slices(time_nodes.size());
  for (std::size_t i = 0; i < time_nodes.size(); ++i) {
    const double t = time_nodes[i];
    const double mq = expectation(
        [&](std::span<const double> x) {
          return std::pow(hs_norm(symmetric_gradient(f, t, x)), q);
        },
        quad);
    slices[i] = std::pow(mq, 1.0 / q);
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < time_nodes.size(); ++i)
    total += 0.5 * (slices[i] + slices[i + 1]) * (time_nodes[i + 1] - time_nodes[i]);
  return total;
}

Mat RotationGroup::at(double t) const {
  Mat scaled = generator;
  scaled *= t;
  return expm(scaled);
}

RotationGroup make_rotation_group(Mat skew) {
  const int n = skew.rows();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(skew(i, j) + skew(j, i)) > 1e-12)
        throw ConfigError("rotation generator must be skew-symmetric");
  return RotationGroup{n, std::move(skew)};
}

FieldSpec cylindrical_projection(const FieldSpec& f, int m, const QuadratureScheme& quad_tail) {
  if (m < 1 || m >= f.dim) throw ConfigError("cylindrical_projection needs 1 <= m < dim");
  if (quad_tail.dim != f.dim - m) throw ConfigError("quad_tail dimension must be dim - m");
  FieldSpec g;
  g.dim = m;
  g.horizon = f.horizon;
  g.p = f.p;
  g.q = f.q;
  g.kind = f.kind.empty() ? "projected" : f.kind + ".projected";
  const int full_dim = f.dim;
  g.value = [f, m, quad_tail, full_dim](double t, std::span<const double> x,
                                        std::span<double> out) {
    const std::size_t count = quad_tail.size();
    Vec full(full_dim), tail(full_dim - m), b(full_dim);
    std::vector<double> acc(m, 0.0);
    for (int i = 0; i < m; ++i) full[i] = x[i];
    for (std::size_t k = 0; k < count; ++k) {
      const double w = quad_tail.load_node(k, tail);
      for (int i = m; i < full_dim; ++i) full[i] = tail[i - m];
      f.value(t, full, b);
      for (int i = 0; i < m; ++i) acc[i] += w * b[i];
    }
    for (int i = 0; i < m; ++i) out[i] = acc[i];
  };
  // div_gamma of the projected field is the conditional expectation of
  // div_gamma of the original one.
  g.gaussian_div = [f, m, quad_tail, full_dim](double t, std::span<const double> x) {
    const std::size_t count = quad_tail.size();
    Vec full(full_dim), tail(full_dim - m);
    for (int i = 0; i < m; ++i) full[i] = x[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double w = quad_tail.load_node(k, tail);
      for (int i = m; i < full_dim; ++i) full[i] = tail[i - m];
      acc += w * gaussian_divergence(f, t, full);
    }
    return acc;
  };
  return g;
}

FieldSpec smooth_field(const FieldSpec& f, double eps, const QuadratureScheme& inner) {
  if (eps <= 0.0) throw ConfigError("smooth_field requires eps > 0");
  if (inner.dim != f.dim) throw ConfigError("smooth_field inner quadrature dim mismatch");
  const double decay = std::exp(-eps);
  const double spread = std::sqrt(1.0 - decay * decay);
  const int dim = f.dim;

  FieldSpec g;
  g.dim = dim;
  g.horizon = f.horizon;
  g.p = f.p;
  g.q = f.q;
  g.kind = f.kind.empty() ? "smoothed" : f.kind + ".smoothed";
  g.value = [f, inner, decay, spread, dim](double t, std::span<const double> x,
                                           std::span<double> out) {
    const std::size_t count = inner.size();
    Vec y(dim), shifted(dim), b(dim);
    std::vector<double> acc(dim, 0.0);
    for (std::size_t k = 0; k < count; ++k) {
      const double w = inner.load_node(k, y);
      for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
      f.value(t, shifted, b);
      for (int d = 0; d < dim; ++d) acc[d] += w * b[d];
    }
    for (int d = 0; d < dim; ++d) out[d] = acc[d];
  };
  g.gaussian_div = [f, inner, decay, spread, dim](double t, std::span<const double> x) {
    const std::size_t count = inner.size();
    Vec y(dim), shifted(dim);
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double w = inner.load_node(k, y);
      for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
      acc += w * gaussian_divergence(f, t, shifted);
    }
    return decay * acc;
  };
  if (f.jacobian) {
    // grad T_eps u = e^{-eps} T_eps grad u, componentwise.
    g.jacobian = [f, inner, decay, spread, dim](double t, std::span<const double> x) {
      const std::size_t count = inner.size();
      Vec y(dim), shifted(dim);
      Mat acc(dim, dim);
      for (std::size_t k = 0; k < count; ++k) {
        const double w = inner.load_node(k, y);
        for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
        Mat j = f.jacobian(t, shifted);
        j *= w;
        acc += j;
      }
      acc *= decay;
      return acc;
    };
  }
  if (f.divergence) {
    g.divergence = [f, inner, decay, spread, dim](double t, std::span<const double> x) {
      const std::size_t count = inner.size();
      Vec y(dim), shifted(dim);
      double acc = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        const double w = inner.load_node(k, y);
        for (int d = 0; d < dim; ++d) shifted[d] = decay * x[d] + spread * y[d];
        acc += w * f.divergence(t, shifted);
      }
      return decay * acc;
    };
  }
  return g;
}

FieldSpec smooth_field(const FieldSpec& f, double eps) {
  return smooth_field(f, eps, make_inner_quadrature(f.dim, 0));
}

FieldSpec rotate_field(const FieldSpec& f, const RotationGroup& g) {
  if (g.dim != f.dim) throw ConfigError("rotate_field dimension mismatch");
  FieldSpec c;
  c.dim = f.dim;
  c.horizon = f.horizon;
  c.p = f.p;
  c.q = f.q;
  c.kind = f.kind.empty() ? "rotated" : f.kind + ".rotated";
  c.value = [f, g](double t, std::span<const double> x, std::span<double> out) {
    const Mat q_t = g.at(t);
    const Vec rotated = q_t.apply(x);
    Vec b(f.dim);
    f.value(t, rotated, b);
    const Vec back = g.at(-t).apply(b);
    for (int d = 0; d < f.dim; ++d) out[d] = back[d];
  };
  c.gaussian_div = [f, g](double t, std::span<const double> x) {
    return gaussian_divergence(f, t, g.at(t).apply(x));
  };
  if (f.jacobian) {
    c.jacobian = [f, g](double t, std::span<const double> x) {
      const Mat q_t = g.at(t);
      return g.at(-t) * f.jacobian(t, q_t.apply(x)) * q_t;
    };
  }
  if (f.divergence) {
    c.divergence = [f, g](double t, std::span<const double> x) {
      return f.divergence(t, g.at(t).apply(x));
    };
  }
  return c;
}

FieldSpec constant_field(Vec v, double horizon) {
  FieldSpec f;
  f.dim = static_cast<int>(v.size());
  f.horizon = horizon;
  f.kind = "constant";
  f.value = [v](double, std::span<const double>, std::span<double> out) {
    for (std::size_t d = 0; d < v.size(); ++d) out[d] = v[d];
  };
  f.jacobian = [n = f.dim](double, std::span<const double>) { return Mat(n, n); };
  f.divergence = [](double, std::span<const double>) { return 0.0; };
  f.gaussian_div = [v](double, std::span<const double> x) { return -dot(v, x); };
  return f;
}

FieldSpec linear_field(Mat a, double horizon) {
  FieldSpec f;
  f.dim = a.rows();
  f.horizon = horizon;
  f.kind = "linear";
  f.value = [a](double, std::span<const double> x, std::span<double> out) {
    const Vec y = a.apply(x);
    for (std::size_t d = 0; d < y.size(); ++d) out[d] = y[d];
  };
  f.jacobian = [a](double, std::span<const double>) { return a; };
  f.divergence = [tr = a.trace()](double, std::span<const double>) { return tr; };
  f.gaussian_div = [a, tr = a.trace()](double, std::span<const double> x) {
    return tr - dot(a.apply(x), x);
  };
  return f;
}

FieldSpec rotation_field(int dim, double horizon) {
  if (dim < 2) throw ConfigError("rotation field needs dim >= 2");
  Mat a(dim, dim);
  a(0, 1) = -1.0;
  a(1, 0) = 1.0;
  FieldSpec f = linear_field(a, horizon);
  f.kind = "rotation";
  return f;
}

FieldSpec gradient_sin_field(int dim, double amplitude, double horizon) {
  FieldSpec f;
  f.dim = dim;
  f.horizon = horizon;
  f.kind = "gradient_sin";
  const double a = amplitude;
  f.value = [a, dim](double, std::span<const double> x, std::span<double> out) {
    const double factor = 1.0 + a * std::sin(x[0]);
    for (int d = 0; d < dim; ++d) out[d] = -x[d] * factor;
  };
  f.jacobian = [a, dim](double, std::span<const double> x) {
    const double factor = 1.0 + a * std::sin(x[0]);
    Mat j(dim, dim);
    for (int d = 0; d < dim; ++d) j(d, d) = -factor;
    const double dfactor = a * std::cos(x[0]);
    for (int d = 0; d < dim; ++d) j(d, 0) -= x[d] * dfactor;
    return j;
  };
  f.divergence = [a, dim](double, std::span<const double> x) {
    return -dim * (1.0 + a * std::sin(x[0])) - x[0] * a * std::cos(x[0]);
  };
  f.gaussian_div = [a, dim](double, std::span<const double> x) {
    const double factor = 1.0 + a * std::sin(x[0]);
    return -dim * factor - x[0] * a * std::cos(x[0]) + dot(x, x) * factor;
  };
  return f;
}

FieldSpec product_sin_field(int dim, double amplitude, double horizon) {
  FieldSpec f;
  f.dim = dim;
  f.horizon = horizon;
  f.kind = "product_sin";
  const double a = amplitude;
  f.value = [a, dim](double, std::span<const double> x, std::span<double> out) {
    for (int d = 0; d < dim; ++d) out[d] = -x[d] * (1.0 + a * std::sin(x[d]));
  };
  f.jacobian = [a, dim](double, std::span<const double> x) {
    Mat j(dim, dim);
    for (int d = 0; d < dim; ++d)
      j(d, d) = -(1.0 + a * std::sin(x[d])) - x[d] * a * std::cos(x[d]);
    return j;
  };
  f.divergence = [a, dim](double, std::span<const double> x) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d)
      s += -(1.0 + a * std::sin(x[d])) - x[d] * a * std::cos(x[d]);
    return s;
  };
  f.gaussian_div = [a, dim](double, std::span<const double> x) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double factor = 1.0 + a * std::sin(x[d]);
      s += -factor - x[d] * a * std::cos(x[d]) + x[d] * x[d] * factor;
    }
    return s;
  };
  return f;
}

FieldSpec low_regularity_field(int dim, double alpha, double delta, double scale,
                               double horizon) {
  if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("low_regularity alpha must be in (0,1)");
  if (delta <= 0.0) throw ConfigError("low_regularity delta must be positive");
  FieldSpec f;
  f.dim = dim;
  f.horizon = horizon;
  f.kind = "low_regularity";
  const double s = scale;
  f.value = [s, alpha, delta, dim](double, std::span<const double> x, std::span<double> out) {
    const double r = norm(x);
    const double factor = s * std::pow(std::max(r, delta), alpha - 1.0);
    for (int d = 0; d < dim; ++d) out[d] = factor * x[d];
  };
  f.jacobian = [s, alpha, delta, dim](double, std::span<const double> x) {
    const double r = norm(x);
    Mat j(dim, dim);
    if (r <= delta) {
      const double factor = s * std::pow(delta, alpha - 1.0);
      for (int d = 0; d < dim; ++d) j(d, d) = factor;
      return j;
    }
    const double ra = std::pow(r, alpha - 1.0);
    for (int d = 0; d < dim; ++d) j(d, d) = s * ra;
    const double cross = s * (alpha - 1.0) * std::pow(r, alpha - 3.0);
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k) j(i, k) += cross * x[i] * x[k];
    return j;
  };
  f.divergence = [s, alpha, delta, dim](double, std::span<const double> x) {
    const double r = norm(x);
    if (r <= delta) return s * dim * std::pow(delta, alpha - 1.0);
    return s * (dim + alpha - 1.0) * std::pow(r, alpha - 1.0);
  };
  const auto div_fn = f.divergence;
  f.gaussian_div = [s, alpha, delta, div_fn](double t, std::span<const double> x) {
    const double r = norm(x);
    const double bx = s * std::pow(std::max(r, delta), alpha - 1.0) * r * r;
    return div_fn(t, x) - bx;
  };
  return f;
}

FieldSpec weakly_coupled_field(int dim, double coupling, double horizon) {
  FieldSpec f;
  f.dim = dim;
  f.horizon = horizon;
  f.kind = "weakly_coupled";
  Vec kappa(dim, 0.0);
  for (int i = 0; i + 1 < dim; ++i) kappa[i] = coupling * std::ldexp(1.0, -i);
  f.value = [kappa, dim](double, std::span<const double> x, std::span<double> out) {
    for (int d = 0; d < dim; ++d)
      out[d] = -x[d] + (d + 1 < dim ? kappa[d] * x[d + 1] : 0.0);
  };
  f.jacobian = [kappa, dim](double, std::span<const double>) {
    Mat j(dim, dim);
    for (int d = 0; d < dim; ++d) {
      j(d, d) = -1.0;
      if (d + 1 < dim) j(d, d + 1) = kappa[d];
    }
    return j;
  };
  f.divergence = [dim](double, std::span<const double>) { return static_cast<double>(-dim); };
  f.gaussian_div = [kappa, dim](double, std::span<const double> x) {
    double bx = 0.0;
    for (int d = 0; d < dim; ++d)
      bx += x[d] * (-x[d] + (d + 1 < dim ? kappa[d] * x[d + 1] : 0.0));
    return -dim - bx;
  };
  return f;
}

namespace {

Mat matrix_from_json(const nlohmann::json& rows) {
  const int n = static_cast<int>(rows.size());
  Mat a(n, static_cast<int>(rows.at(0).size()));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < a.cols(); ++j) a(i, j) = rows.at(i).at(j).get<double>();
  return a;
}

}  // namespace

FieldSpec make_field_from_json(const std::string& descriptor_text) {
  nlohmann::json desc;
  try {
    desc = nlohmann::json::parse(descriptor_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field descriptor is not valid JSON: ") + e.what());
  }
  if (!desc.contains("kind")) throw ConfigError("field descriptor missing \"kind\"");
  const std::string kind = desc.at("kind").get<std::string>();
  const nlohmann::json params = desc.value("params", nlohmann::json::object());
  const double horizon = params.value("horizon", 1.0);
  try {
    if (kind == "constant") {
      Vec v = params.at("vector").get<Vec>();
      return constant_field(std::move(v), horizon);
    }
    if (kind == "linear") return linear_field(matrix_from_json(params.at("matrix")), horizon);
    if (kind == "rotation") return rotation_field(params.value("dim", 2), horizon);
    if (kind == "gradient_sin")
      return gradient_sin_field(params.value("dim", 1), params.value("amplitude", 0.3), horizon);
    if (kind == "product_sin")
      return product_sin_field(params.value("dim", 1), params.value("amplitude", 0.3), horizon);
    if (kind == "low_regularity")
      return low_regularity_field(params.value("dim", 2), params.value("alpha", 0.5),
                                  params.value("delta", 0.2), params.value("scale", 1.0),
                                  horizon);
    if (kind == "weakly_coupled")
      return weakly_coupled_field(params.value("dim", 3), params.value("coupling", 0.5), horizon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad parameters for field kind \"" + kind + "\": " + e.what());
  }
  throw ConfigError("unknown field kind \"" + kind + "\"");
}

std::vector<std::string> catalogue_names() {
  return {"constant",    "linear",         "rotation",      "gradient_sin",
          "product_sin", "low_regularity", "weakly_coupled"};
}

}  // namespace flowlab
