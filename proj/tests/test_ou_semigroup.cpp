#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "flowlab/ou_semigroup.hpp"

using namespace flowlab;

namespace {

OuOperator op1d(double t, int nodes = 20) {
  return OuOperator{t, make_quadrature(QuadKind::GaussHermite, 1, nodes)};
}

const ScalarFn sq = [](std::span<const double> x) { return x[0] * x[0]; };
const ScalarFn lin = [](std::span<const double> x) { return x[0]; };

}  // namespace

TEST_CASE("mehler_apply closed forms") {
  const auto op = op1d(0.7);
  for (const double x : {-2.0, 0.0, 1.3}) {
    const Vec p{x};
    CHECK(mehler_apply([](std::span<const double>) { return 5.0; }, op, p) ==
          doctest::Approx(5.0).epsilon(1e-13));
    CHECK(mehler_apply(lin, op, p) == doctest::Approx(std::exp(-0.7) * x).epsilon(1e-12));
  }
  // T_t x^2 = e^{-2t} x^2 + 1 - e^{-2t}; at t = ln 2, x = 1 this is 1.
  const auto op_ln2 = op1d(std::log(2.0));
  CHECK(mehler_apply(sq, op_ln2, Vec{1.0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("t = 0 acts as the identity on continuous integrands") {
  const auto op = op1d(0.0);
  for (const double x : {-1.4, 0.2, 2.6}) {
    const auto u = [](std::span<const double> p) { return std::sin(p[0]) + p[0] * p[0]; };
    CHECK(mehler_apply(u, op, Vec{x}) == doctest::Approx(u(Vec{x})).epsilon(1e-14));
  }
}

TEST_CASE("mehler_gradient closed forms and the small-t refusal") {
  const double t = std::log(2.0);
  const auto op = op1d(t);
  const Vec zero_grad =
      mehler_gradient([](std::span<const double>) { return 3.0; }, op, Vec{0.4});
  CHECK(zero_grad[0] == doctest::Approx(0.0).epsilon(1e-13));

  for (const double x : {-1.0, 0.0, 2.0}) {
    const Vec g = mehler_gradient(lin, op, Vec{x});
    CHECK(g[0] == doctest::Approx(std::exp(-t)).epsilon(1e-12));
  }
  // d/dx [e^{-2t} x^2 + 1 - e^{-2t}] = 2 e^{-2t} x = 1/2 at x = 1, t = ln 2.
  const Vec g = mehler_gradient(sq, op, Vec{1.0});
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(mehler_gradient(sq, op1d(0.0), Vec{1.0}), std::domain_error);
  CHECK_THROWS_AS(mehler_gradient(sq, op1d(1e-9), Vec{1.0}), std::domain_error);
}

TEST_CASE("mehler_gradient in two dimensions against the Hermite expansion") {
  const double t = 0.45;
  const OuOperator op{t, make_quadrature(QuadKind::GaussHermite, 2, 12)};
  const ScalarFn u = [](std::span<const double> x) { return x[0] * x[0] * x[1]; };
  for (const double x1 : {-0.8, 0.9}) {
    for (const double x2 : {-1.5, 0.3}) {
      const Vec p{x1, x2};
      const Vec g = mehler_gradient(u, op, p);
      // T_t(x1^2 x2) = e^{-3t}(x1^2 - 1) x2 + e^{-t} x2.
      const double d1 = std::exp(-3.0 * t) * 2.0 * x1 * x2;
      const double d2 = std::exp(-3.0 * t) * (x1 * x1 - 1.0) + std::exp(-t);
      CHECK(g[0] == doctest::Approx(d1).epsilon(1e-11));
      CHECK(g[1] == doctest::Approx(d2).epsilon(1e-11));
    }
  }
}

TEST_CASE("smoothed divergence closed forms") {
  const double eps = 0.3;
  const auto inner = make_quadrature(QuadKind::GaussHermite, 1, 20);
  const VectorFn identity_field = [](std::span<const double> z) { return Vec{z[0]}; };
  const VectorFn ones = [](std::span<const double>) { return Vec{1.0}; };

  for (const double x : {-1.1, 0.0, 0.7, 2.2}) {
    // v = 1, c = id: T_eps(div_gamma c) with div_gamma c = 1 - z^2.
    const double got = smoothed_divergence([](std::span<const double>) { return 1.0; },
                                           identity_field, eps, inner, Vec{x});
    const double expected = std::exp(-2.0 * eps) * (1.0 - x * x);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));

    // v = 0 kills everything.
    CHECK(smoothed_divergence([](std::span<const double>) { return 0.0; }, identity_field,
                              eps, inner, Vec{x}) == doctest::Approx(0.0).epsilon(1e-14));

    // v = z, c = 1: div_gamma(v c) = 1 - z^2 again.
    const double got2 = smoothed_divergence([](std::span<const double> z) { return z[0]; },
                                            ones, eps, inner, Vec{x});
    CHECK(got2 == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("self-adjointness") {
  const double t = 0.6;
  const auto outer = make_quadrature(QuadKind::GaussHermite, 1, 30);
  const auto inner = make_quadrature(QuadKind::GaussHermite, 1, 20);

  const auto same = self_adjoint_check(sq, sq, t, outer, inner);
  CHECK(same.first == doctest::Approx(same.second).epsilon(1e-14));
  CHECK(same.first == doctest::Approx(1.0 + 2.0 * std::exp(-2.0 * t)).epsilon(1e-12));

  const ScalarFn cub = [](std::span<const double> x) { return x[0] * x[0] * x[0]; };
  const auto mixed = self_adjoint_check(lin, cub, t, outer, inner);
  CHECK(mixed.first == doctest::Approx(mixed.second).epsilon(1e-12));
  CHECK(mixed.first == doctest::Approx(3.0 * std::exp(-t)).epsilon(1e-12));
}

TEST_CASE("contraction in L^p and mass equality for nonnegative u") {
  const auto norm_quad = make_quadrature(QuadKind::GaussHermite, 1, 40);
  const auto inner = make_quadrature(QuadKind::GaussHermite, 1, 30);
  const std::vector<ScalarFn> suite = {
      sq, lin, [](std::span<const double> x) { return x[0] * x[0] * x[0] - x[0]; },
      [](std::span<const double> x) { return std::abs(x[0]); },
      [](std::span<const double> x) { return std::exp(0.4 * x[0]); }};
  for (const double t : {0.1, 0.8}) {
    const OuOperator op{t, inner};
    for (const auto& u : suite) {
      const ScalarFn tu = [&](std::span<const double> x) { return mehler_apply(u, op, x); };
      for (const double p : {1.0, 2.0, 4.0})
        CHECK(lp_norm(tu, p, norm_quad) <= lp_norm(u, p, norm_quad) + 1e-9);
    }
    // Nonnegative u, p = 1: T_t preserves the integral.
    const ScalarFn nonneg = [](std::span<const double> x) { return x[0] * x[0] + 0.5; };
    const ScalarFn tu = [&](std::span<const double> x) { return mehler_apply(nonneg, op, x); };
    CHECK(lp_norm(tu, 1.0, norm_quad) ==
          doctest::Approx(lp_norm(nonneg, 1.0, norm_quad)).epsilon(1e-12));
  }
}

TEST_CASE("semigroup law on polynomials of degree <= 4") {
  const auto inner = make_quadrature(QuadKind::GaussHermite, 1, 24);
  const double s = 0.25, t = 0.6;
  const OuOperator op_s{s, inner}, op_t{t, inner}, op_st{s + t, inner};
  const std::vector<ScalarFn> polys = {
      lin, sq, [](std::span<const double> x) { return std::pow(x[0], 3) - 2.0 * x[0]; },
      [](std::span<const double> x) { return std::pow(x[0], 4) + x[0] * x[0]; }};
  for (const auto& u : polys)
    for (const double x : {-1.7, 0.0, 0.9, 2.4}) {
      const double composed = mehler_apply(
          [&](std::span<const double> y) { return mehler_apply(u, op_s, y); }, op_t, Vec{x});
      const double direct = mehler_apply(u, op_st, Vec{x});
      CHECK(composed == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("gradient commutation: grad T_t u = e^{-t} T_t grad u") {
  const auto inner = make_quadrature(QuadKind::GaussHermite, 2, 14);
  const double t = 0.5;
  const OuOperator op{t, inner};
  const ScalarFn u = [](std::span<const double> x) {
    return x[0] * x[0] * x[1] + 0.3 * x[1];
  };
  const std::vector<ScalarFn> partials = {
      [](std::span<const double> x) { return 2.0 * x[0] * x[1]; },
      [](std::span<const double> x) { return x[0] * x[0] + 0.3; }};
  for (const double x1 : {-0.6, 1.1}) {
    const Vec p{x1, 0.4};
    const Vec g = mehler_gradient(u, op, p);
    for (int d = 0; d < 2; ++d) {
      const double expected = std::exp(-t) * mehler_apply(partials[d], op, p);
      CHECK(g[d] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("gradient norms of T_t on a rough input stay bounded") {
  // No explicit constant is claimed, only finiteness of ||grad T_t u||_p
  // for merely-Lipschitz u.
  const auto inner = make_quadrature(QuadKind::GaussHermite, 1, 40);
  const auto outer = make_quadrature(QuadKind::GaussHermite, 1, 40);
  const ScalarFn rough = [](std::span<const double> x) { return std::abs(x[0]); };
  for (const double t : {0.05, 0.3, 1.0}) {
    const OuOperator op{t, inner};
    for (const double p : {1.5, 2.0, 4.0}) {
      const double grad_norm = lp_norm(
          [&](std::span<const double> x) { return mehler_gradient(rough, op, x)[0]; }, p,
          outer);
      CHECK(std::isfinite(grad_norm));
      CHECK(grad_norm <= 1.0 + 1e-9);  // |grad T_t |x|| <= e^{-t} Lip(|x|)
    }
  }
}

TEST_CASE("hermite eigenrelation T_t H_k = e^{-kt} H_k") {
  const std::vector<ScalarFn> hermite = {
      lin, [](std::span<const double> x) { return x[0] * x[0] - 1.0; },
      [](std::span<const double> x) { return x[0] * (x[0] * x[0] - 3.0); },
      [](std::span<const double> x) {
        const double s = x[0] * x[0];
        return s * s - 6.0 * s + 3.0;
      }};
  const auto op = op1d(0.35, 20);
  for (std::size_t k = 0; k < hermite.size(); ++k)
    for (const double x : {-2.1, -0.3, 0.0, 1.4, 2.8}) {
      const double expected =
          std::exp(-(static_cast<double>(k) + 1.0) * 0.35) * hermite[k](Vec{x});
      const double got = mehler_apply(hermite[k], op, Vec{x});
      const double scale = std::max(1.0, std::abs(expected));
      CHECK(std::abs(got - expected) / scale <= 1e-8);
    }
}
