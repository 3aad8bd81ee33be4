#include "support.hpp"

#include "sspop/coeffs.hpp"
#include "sspop/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sspop;
using sspop::testing::constant;

TEST_CASE("evaluation of the closed forms") {
  CHECK(CoefficientFn::constant(2.0, 1.0)(0.3) == 2.0);
  CHECK(CoefficientFn::linear(1.0, 1.0, 1.0)(0.5) == doctest::Approx(1.5));
  const auto bump = CoefficientFn::gaussian_bump(0.5, 0.1, 3.0, 1.0);
  CHECK(bump(0.5) == doctest::Approx(3.0));
  CHECK(bump(0.6) == doctest::Approx(3.0 * std::exp(-0.5)));
}

TEST_CASE("linear table interpolates between knots") {
  const auto t = CoefficientFn::table({0.0, 1.0}, {0.0, 2.0});
  CHECK(t(0.25) == doctest::Approx(0.5));
  CHECK(t(0.0) == 0.0);
  CHECK(t(1.0) == 2.0);
  CHECK(t.domain_max() == 1.0);
}

TEST_CASE("step table holds one value per segment") {
  const auto t = CoefficientFn::table({0.0, 0.5, 1.0}, {1.0, 3.0}, Interpolation::step);
  CHECK(t(0.0) == 1.0);
  CHECK(t(0.49) == 1.0);
  CHECK(t(0.5) == 3.0);
  CHECK(t(1.0) == 3.0);
  CHECK(t.derivative(0.3) == 0.0);
  CHECK(t.sup_value() == 3.0);
  CHECK(t.inf_value() == 1.0);
}

TEST_CASE("evaluation outside the domain is a domain error") {
  const auto f = CoefficientFn::constant(1.0, 1.0);
  CHECK_THROWS_AS(f(-0.1), DomainError);
  CHECK_THROWS_AS(f(1.1), DomainError);
  CHECK_THROWS_AS(f.derivative(2.0), DomainError);
  CHECK_NOTHROW(f(1.0 + 1e-14));
}

TEST_CASE("malformed tables are rejected") {
  CHECK_THROWS_AS(CoefficientFn::table({0.0}, {1.0}), InputError);
  CHECK_THROWS_AS(CoefficientFn::table({0.1, 1.0}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(CoefficientFn::table({0.0, 0.6, 0.5}, {1.0, 1.0, 1.0}), InputError);
  CHECK_THROWS_AS(CoefficientFn::table({0.0, 1.0}, {1.0, 1.0, 1.0}), InputError);
  CHECK_THROWS_AS(CoefficientFn::table({0.0, 1.0}, {1.0, NAN}), InputError);
  CHECK_THROWS_AS(CoefficientFn::table({0.0, 0.5, 1.0}, {1.0, 1.0, 1.0}, Interpolation::step),
                  InputError);
}

TEST_CASE("derivatives") {
  CHECK(CoefficientFn::constant(2.0, 1.0).derivative(0.4) == 0.0);
  CHECK(CoefficientFn::linear(1.0, 3.0, 1.0).derivative(0.7) == 3.0);
  const auto t = CoefficientFn::table({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0});
  CHECK(t.derivative(0.25) == doctest::Approx(2.0));
  CHECK(t.derivative(0.75) == 0.0);
  // left slope at the interior knot, one-sided at the ends
  CHECK(t.derivative(0.5) == doctest::Approx(2.0));
  CHECK(t.derivative(0.0) == doctest::Approx(2.0));
  CHECK(t.derivative(1.0) == 0.0);
}

TEST_CASE("analytic derivatives match centered differences") {
  const std::vector<CoefficientFn> fns = {
      CoefficientFn::linear(0.3, -0.2, 2.0),
      CoefficientFn::gaussian_bump(0.8, 0.3, 1.5, 2.0),
      CoefficientFn::gaussian_bump(-0.5, 1.0, 0.7, 2.0),
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.99);
  const double h = 1e-6;
  for (const auto& f : fns) {
    for (int k = 0; k < 100; ++k) {
      const double s = u(rng);
      const double fd = (f(s + h) - f(s - h)) / (2.0 * h);
      CHECK(std::abs(f.derivative(s) - fd) < 1e-6);
    }
  }
}

TEST_CASE("sup and inf") {
  const auto c = CoefficientFn::constant(0.4, 1.0);
  CHECK(c.sup_value() == 0.4);
  CHECK(c.inf_value() == 0.4);
  const auto l = CoefficientFn::linear(0.1, 0.2, 1.0);
  CHECK(l.sup_value() == doctest::Approx(0.3));
  CHECK(l.inf_value() == doctest::Approx(0.1));
  const auto t = CoefficientFn::table({0.0, 1.0}, {1.0, 0.0});
  CHECK(t.sup_value() == 1.0);
  CHECK(t.inf_value() == 0.0);
  CHECK(CoefficientFn::linear(-1.0, 0.5, 1.0).sup_norm() == doctest::Approx(1.0));
}

TEST_CASE("gaussian extrema agree with dense sampling") {
  for (double center : {-0.3, 0.0, 0.4, 1.0, 1.7}) {
    const auto g = CoefficientFn::gaussian_bump(center, 0.2, 2.0, 1.0);
    double lo = INFINITY;
    double hi = -INFINITY;
    for (int k = 0; k <= 20000; ++k) {
      lo = std::min(lo, g(k / 20000.0));
      hi = std::max(hi, g(k / 20000.0));
    }
    CHECK(g.sup_value() == doctest::Approx(hi).epsilon(1e-7));
    CHECK(g.inf_value() == doctest::Approx(lo).epsilon(1e-7));
    CHECK(g.sup_value() >= hi);
    CHECK(g.inf_value() <= lo);
  }
}

TEST_CASE("role validation") {
  CHECK_THROWS_AS(CoefficientFn::constant(0.0, 1.0).validate(Role::growth, "gamma1"), ConfigError);
  CHECK_NOTHROW(CoefficientFn::constant(0.0, 1.0).validate(Role::rate, "mu"));
  CHECK_THROWS_AS(CoefficientFn::linear(0.5, -1.0, 1.0).validate(Role::rate, "mu"), ConfigError);
  try {
    CoefficientFn::constant(0.0, 1.0).validate(Role::growth, "gamma1");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma1") != std::string::npos);
    CHECK(std::string(e.what()).find("positive") != std::string::npos);
  }
}

TEST_CASE("separable kernel evaluation") {
  const auto one = BirthKernel::separable({{constant(2.0), constant(1.0)}});
  CHECK(one(0.3, 0.8) == 2.0);
  CHECK(one.rank() == 1);
  const auto two = BirthKernel::separable({{constant(1.0), constant(1.0)}, {constant(1.0), constant(1.0)}});
  CHECK(two(0.1, 0.9) == 2.0);
  const auto mixed = BirthKernel::separable(
      {{CoefficientFn::linear(0.0, 1.0, 1.0), CoefficientFn::linear(1.0, -1.0, 1.0)},
       {constant(0.5), CoefficientFn::linear(0.0, 2.0, 1.0)}});
  for (double s : {0.0, 0.2, 0.7, 1.0}) {
    for (double y : {0.0, 0.5, 1.0}) CHECK(mixed(s, y) == doctest::Approx(s * (1 - y) + y));
  }
  CHECK_THROWS_AS(one(1.5, 0.0), DomainError);
  CHECK_THROWS_AS(one(0.0, -0.5), DomainError);
}

TEST_CASE("general kernel reproduces s*y bilinearly") {
  const auto k = sspop::testing::product_kernel();
  CHECK(k(0.5, 0.5) == doctest::Approx(0.25));
  CHECK(!k.is_separable());
  CHECK(k.sup_value() == doctest::Approx(1.0));
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      const double s = i / 10.0;
      const double y = j / 10.0;
      CHECK(k(s, y) == doctest::Approx(s * y).epsilon(1e-14));
    }
  }
  // s*y is bilinear on each cell, so midpoints are exact too
  for (int i = 0; i < 10; ++i) {
    const double s = (i + 0.5) / 10.0;
    CHECK(k(s, 0.35) == doctest::Approx(s * 0.35));
  }
}

TEST_CASE("kernel validation") {
  CHECK_THROWS_AS(BirthKernel{}.validate(), ConfigError);
  const auto zero = BirthKernel::separable({{constant(0.0), constant(1.0)}});
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  Eigen::MatrixXd v(2, 2);
  v << 1.0, -1.0, 1.0, 1.0;
  const auto negative = BirthKernel::general({0.0, 1.0}, {0.0, 1.0}, v);
  CHECK_THROWS_AS(negative.validate(), ConfigError);
  CHECK_THROWS_AS(BirthKernel::general({0.0, 1.0}, {0.0, 1.0}, Eigen::MatrixXd::Ones(3, 2)),
                  InputError);
}

TEST_CASE("envelope of a constant kernel is the kernel") {
  const auto k = BirthKernel::tabulate([](double, double) { return 2.0; }, 1.0, 5);
  for (auto side : {EnvelopeSide::lower, EnvelopeSide::upper}) {
    const auto e = separable_envelope(k, 3, side);
    CHECK(e.is_separable());
    CHECK(e.rank() == 3);
    for (double s : {0.0, 0.2, 0.5, 0.9, 1.0}) {
      for (double y : {0.0, 0.33, 0.34, 1.0}) CHECK(e(s, y) == doctest::Approx(2.0));
    }
  }
}

TEST_CASE("envelopes of s*y") {
  const auto k = sspop::testing::product_kernel();
  const auto low1 = separable_envelope(k, 1, EnvelopeSide::lower);
  CHECK(low1(0.7, 0.7) == 0.0);
  CHECK(low1(1.0, 1.0) == 0.0);

  const auto up2 = separable_envelope(k, 2, EnvelopeSide::upper);
  CHECK(up2(0.1, 0.2) == doctest::Approx(0.25));
  CHECK(up2(0.7, 0.9) == doctest::Approx(1.0));
  CHECK(up2(0.1, 0.9) == doctest::Approx(0.5));
  CHECK(up2(0.9, 0.1) == doctest::Approx(0.5));
}

TEST_CASE("envelopes bound the kernel on a 200x200 sample") {
  const auto smooth = BirthKernel::tabulate(
      [](double s, double y) { return 1.0 + std::sin(3.0 * s) * std::cos(2.0 * y); }, 1.0, 23);
  for (const auto& k : {sspop::testing::product_kernel(), smooth}) {
    for (int n : {1, 2, 3, 4, 8}) {
      const auto lo = separable_envelope(k, n, EnvelopeSide::lower);
      const auto hi = separable_envelope(k, n, EnvelopeSide::upper);
      bool ok = true;
      for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 200; ++j) {
          const double s = i / 199.0;
          const double y = j / 199.0;
          const double b = k(s, y);
          ok = ok && lo(s, y) <= b + 1e-12 && hi(s, y) >= b - 1e-12;
        }
      }
      CHECK(ok);
    }
  }
}

TEST_CASE("envelope gap shrinks under refinement") {
  const auto k = sspop::testing::product_kernel();
  double previous = INFINITY;
  for (int n : {1, 2, 4, 8}) {
    const auto lo = separable_envelope(k, n, EnvelopeSide::lower);
    const auto hi = separable_envelope(k, n, EnvelopeSide::upper);
    double gap = 0.0;
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 200; ++j) {
        const double s = (i + 0.5) / 200.0;
        const double y = (j + 0.5) / 200.0;
        gap += (hi(s, y) - lo(s, y)) / (200.0 * 200.0);
      }
    }
    CHECK(gap <= previous + 1e-12);
    previous = gap;
  }
}

TEST_CASE("model validation names the failing assumption") {
  auto p = sspop::testing::decoupled_scenario(2.0);
  CHECK_NOTHROW(p.validate());
  CHECK(p.birth_bound() == 2.0);
  CHECK(p.transfer_bound() == 0.0);

  auto bad = p;
  bad.gamma1 = constant(0.0);
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = p;
  bad.c2 = constant(-0.1);
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = p;
  bad.mu = constant(0.5, 2.0);
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(min_growth(sspop::testing::constant_model(1.0, 0, 0, 0, sspop::testing::rank_one(1, 1)), 0.5) == 1.0);
}
