#include "support.hpp"

#include "sspop/asymptotics.hpp"
#include "sspop/errors.hpp"
#include "sspop/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sspop;
using namespace sspop::testing;

TEST_CASE("gauss-legendre rule integrates cubics exactly") {
  using Rule = GaussLegendre4<double>;
  double w = 0.0;
  double x6 = 0.0;
  for (int k = 0; k < 4; ++k) {
    w += Rule::weights[k];
    x6 += Rule::weights[k] * std::pow(Rule::nodes[k], 6);
  }
  CHECK(w == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(x6 == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
  using RuleF = GaussLegendre4<float>;
  CHECK(RuleF::weights[0] + RuleF::weights[1] == doctest::Approx(1.0f));
}

TEST_CASE("zero fertility gives K = 0") {
  const auto p = decoupled_scenario(0.0);
  for (double l : {-0.3, 0.0, 2.0}) CHECK(k_of_lambda(p, l) == 0.0);
}

TEST_CASE("quadrature K matches the closed form") {
  const auto p = decoupled_scenario(2.0);
  CHECK(k_of_lambda(p, 0.0) == doctest::Approx(0.852245277701).epsilon(1e-10));
  for (double l : {-0.45, -0.1, 0.0, 0.3, 1.0, 4.0, 10.0}) {
    CHECK(std::abs(k_of_lambda(p, l) - closed_form_k(2.0, l, 0.5)) <= 1e-8);
    CHECK(std::abs(k_closed_form(p, l) - closed_form_k(2.0, l, 0.5)) <= 1e-13);
  }
  // K(100) = (2/100.5)(1 - 1/100.5) ~ 0.0197, small but not below 1e-3
  CHECK(std::abs(k_of_lambda(p, 100.0) - closed_form_k(2.0, 100.0, 0.5)) <= 1e-8);
  CHECK(k_of_lambda(p, 100.0) < 0.02);
  // the removable singularity a = 0
  CHECK(k_closed_form(p, -0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadrature K matches a brute-force integral for variable coefficients") {
  const double m = 1.5;
  ModelParams p{CoefficientFn::linear(1.0, 0.6, m),
                CoefficientFn::constant(1.0, m),
                CoefficientFn::gaussian_bump(0.7, 0.4, 0.5, m),
                CoefficientFn::linear(0.2, 0.1, m),
                CoefficientFn::constant(0.3, m),
                {},
                m};
  const auto b1 = CoefficientFn::linear(2.0, -1.0, m);
  const auto b2 = CoefficientFn::gaussian_bump(1.0, 0.5, 1.2, m);
  p.beta = BirthKernel::separable({{b1, b2}});
  // the trapezoid exponent is second order: ~5e-7 at 64 panels, 16x less at 256
  for (double l : {-0.5, 0.0, 0.8}) {
    const double oracle = brute_force_k(p, b1, b2, l, 400);
    const double coarse = std::abs(k_of_lambda(p, l) - oracle);
    const double fine = std::abs(k_of_lambda(p, l, {256}) - oracle);
    CHECK(coarse <= 1e-6 * oracle);
    CHECK(fine <= coarse / 8.0);
  }
}

TEST_CASE("K rejects other kernels") {
  auto p = decoupled_scenario(1.0);
  p.beta = product_kernel();
  CHECK_THROWS_AS(k_of_lambda(p, 0.0), MethodError);
  p.beta = BirthKernel::separable({{constant(1.0), constant(1.0)}, {constant(1.0), constant(1.0)}});
  CHECK_THROWS_AS(k_of_lambda(p, 0.0), MethodError);
}

TEST_CASE("K is strictly decreasing") {
  const auto p = constant_model(1.0, 0.3, 0.2, 0.0,
                                BirthKernel::separable({{CoefficientFn::linear(1.0, 1.0, 1.0),
                                                         CoefficientFn::linear(0.5, 0.5, 1.0)}}));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 20; ++k) {
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-6) continue;
    CHECK(k_of_lambda(p, a) > k_of_lambda(p, b));
  }
}

TEST_CASE("root of K = 1 and the sign law") {
  SUBCASE("b = 2 decays") {
    const auto r = solve_lambda_star(decoupled_scenario(2.0), 1e-10);
    CHECK(r.lambda_star < 0.0);
    CHECK(r.lambda_star == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(r.k_at_zero == doctest::Approx(0.852245277701).epsilon(1e-9));
    CHECK(r.lo <= r.lambda_star);
    CHECK(r.hi >= r.lambda_star);
    CHECK(r.hi - r.lo <= 1e-10);
    CHECK(r.method == SpectralMethod::quadrature_bisection);
    CHECK(r.iterations > 0);
  }
  SUBCASE("b = 4 grows") {
    const auto r = solve_lambda_star(decoupled_scenario(4.0), 1e-10);
    CHECK(r.lambda_star > 0.0);
    CHECK(r.k_at_zero == doctest::Approx(1.704490555).epsilon(1e-8));
    CHECK(r.lambda_star == doctest::Approx(closed_form_root(4.0, 0.5, 1e-12)).epsilon(1e-8));
  }
  SUBCASE("critical fertility") {
    const double b0 = critical_fertility(0.5);
    CHECK(b0 == doctest::Approx(2.346743).epsilon(1e-6));
    const auto r = solve_lambda_star(decoupled_scenario(b0), 1e-10);
    CHECK(std::abs(r.lambda_star) <= 1e-8);
  }
  SUBCASE("bracket straddles the root") {
    const auto p = decoupled_scenario(3.0);
    const auto r = solve_lambda_star(p, 1e-9);
    CHECK(k_of_lambda(p, r.lo) >= 1.0);
    CHECK(k_of_lambda(p, r.hi) <= 1.0);
  }
  SUBCASE("trivial kernel has no root") {
    CHECK_THROWS_AS(solve_lambda_star(decoupled_scenario(0.0), 1e-10), NoRootError);
  }
}

TEST_CASE("closed-form solver") {
  const auto r = solve_lambda_star_closed_form(decoupled_scenario(4.0), 1e-12);
  CHECK(r.method == SpectralMethod::closed_form);
  CHECK(r.lambda_star == doctest::Approx(closed_form_root(4.0, 0.5, 1e-13)).epsilon(1e-10));
  auto p = decoupled_scenario(4.0);
  p.mu = CoefficientFn::linear(0.5, 0.1, 1.0);
  CHECK_THROWS_AS(solve_lambda_star_closed_form(p, 1e-10), MethodError);
}

TEST_CASE("rank-one characteristic matrix is K") {
  const auto p = constant_model(1.2, 0.3, 0.1, 0.0,
                                BirthKernel::separable({{CoefficientFn::linear(1.0, 2.0, 1.0),
                                                         CoefficientFn::gaussian_bump(0.6, 0.3, 1.0, 1.0)}}));
  for (double l : {-0.4, 0.0, 1.5}) {
    const auto mat = rank_n_char_matrix(p, l);
    REQUIRE(mat.rows() == 1);
    CHECK(std::abs(mat(0, 0) - k_of_lambda(p, l)) <= 1e-12);
  }
}

TEST_CASE("zero kernel: M vanishes and there is no root") {
  const auto p = constant_model(1.0, 0.5, 0.0, 0.0,
                                BirthKernel::separable({{constant(0.0), constant(1.0)},
                                                        {constant(0.0), constant(2.0)}}));
  CHECK(rank_n_char_matrix(p, 0.3).isZero(0.0));
  CHECK_THROWS_AS(solve_rank_n_root(p, 1e-10), NoRootError);
}

TEST_CASE("cancelling terms: M is nilpotent and det(I - M) stays 1") {
  // 0*1 + 1*0 is the zero kernel, but the cross entry M_01 is not zero
  const auto p = constant_model(1.0, 0.5, 0.0, 0.0,
                                BirthKernel::separable({{constant(0.0), constant(1.0)},
                                                        {constant(1.0), constant(0.0)}}));
  const auto mat = rank_n_char_matrix(p, 0.3);
  CHECK(mat(0, 1) > 0.0);
  CHECK((Eigen::MatrixXd::Identity(2, 2) - mat).determinant() == doctest::Approx(1.0));
  CHECK_THROWS_AS(solve_rank_n_root(p, 1e-10), NoRootError);
}

TEST_CASE("rank-n root") {
  SUBCASE("rank one agrees with the K root") {
    const auto p = decoupled_scenario(3.0);
    const auto a = solve_rank_n_root(p, 1e-13);
    const auto b = solve_lambda_star(p, 1e-13);
    CHECK(a.method == SpectralMethod::rank_n_determinant);
    CHECK(std::abs(a.lambda_star - b.lambda_star) <= 1e-12);
  }
  SUBCASE("duplicated factors halve into the same kernel") {
    const auto b1 = CoefficientFn::linear(1.0, 1.0, 1.0);
    const auto b2 = CoefficientFn::linear(2.0, -1.0, 1.0);
    const auto half = CoefficientFn::linear(0.5, 0.5, 1.0);
    const auto p1 = constant_model(1.0, 0.4, 0.0, 0.0, BirthKernel::separable({{b1, b2}}));
    const auto p2 = constant_model(1.0, 0.4, 0.0, 0.0, BirthKernel::separable({{half, b2}, {half, b2}}));
    const double tol = 1e-10;
    const auto r1 = solve_lambda_star(p1, tol);
    const auto r2 = solve_rank_n_root(p2, tol);
    CHECK(std::abs(r1.lambda_star - r2.lambda_star) <= tol);
  }
  SUBCASE("two-term kernel satisfies det(I - M) = 0") {
    const auto p = constant_model(
        1.0, 0.2, 0.1, 0.0,
        BirthKernel::separable({{CoefficientFn::linear(0.0, 2.0, 1.0), constant(1.0)},
                                {constant(0.5), CoefficientFn::linear(1.0, -0.5, 1.0)}}));
    const auto r = solve_rank_n_root(p, 1e-12);
    const auto mat = rank_n_char_matrix(p, r.lambda_star);
    CHECK(std::abs((Eigen::MatrixXd::Identity(2, 2) - mat).determinant()) < 1e-9);
    CHECK(spectral_radius(rank_n_char_matrix(p, r.lambda_star + 1e-3)) < 1.0);
  }
}

TEST_CASE("envelope roots bracket and tighten") {
  const auto k = product_kernel();
  double previous = INFINITY;
  for (int n : {1, 2, 4, 8}) {
    auto lower = constant_model(1.0, 0.2, 0.0, 0.0, separable_envelope(k, n, EnvelopeSide::lower));
    auto upper = constant_model(1.0, 0.2, 0.0, 0.0, separable_envelope(k, n, EnvelopeSide::upper));
    const double hi = solve_rank_n_root(upper, 1e-10).lambda_star;
    double lo = -INFINITY;
    try {
      lo = solve_rank_n_root(lower, 1e-10).lambda_star;
    } catch (const NoRootError&) {
    }
    CHECK(lo <= hi);
    CHECK(hi - lo <= previous);
    previous = hi - lo;
  }
  CHECK(std::isfinite(previous));
}

TEST_CASE("dominant eigenpair") {
  SUBCASE("diagonal") {
    Eigen::Matrix2d a;
    a << -1.0, 0.0, 0.0, -2.0;
    const auto e = dominant_eigenpair(a, 1e-12);
    CHECK(e.value == doctest::Approx(-1.0));
    CHECK(e.vector(0) == doctest::Approx(1.0));
    CHECK(std::abs(e.vector(1)) < 1e-10);
  }
  SUBCASE("symmetric metzler") {
    Eigen::Matrix2d a;
    a << -1.0, 1.0, 1.0, -1.0;
    const auto e = dominant_eigenpair(a, 1e-12);
    CHECK(std::abs(e.value) < 1e-12);
    CHECK(e.vector(0) == doctest::Approx(0.5));
    CHECK(e.vector(1) == doctest::Approx(0.5));
  }
  SUBCASE("float instantiation") {
    Eigen::Matrix2f a;
    a << -1.0f, 0.5f, 0.5f, -1.0f;
    const auto e = dominant_eigenpair(a, 1e-5f);
    CHECK(e.value == doctest::Approx(-0.5).epsilon(1e-4));
  }
  SUBCASE("not metzler") {
    Eigen::Matrix2d a;
    a << -1.0, -1.0, 1.0, -1.0;
    CHECK_THROWS_AS(dominant_eigenpair(a, 1e-12), MethodError);
  }
  SUBCASE("iteration cap") {
    Eigen::Matrix3d a;
    a << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0;
    a.diagonal().array() -= 1.0;
    a(0, 0) = -0.999;
    CHECK_THROWS_AS(dominant_eigenpair(a, 1e-14, 5), ConvergenceError);
  }
  SUBCASE("perron vector of a random metzler matrix") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd a(12, 12);
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) a(i, j) = i == j ? -3.0 * u(rng) : u(rng);
    }
    const auto e = dominant_eigenpair(a, 1e-12);
    CHECK(e.vector.minCoeff() >= -1e-10);
    CHECK(e.vector.sum() == doctest::Approx(1.0));
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    CHECK(e.value == doctest::Approx(es.eigenvalues().real().maxCoeff()).epsilon(1e-9));
  }
}

TEST_CASE("generator eigenvalue tracks the K root") {
  const auto p = decoupled_scenario(2.0);
  const auto r = generator_spectral_bound(p, build_grid(1.0, 200), 1e-10);
  CHECK(r.method == SpectralMethod::generator_power_iteration);
  CHECK(std::abs(r.lambda_star + 0.5) <= 5e-2);
  const auto coarse = generator_spectral_bound(p, build_grid(1.0, 100), 1e-10);
  CHECK(std::abs(r.lambda_star + 0.5) < std::abs(coarse.lambda_star + 0.5));
}

TEST_CASE("method names") {
  CHECK(to_string(SpectralMethod::closed_form) == "closed_form");
  CHECK(to_string(SpectralMethod::generator_power_iteration) == "generator_power_iteration");
}

TEST_CASE("lower envelope root stays below the simulated growth rate") {
  const BirthKernel kernels[] = {
      product_kernel(),
      BirthKernel::tabulate([](double s, double y) { return 0.5 + 4.0 * (1.0 - s) * y; }, 1.0, 21),
  };
  const auto g = build_grid(1.0, 100);
  for (const auto& k : kernels) {
    const auto full = constant_model(1.0, 0.1, 0.5, 0.5, k);
    auto lower = full;
    lower.beta = separable_envelope(k, 4, EnvelopeSide::lower);
    const double root = solve_rank_n_root(lower, 1e-10).lambda_star;
    const auto tr = simulate(full, g, sample_state(g, constant(1.0), constant(0.0)), 40.0,
                             even_output_times(40.0, 50));
    const double rate = growth_rate(tr, 0.5).rate;
    MESSAGE("lower root " << root << ", simulated rate " << rate);
    CHECK(root <= rate + 5e-2);
  }
}
