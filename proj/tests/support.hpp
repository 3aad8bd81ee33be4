#pragma once

// Model builders and independent oracles shared by the test binaries. The
// oracles never call into the spectral module.

#include "sspop/coeffs.hpp"
#include "sspop/solver.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace sspop::testing {

inline CoefficientFn constant(double v, double m = 1.0) { return CoefficientFn::constant(v, m); }

inline BirthKernel rank_one(double b1, double b2, double m = 1.0) {
  return BirthKernel::separable({{constant(b1, m), constant(b2, m)}});
}

/// beta(s, y) = scale * s * y tabulated on an n x n node grid (bilinear
/// interpolation reproduces it exactly).
inline BirthKernel product_kernel(double scale = 1.0, double m = 1.0, int nodes = 11) {
  return BirthKernel::tabulate([scale](double s, double y) { return scale * s * y; }, m, nodes);
}

inline ModelParams constant_model(double gamma, double mu, double c1, double c2, BirthKernel beta,
                                  double m = 1.0) {
  return {constant(gamma, m), constant(gamma, m), constant(mu, m), constant(c1, m),
          constant(c2, m),    std::move(beta),    m};
}

/// The scenario with m = 1, gamma1 = 1, mu = 0.5, c1 = c2 = 0 and
/// beta(s, y) = b (rank one).
inline ModelParams decoupled_scenario(double b) { return constant_model(1.0, 0.5, 0.0, 0.0, rank_one(b, 1.0)); }

/// Direct integration of the characteristic function with constant
/// coefficients: K = (b/a) [m - (1 - e^{-a m}) / a], a = lambda + mu + c1.
/// Near a = 0 the bracket cancels, so the Taylor series
/// K = b sum_k (-a)^k m^{k+2} / (k+2)! takes over.
inline double closed_form_k(double b, double lambda, double mu_plus_c1, double m = 1.0) {
  const double a = lambda + mu_plus_c1;
  if (std::abs(a * m) < 1e-2) {
    double term = m * m / 2.0;
    double sum = 0.0;
    for (int k = 0; k < 12; ++k) {
      sum += term;
      term *= -a * m / (k + 3);
    }
    return b * sum;
  }
  return b / a * (m + std::expm1(-a * m) / a);
}

/// K(0) = 1 for b = 1 / K_1(0), K_1 the closed form with unit fertility.
inline double critical_fertility(double mu_plus_c1, double m = 1.0) {
  return 1.0 / closed_form_k(1.0, 0.0, mu_plus_c1, m);
}

/// Bisection on the closed form (decreasing in lambda).
inline double closed_form_root(double b, double mu_plus_c1, double tol, double m = 1.0) {
  double lo = -mu_plus_c1 - 50.0;
  double hi = 50.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (closed_form_k(b, mid, mu_plus_c1, m) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (b <= a) return 0.0;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

/// Brute-force triple integral for the rank-one characteristic function:
/// every level, including the exponent, integrated afresh by Simpson.
inline double brute_force_k(const ModelParams& p, const CoefficientFn& b1, const CoefficientFn& b2,
                            double lambda, int n = 200) {
  const auto rate = [&](double r) {
    return (lambda + p.mu(r) + p.c1(r) + p.gamma1.derivative(r)) / p.gamma1(r);
  };
  return simpson(
      [&](double s) {
        const double inner = simpson(
            [&](double y) {
              const double exponent = simpson(rate, y, s, 40);
              return b1(y) / p.gamma1(y) * std::exp(-exponent);
            },
            0.0, s, n);
        return b2(s) * inner;
      },
      0.0, p.m, n);
}

inline PopulationState random_state(const Grid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PopulationState s = zero_state(grid);
  for (int i = 0; i < grid.n_cells; ++i) {
    s.u1(i) = u(rng) < 0.3 ? 0.0 : u(rng);
    s.u2(i) = u(rng) < 0.3 ? 0.0 : u(rng);
  }
  return s;
}

}  // namespace sspop::testing
