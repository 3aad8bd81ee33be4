#include "sspop/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace sspop {
namespace {

constexpr double kBracketCap = 1e6;
constexpr double kScanStep = 0.5;
constexpr int kFixedScanSteps = 200;

// Cumulative trapezoid of `f` on a uniform grid over [0, m], evaluated by
// linear interpolation.
class Antiderivative {
 public:
  Antiderivative(const std::function<double(double)>& f, double m, int intervals)
      : dr_(m / intervals), values_(static_cast<std::size_t>(intervals) + 1, 0.0) {
    double prev = f(0.0);
    for (int k = 1; k <= intervals; ++k) {
      const double r = k == intervals ? m : k * dr_;
      const double cur = f(r);
      values_[static_cast<std::size_t>(k)] = values_[static_cast<std::size_t>(k) - 1] + 0.5 * dr_ * (prev + cur);
      prev = cur;
    }
  }

  double operator()(double x) const {
    const auto last = values_.size() - 1;
    const double pos = std::clamp(x / dr_, 0.0, static_cast<double>(last));
    const auto k = std::min(static_cast<std::size_t>(pos), last - 1);
    const double w = pos - static_cast<double>(k);
    return (1.0 - w) * values_[k] + w * values_[k + 1];
  }

 private:
  double dr_;
  std::vector<double> values_;
};

const BirthKernel& require_separable(const ModelParams& params) {
  if (!params.beta.is_separable()) {
    throw MethodError(
        "characteristic equation needs a separable kernel; build a separable_envelope first");
  }
  return params.beta;
}

// Root of a decreasing function crossing 1: expand [-1, 1] until
// f(lo) > 1 > f(hi), then bisect to width tol.
template <typename Fn>
SpectralResult bisect_unit_crossing(Fn&& f, double tol, SpectralMethod method) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  double lo = -1.0;
  double hi = 1.0;
  double f_hi = f(hi);
  while (!(f_hi < 1.0)) {
    if (std::isnan(f_hi)) throw NumericalError("characteristic function is NaN at " + std::to_string(hi));
    hi *= 2.0;
    if (hi > kBracketCap) throw NoRootError("K(lambda) >= 1 up to lambda = 1e6");
    f_hi = f(hi);
  }
  double f_lo = f(lo);
  while (!(f_lo > 1.0)) {
    if (std::isnan(f_lo)) throw NumericalError("characteristic function is NaN at " + std::to_string(lo));
    lo *= 2.0;
    if (lo < -kBracketCap) {
      throw NoRootError("K(lambda) <= 1 down to lambda = -1e6; kernel is effectively zero");
    }
    f_lo = f(lo);
  }
  int iterations = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (std::isnan(f_mid)) throw NumericalError("characteristic function is NaN");
    (f_mid > 1.0 ? lo : hi) = mid;
    ++iterations;
  }
  SpectralResult r;
  r.lambda_star = 0.5 * (lo + hi);
  r.lo = lo;
  r.hi = hi;
  r.k_at_zero = f(0.0);
  r.method = method;
  r.iterations = iterations;
  return r;
}

double constant_value(const CoefficientFn& f, std::string_view name) {
  const auto* c = std::get_if<form::Constant>(&f.form());
  if (c == nullptr) throw MethodError(std::string(name) + " is not constant; closed form unavailable");
  return c->value;
}

}  // namespace

std::string_view to_string(SpectralMethod method) {
  switch (method) {
    case SpectralMethod::closed_form:
      return "closed_form";
    case SpectralMethod::quadrature_bisection:
      return "quadrature_bisection";
    case SpectralMethod::rank_n_determinant:
      return "rank_n_determinant";
    case SpectralMethod::generator_power_iteration:
      return "generator_power_iteration";
  }
  return "unknown";
}

CharMatrix::CharMatrix(const ModelParams& params, QuadratureOptions options) {
  const BirthKernel& beta = require_separable(params);
  if (options.panels < 1) throw ConfigError("quadrature needs at least one panel");
  rank_ = beta.rank();
  const double m = params.m;
  const int panels = options.panels;
  const double width = m / panels;

  const Antiderivative g([&](double r) { return 1.0 / params.gamma1(r); }, m, 10 * panels);
  const Antiderivative h(
      [&](double r) {
        return (params.mu(r) + params.c1(r) + params.gamma1.derivative(r)) / params.gamma1(r);
      },
      m, 10 * panels);

  using GL = GaussLegendre4<double>;
  const auto n_outer = static_cast<Eigen::Index>(4 * panels);
  outer_.reserve(static_cast<std::size_t>(n_outer));
  partial_.reserve(static_cast<std::size_t>(4 * n_outer));
  outer_birth_.resize(n_outer, rank_);
  outer_parent_.resize(n_outer, rank_);
  partial_birth_.resize(4 * n_outer, rank_);

  const auto birth_over_growth = [&](double y, int k) {
    return beta.terms()[static_cast<std::size_t>(k)].birth(y) / params.gamma1(y);
  };

  for (int p = 0; p < panels; ++p) {
    const double left = p * width;
    for (int q = 0; q < 4; ++q) {
      const double x = left + 0.5 * width * (1.0 + GL::nodes[q]);
      const auto a = static_cast<Eigen::Index>(outer_.size());
      outer_.push_back({0.5 * width * GL::weights[q], g(x), h(x)});
      for (int k = 0; k < rank_; ++k) {
        outer_birth_(a, k) = birth_over_growth(x, k);
        outer_parent_(a, k) = beta.terms()[static_cast<std::size_t>(k)].parent(x);
      }
      const double span = x - left;
      for (int r = 0; r < 4; ++r) {
        const double y = left + 0.5 * span * (1.0 + GL::nodes[r]);
        const auto b = static_cast<Eigen::Index>(partial_.size());
        partial_.push_back({0.5 * span * GL::weights[r], g(y), h(y)});
        for (int k = 0; k < rank_; ++k) partial_birth_(b, k) = birth_over_growth(y, k);
      }
    }
  }
}

Eigen::MatrixXd CharMatrix::operator()(double lambda) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rank_, rank_);
  Eigen::VectorXd inner(rank_);

  const auto accumulate = [&](const Node& s, const Node& y, const Eigen::MatrixXd& birth,
                              Eigen::Index row) {
    const double e = std::exp(-lambda * (s.g - y.g) - (s.h - y.h));
    for (int k = 0; k < rank_; ++k) {
      const double f = birth(row, k);
      if (f != 0.0) inner(k) += y.weight * e * f;
    }
  };

  const auto n_outer = static_cast<Eigen::Index>(outer_.size());
  for (Eigen::Index a = 0; a < n_outer; ++a) {
    const Node& s = outer_[static_cast<std::size_t>(a)];
    inner.setZero();
    const Eigen::Index full = 4 * (a / 4);
    for (Eigen::Index y = 0; y < full; ++y) {
      accumulate(s, outer_[static_cast<std::size_t>(y)], outer_birth_, y);
    }
    for (Eigen::Index y = 4 * a; y < 4 * a + 4; ++y) {
      accumulate(s, partial_[static_cast<std::size_t>(y)], partial_birth_, y);
    }
    for (int j = 0; j < rank_; ++j) {
      const double b = outer_parent_(a, j);
      if (b == 0.0) continue;
      for (int k = 0; k < rank_; ++k) {
        if (inner(k) != 0.0) out(j, k) += s.weight * b * inner(k);
      }
    }
  }
  return out;
}

double k_of_lambda(const ModelParams& params, double lambda, QuadratureOptions options) {
  if (require_separable(params).rank() != 1) {
    throw MethodError("K(lambda) needs a rank-one kernel; use the rank-n determinant");
  }
  const double k = CharMatrix(params, options)(lambda)(0, 0);
  if (!std::isfinite(k)) throw NumericalError("K(lambda) is not finite at lambda = " + std::to_string(lambda));
  return k;
}

SpectralResult solve_lambda_star(const ModelParams& params, double tol, QuadratureOptions options) {
  if (require_separable(params).rank() != 1) {
    throw MethodError("solve_lambda_star needs a rank-one kernel; use solve_rank_n_root");
  }
  const CharMatrix chi(params, options);
  return bisect_unit_crossing([&](double lambda) { return chi(lambda)(0, 0); }, tol,
                              SpectralMethod::quadrature_bisection);
}

double k_closed_form(const ModelParams& params, double lambda) {
  const BirthKernel& beta = require_separable(params);
  if (beta.rank() != 1) throw MethodError("closed form needs a rank-one kernel");
  const double g = constant_value(params.gamma1, "gamma1");
  const double b = constant_value(beta.terms()[0].birth, "beta birth factor") *
                   constant_value(beta.terms()[0].parent, "beta parent factor");
  const double alpha =
      (lambda + constant_value(params.mu, "mu") + constant_value(params.c1, "c1")) / g;
  const double m = params.m;
  const double x = alpha * m;
  double phi;
  if (std::abs(x) < 1e-4) {
    phi = m * m * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
  } else {
    phi = (m + std::expm1(-x) / alpha) / alpha;
  }
  return b / g * phi;
}

SpectralResult solve_lambda_star_closed_form(const ModelParams& params, double tol) {
  k_closed_form(params, 0.0);  // rejects unsupported inputs up front
  return bisect_unit_crossing([&](double lambda) { return k_closed_form(params, lambda); }, tol,
                              SpectralMethod::closed_form);
}

Eigen::MatrixXd rank_n_char_matrix(const ModelParams& params, double lambda,
                                   QuadratureOptions options) {
  Eigen::MatrixXd m = CharMatrix(params, options)(lambda);
  if (!m.allFinite()) throw NumericalError("characteristic matrix is not finite");
  return m;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SpectralResult solve_rank_n_root(const ModelParams& params, double tol, QuadratureOptions options) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  const CharMatrix chi(params, options);
  const int n = chi.rank();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const auto det = [&](const Eigen::MatrixXd& m) { return (identity - m).determinant(); };

  const Eigen::MatrixXd m0 = chi(0.0);
  if (m0.isZero(0.0)) throw NoRootError("characteristic matrix vanishes; kernel is trivial");

  // Above the dominant root rho(M) < 1, hence det(I - M) > 0.
  double upper = 1.0;
  Eigen::MatrixXd m_upper = chi(upper);
  while (spectral_radius(m_upper) >= 1.0) {
    upper *= 2.0;
    if (upper > kBracketCap) throw NoRootError("rho(M(lambda)) >= 1 up to lambda = 1e6");
    m_upper = chi(upper);
  }

  double step = kScanStep;
  double hi = upper;
  double lo = upper;
  bool by_radius = false;
  int scans = 0;
  for (;;) {
    lo = hi - step;
    if (lo < -kBracketCap) throw NoRootError("no sign change of det(I - M) above -1e6");
    const Eigen::MatrixXd m_lo = chi(lo);
    if (!m_lo.allFinite()) throw NoRootError("characteristic matrix overflowed before a sign change");
    if (det(m_lo) <= 0.0) break;
    if (spectral_radius(m_lo) >= 1.0) {
      by_radius = true;
      break;
    }
    hi = lo;
    if (++scans >= kFixedScanSteps) step *= 2.0;
  }

  // Invariant: g(lo) <= 0 < g(hi).
  const auto g = [&](double lambda) {
    const Eigen::MatrixXd m = chi(lambda);
    return by_radius ? 1.0 - spectral_radius(m) : det(m);
  };
  int iterations = 0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? hi : lo) = mid;
    ++iterations;
  }
  SpectralResult r;
  r.lambda_star = 0.5 * (lo + hi);
  r.lo = lo;
  r.hi = hi;
  r.k_at_zero = spectral_radius(m0);
  r.method = SpectralMethod::rank_n_determinant;
  r.iterations = iterations;
  return r;
}

Eigen::MatrixXd generator_matrix(const Discretization& disc) {
  const int n = disc.grid().n_cells;
  const double inv_h = 1.0 / disc.grid().cell_width;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const auto& v1 = disc.face_speed1();
  const auto& v2 = disc.face_speed2();
  for (int i = 0; i < n; ++i) {
    a(i, i) -= v1(i + 1) * inv_h;
    a(n + i, n + i) -= v2(i + 1) * inv_h;
    if (i > 0) {
      a(i, i - 1) += v1(i) * inv_h;
      a(n + i, n + i - 1) += v2(i) * inv_h;
    }
  }
  a.topLeftCorner(n, n) += disc.birth();
  for (int i = 0; i < n; ++i) {
    a(i, i) -= disc.loss1()(i);
    a(i, n + i) += disc.c2()(i);
    a(n + i, i) += disc.c1()(i);
    a(n + i, n + i) -= disc.c2()(i);
  }
  return a;
}

Eigen::MatrixXd generator_matrix(const ModelParams& params, const Grid& grid) {
  return generator_matrix(Discretization(params, grid));
}

SpectralResult generator_spectral_bound(const ModelParams& params, const Grid& grid, double tol) {
  const auto pair = dominant_eigenpair(generator_matrix(params, grid), tol);
  SpectralResult r;
  r.lambda_star = pair.value;
  r.lo = pair.value;
  r.hi = pair.value;
  r.k_at_zero = std::numeric_limits<double>::quiet_NaN();
  r.method = SpectralMethod::generator_power_iteration;
  r.iterations = pair.iterations;
  return r;
}

}  // namespace sspop
