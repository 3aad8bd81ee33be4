#include "sspop/coeffs.hpp"

#include "sspop/errors.hpp"

#include <cmath>
#include <sstream>

namespace sspop {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double domain_slack(double m) { return 1e-12 * std::max(1.0, m); }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Index i of the segment [k_i, k_{i+1}] holding s, taking the left segment at
// interior knots.
std::size_t segment_left(const std::vector<double>& knots, double s) {
  auto it = std::lower_bound(knots.begin(), knots.end(), s);
  auto i = static_cast<std::size_t>(it - knots.begin());
  if (i == 0) return 0;
  return std::min(i - 1, knots.size() - 2);
}

// Segment [k_i, k_{i+1}) holding s; the last segment is closed.
std::size_t segment_half_open(const std::vector<double>& knots, double s) {
  auto it = std::upper_bound(knots.begin(), knots.end(), s);
  auto i = static_cast<std::size_t>(it - knots.begin());
  if (i == 0) return 0;
  return std::min(i - 1, knots.size() - 2);
}

double table_eval(const form::Table& t, double s) {
  if (t.interpolation == Interpolation::step) {
    return t.values[segment_half_open(t.knots, s)];
  }
  const std::size_t i = segment_left(t.knots, s);
  const double w = (s - t.knots[i]) / (t.knots[i + 1] - t.knots[i]);
  return (1.0 - w) * t.values[i] + w * t.values[i + 1];
}

double table_slope(const form::Table& t, double s) {
  if (t.interpolation == Interpolation::step) return 0.0;
  const std::size_t i = segment_left(t.knots, s);
  return (t.values[i + 1] - t.values[i]) / (t.knots[i + 1] - t.knots[i]);
}

double bilinear(const std::vector<double>& xs, const std::vector<double>& ys,
                const Eigen::MatrixXd& v, double x, double y) {
  const std::size_t i = segment_left(xs, x);
  const std::size_t j = segment_left(ys, y);
  const double wx = (x - xs[i]) / (xs[i + 1] - xs[i]);
  const double wy = (y - ys[j]) / (ys[j + 1] - ys[j]);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  return (1 - wx) * (1 - wy) * v(ii, jj) + wx * (1 - wy) * v(ii + 1, jj) +
         (1 - wx) * wy * v(ii, jj + 1) + wx * wy * v(ii + 1, jj + 1);
}

void check_knots(const std::vector<double>& knots, std::string_view what) {
  if (knots.size() < 2) {
    throw ConfigError(std::string(what) + ": at least two knots are required");
  }
  if (!all_finite(knots)) throw ConfigError(std::string(what) + ": knots must be finite");
  if (knots.front() != 0.0) throw ConfigError(std::string(what) + ": first knot must be 0");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      throw ConfigError(std::string(what) + ": knots must be strictly ascending");
    }
  }
}

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Sample coordinates on [a, b]: a uniform comb plus every breakpoint inside,
// so piecewise-(bi)linear extrema are hit exactly.
std::vector<double> cell_samples(double a, double b, const std::vector<double>& breaks) {
  constexpr int kComb = 17;
  std::vector<double> xs;
  xs.reserve(kComb + breaks.size());
  for (int k = 0; k < kComb; ++k) xs.push_back(a + (b - a) * k / (kComb - 1));
  xs.back() = b;
  for (double x : breaks) {
    if (x > a && x < b) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

void append_breaks(const CoefficientFn& f, std::vector<double>& out) {
  if (const auto* t = std::get_if<form::Table>(&f.form())) {
    out.insert(out.end(), t->knots.begin(), t->knots.end());
  }
}

}  // namespace

CoefficientFn::CoefficientFn(Form f, double m) : form_(std::move(f)), m_(m) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw ConfigError("domain size m must be positive and finite, got " + fmt_num(m));
  }
}

CoefficientFn CoefficientFn::constant(double value, double m) {
  if (!std::isfinite(value)) throw ConfigError("constant value must be finite");
  return {form::Constant{value}, m};
}

CoefficientFn CoefficientFn::linear(double a, double b, double m) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("linear coefficients must be finite");
  return {form::Linear{a, b}, m};
}

CoefficientFn CoefficientFn::gaussian_bump(double center, double width, double height, double m) {
  if (!std::isfinite(center) || !std::isfinite(height) || !std::isfinite(width)) {
    throw ConfigError("gaussian_bump parameters must be finite");
  }
  if (!(width > 0.0)) throw ConfigError("gaussian_bump width must be positive");
  return {form::GaussianBump{center, width, height}, m};
}

CoefficientFn CoefficientFn::table(std::vector<double> knots, std::vector<double> values,
                                   Interpolation interpolation) {
  check_knots(knots, "table");
  const std::size_t expected =
      interpolation == Interpolation::linear ? knots.size() : knots.size() - 1;
  if (values.size() != expected) {
    throw ConfigError("table: expected " + std::to_string(expected) + " values, got " +
                      std::to_string(values.size()));
  }
  if (!all_finite(values)) throw ConfigError("table: values must be finite");
  const double m = knots.back();
  return {form::Table{std::move(knots), std::move(values), interpolation}, m};
}

CoefficientFn CoefficientFn::from_form(Form f, double m) {
  return std::visit(
      overloaded{
          [&](const form::Constant& c) { return constant(c.value, m); },
          [&](const form::Linear& l) { return linear(l.a, l.b, m); },
          [&](const form::GaussianBump& g) { return gaussian_bump(g.center, g.width, g.height, m); },
          [&](const form::Table& t) {
            auto fn = table(t.knots, t.values, t.interpolation);
            if (std::abs(fn.domain_max() - m) > domain_slack(m)) {
              throw ConfigError("table: last knot " + fmt_num(fn.domain_max()) +
                                " must equal m = " + fmt_num(m));
            }
            return fn;
          },
      },
      f);
}

void CoefficientFn::check_domain(double s) const {
  const double slack = domain_slack(m_);
  if (!(s >= -slack && s <= m_ + slack)) {
    throw DomainError("size " + fmt_num(s) + " outside [0, " + fmt_num(m_) + "]");
  }
}

double CoefficientFn::operator()(double s) const {
  check_domain(s);
  s = std::clamp(s, 0.0, m_);
  return std::visit(overloaded{
                        [](const form::Constant& c) { return c.value; },
                        [s](const form::Linear& l) { return l.a + l.b * s; },
                        [s](const form::GaussianBump& g) {
                          const double z = (s - g.center) / g.width;
                          return g.height * std::exp(-0.5 * z * z);
                        },
                        [s](const form::Table& t) { return table_eval(t, s); },
                    },
                    form_);
}

double CoefficientFn::derivative(double s) const {
  check_domain(s);
  s = std::clamp(s, 0.0, m_);
  return std::visit(overloaded{
                        [](const form::Constant&) { return 0.0; },
                        [](const form::Linear& l) { return l.b; },
                        [s](const form::GaussianBump& g) {
                          const double z = (s - g.center) / g.width;
                          return -g.height * z / g.width * std::exp(-0.5 * z * z);
                        },
                        [s](const form::Table& t) { return table_slope(t, s); },
                    },
                    form_);
}

double CoefficientFn::sup_value() const {
  return std::visit(
      overloaded{
          [](const form::Constant& c) { return c.value; },
          [this](const form::Linear& l) { return std::max(l.a, l.a + l.b * m_); },
          [this](const form::GaussianBump& g) {
            // Unimodal: the extremum sits at the clamped center.
            const double at = std::clamp(g.center, 0.0, m_);
            return g.height >= 0.0 ? (*this)(at) : std::max((*this)(0.0), (*this)(m_));
          },
          [](const form::Table& t) { return *std::max_element(t.values.begin(), t.values.end()); },
      },
      form_);
}

double CoefficientFn::inf_value() const {
  return std::visit(
      overloaded{
          [](const form::Constant& c) { return c.value; },
          [this](const form::Linear& l) { return std::min(l.a, l.a + l.b * m_); },
          [this](const form::GaussianBump& g) {
            const double at = std::clamp(g.center, 0.0, m_);
            return g.height >= 0.0 ? std::min((*this)(0.0), (*this)(m_)) : (*this)(at);
          },
          [](const form::Table& t) { return *std::min_element(t.values.begin(), t.values.end()); },
      },
      form_);
}

double CoefficientFn::sup_norm() const {
  return std::max(std::abs(sup_value()), std::abs(inf_value()));
}

void CoefficientFn::validate(Role role, std::string_view name) const {
  for (int k = 0; k <= kValidationSamples; ++k) {
    const double s = m_ * k / kValidationSamples;
    const double v = (*this)(s);
    if (!std::isfinite(v)) {
      throw ConfigError(std::string(name) + " is not finite at s = " + fmt_num(s));
    }
    if (role == Role::growth && !(v > 0.0)) {
      throw ConfigError(std::string(name) + " must be strictly positive on [0, m]; value " +
                        fmt_num(v) + " at s = " + fmt_num(s));
    }
    if (role == Role::rate && v < 0.0) {
      throw ConfigError(std::string(name) + " must be nonnegative on [0, m]; value " +
                        fmt_num(v) + " at s = " + fmt_num(s));
    }
  }
  // Tables are piecewise linear: the knots carry the extrema.
  if (std::holds_alternative<form::Table>(form_)) {
    const double lo = inf_value();
    if (role == Role::growth && !(lo > 0.0)) {
      throw ConfigError(std::string(name) + " must be strictly positive on [0, m]");
    }
    if (role == Role::rate && lo < 0.0) {
      throw ConfigError(std::string(name) + " must be nonnegative on [0, m]");
    }
  }
}

BirthKernel BirthKernel::general(std::vector<double> s_nodes, std::vector<double> y_nodes,
                                 Eigen::MatrixXd values) {
  check_knots(s_nodes, "kernel s_nodes");
  check_knots(y_nodes, "kernel y_nodes");
  if (s_nodes.back() != y_nodes.back()) {
    throw ConfigError("kernel: s_nodes and y_nodes must span the same [0, m]");
  }
  if (values.rows() != static_cast<Eigen::Index>(s_nodes.size()) ||
      values.cols() != static_cast<Eigen::Index>(y_nodes.size())) {
    throw ConfigError("kernel: values must be " + std::to_string(s_nodes.size()) + " x " +
                      std::to_string(y_nodes.size()));
  }
  if (!values.allFinite()) throw ConfigError("kernel: values must be finite");
  BirthKernel k;
  k.m_ = s_nodes.back();
  k.s_nodes_ = std::move(s_nodes);
  k.y_nodes_ = std::move(y_nodes);
  k.values_ = std::move(values);
  return k;
}

BirthKernel BirthKernel::separable(std::vector<SeparableTerm> terms) {
  if (terms.empty()) throw ConfigError("separable kernel needs at least one term");
  const double m = terms.front().birth.domain_max();
  for (const auto& t : terms) {
    if (std::abs(t.birth.domain_max() - m) > domain_slack(m) ||
        std::abs(t.parent.domain_max() - m) > domain_slack(m)) {
      throw ConfigError("separable kernel factors must share one domain [0, m]");
    }
  }
  BirthKernel k;
  k.m_ = m;
  k.terms_ = std::move(terms);
  return k;
}

double BirthKernel::operator()(double s, double y) const {
  const double slack = domain_slack(m_);
  if (!(s >= -slack && s <= m_ + slack && y >= -slack && y <= m_ + slack)) {
    throw DomainError("kernel argument (" + fmt_num(s) + ", " + fmt_num(y) + ") outside [0, " +
                      fmt_num(m_) + "]^2");
  }
  if (is_separable()) {
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.birth(s) * t.parent(y);
    return sum;
  }
  if (values_.size() == 0) throw ConfigError("kernel is empty");
  return bilinear(s_nodes_, y_nodes_, values_, std::clamp(s, 0.0, m_), std::clamp(y, 0.0, m_));
}

double BirthKernel::sup_value() const {
  if (is_separable()) {
    double sum = 0.0;
    for (const auto& t : terms_) sum += t.birth.sup_norm() * t.parent.sup_norm();
    return sum;
  }
  return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
}

void BirthKernel::validate() const {
  if (is_separable()) {
    bool nonzero = false;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const std::string idx = std::to_string(k);
      terms_[k].birth.validate(Role::rate, "beta term " + idx + " birth factor");
      terms_[k].parent.validate(Role::rate, "beta term " + idx + " parent factor");
      nonzero = nonzero || (terms_[k].birth.sup_value() > 0.0 && terms_[k].parent.sup_value() > 0.0);
    }
    if (!nonzero) throw ConfigError("beta must not vanish identically");
    return;
  }
  if (values_.size() == 0) throw ConfigError("beta is empty");
  if (values_.minCoeff() < 0.0) throw ConfigError("beta must be nonnegative on [0, m]^2");
  if (!(values_.maxCoeff() > 0.0)) throw ConfigError("beta must not vanish identically");
}

bool BirthKernel::operator==(const BirthKernel& other) const {
  return m_ == other.m_ && terms_ == other.terms_ && s_nodes_ == other.s_nodes_ &&
         y_nodes_ == other.y_nodes_ && values_.rows() == other.values_.rows() &&
         values_.cols() == other.values_.cols() && values_ == other.values_;
}

BirthKernel separable_envelope(const BirthKernel& beta, int n, EnvelopeSide side) {
  if (n < 1) throw ConfigError("envelope partition count must be >= 1");
  const double m = beta.domain_max();
  std::vector<double> s_breaks = beta.s_nodes();
  std::vector<double> y_breaks = beta.y_nodes();
  for (const auto& t : beta.terms()) {
    append_breaks(t.birth, s_breaks);
    append_breaks(t.parent, y_breaks);
  }

  std::vector<double> edges(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) edges[static_cast<std::size_t>(i)] = m * i / n;
  edges.back() = m;

  Eigen::MatrixXd ext(n, n);
  for (int i = 0; i < n; ++i) {
    const auto ss = cell_samples(edges[i], edges[i + 1], s_breaks);
    for (int j = 0; j < n; ++j) {
      const auto ys = cell_samples(edges[j], edges[j + 1], y_breaks);
      double best = side == EnvelopeSide::lower ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity();
      for (double s : ss) {
        for (double y : ys) {
          const double v = beta(s, y);
          best = side == EnvelopeSide::lower ? std::min(best, v) : std::max(best, v);
        }
      }
      ext(i, j) = best;
    }
  }

  std::vector<SeparableTerm> terms;
  terms.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    std::vector<double> birth(static_cast<std::size_t>(n));
    std::vector<double> indicator(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) birth[static_cast<std::size_t>(i)] = ext(i, j);
    indicator[static_cast<std::size_t>(j)] = 1.0;
    terms.push_back({CoefficientFn::table(edges, std::move(birth), Interpolation::step),
                     CoefficientFn::table(edges, std::move(indicator), Interpolation::step)});
  }
  return BirthKernel::separable(std::move(terms));
}

void ModelParams::validate() const {
  if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("m must be positive and finite");
  const auto same_domain = [this](const CoefficientFn& f, std::string_view name) {
    if (std::abs(f.domain_max() - m) > domain_slack(m)) {
      throw ConfigError(std::string(name) + " is defined on [0, " + fmt_num(f.domain_max()) +
                        "] but m = " + fmt_num(m));
    }
  };
  same_domain(gamma1, "gamma1");
  same_domain(gamma2, "gamma2");
  same_domain(mu, "mu");
  same_domain(c1, "c1");
  same_domain(c2, "c2");
  if (std::abs(beta.domain_max() - m) > domain_slack(m)) {
    throw ConfigError("beta is defined on [0, " + fmt_num(beta.domain_max()) + "]^2 but m = " +
                      fmt_num(m));
  }
  gamma1.validate(Role::growth, "gamma1");
  gamma2.validate(Role::growth, "gamma2");
  mu.validate(Role::rate, "mu");
  c1.validate(Role::rate, "c1");
  c2.validate(Role::rate, "c2");
  beta.validate();
}

double min_growth(const ModelParams& params, double s) {
  return std::min(params.gamma1(s), params.gamma2(s));
}

}  // namespace sspop
