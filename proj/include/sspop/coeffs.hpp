#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sspop {

enum class Interpolation { linear, step };

namespace form {

struct Constant {
  double value = 0.0;
  bool operator==(const Constant&) const = default;
};

/// a + b*s
struct Linear {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const Linear&) const = default;
};

/// height * exp(-(s - center)^2 / (2 width^2))
struct GaussianBump {
  double center = 0.0;
  double width = 1.0;
  double height = 1.0;
  bool operator==(const GaussianBump&) const = default;
};

/// Tabulated samples. Linear tables hold one value per knot; step tables hold
/// one value per segment [k_i, k_{i+1}), the last segment closed at m.
struct Table {
  std::vector<double> knots;
  std::vector<double> values;
  Interpolation interpolation = Interpolation::linear;
  bool operator==(const Table&) const = default;
};

}  // namespace form

using Form = std::variant<form::Constant, form::Linear, form::GaussianBump, form::Table>;

/// What a coefficient stands for; decides the positivity check.
enum class Role {
  growth,  // strictly positive
  rate,    // nonnegative
};

/// Scalar function on [0, m]: growth speed, mortality, transfer rate or an
/// initial density. Immutable once built.
class CoefficientFn {
 public:
  /// constant(0) on [0, 1]
  CoefficientFn() = default;

  static CoefficientFn constant(double value, double m);
  static CoefficientFn linear(double a, double b, double m);
  static CoefficientFn gaussian_bump(double center, double width, double height, double m);
  /// Domain is [knots.front(), knots.back()]; knots.front() must be 0.
  static CoefficientFn table(std::vector<double> knots, std::vector<double> values,
                             Interpolation interpolation = Interpolation::linear);
  static CoefficientFn from_form(Form f, double m);

  double operator()(double s) const;

  /// Analytic for closed forms; for tables, the slope of the containing
  /// segment with the left segment taken at interior knots.
  double derivative(double s) const;

  /// Extrema over [0, m]. Exact for every form (the bump is unimodal).
  double sup_value() const;
  double inf_value() const;
  double sup_norm() const;

  double domain_max() const { return m_; }
  const Form& form() const { return form_; }

  /// Throws ConfigError naming `name` when the role's sign condition fails on
  /// a dense sample of [0, m].
  void validate(Role role, std::string_view name) const;

  bool operator==(const CoefficientFn&) const = default;

 private:
  CoefficientFn(Form f, double m);
  void check_domain(double s) const;

  Form form_;
  double m_ = 1.0;
};

/// Number of points used for sampled positivity checks.
inline constexpr int kValidationSamples = 1000;

/// Pair (b1, b2) in beta(s, y) = b1(s) * b2(y).
struct SeparableTerm {
  CoefficientFn birth;   // offspring-size factor, argument s
  CoefficientFn parent;  // parent-size factor, argument y
  bool operator==(const SeparableTerm&) const = default;
};

/// Fertility kernel beta(s, y): offspring of size s per parent of size y.
class BirthKernel {
 public:
  /// Empty kernel; fails validate().
  BirthKernel() = default;

  /// Tensor-grid samples values(i, j) = beta(s_nodes[i], y_nodes[j]),
  /// bilinear between nodes.
  static BirthKernel general(std::vector<double> s_nodes, std::vector<double> y_nodes,
                             Eigen::MatrixXd values);
  static BirthKernel separable(std::vector<SeparableTerm> terms);

  /// Samples `fn` on an n_nodes x n_nodes uniform tensor grid over [0, m]^2.
  template <typename Fn>
  static BirthKernel tabulate(Fn&& fn, double m, int n_nodes);

  double operator()(double s, double y) const;

  bool is_separable() const { return !terms_.empty(); }
  int rank() const { return static_cast<int>(terms_.size()); }
  const std::vector<SeparableTerm>& terms() const { return terms_; }
  const std::vector<double>& s_nodes() const { return s_nodes_; }
  const std::vector<double>& y_nodes() const { return y_nodes_; }
  const Eigen::MatrixXd& values() const { return values_; }
  double domain_max() const { return m_; }

  /// ||beta||_inf. Exact for tables (extrema sit on nodes); for separable sums
  /// the factor-wise bound sum_k sup b1_k * sup b2_k.
  double sup_value() const;

  /// Throws ConfigError unless beta >= 0 and beta is not identically zero.
  void validate() const;

  bool operator==(const BirthKernel& other) const;

 private:
  double m_ = 1.0;
  std::vector<SeparableTerm> terms_;
  std::vector<double> s_nodes_;
  std::vector<double> y_nodes_;
  Eigen::MatrixXd values_;
};

enum class EnvelopeSide { lower, upper };

/// Piecewise-constant bound of `beta` on an n x n partition of [0, m]^2,
/// returned as a rank-n separable sum: term j is
/// (sum_i ext_ij * 1_{I_i}(s), 1_{J_j}(y)) with ext_ij the sampled extremum of
/// beta over cell (I_i, J_j).
BirthKernel separable_envelope(const BirthKernel& beta, int n, EnvelopeSide side);

/// Parameter bundle of the two-phase size-structured model.
struct ModelParams {
  CoefficientFn gamma1;  // growth speed, active phase
  CoefficientFn gamma2;  // growth speed, resting phase
  CoefficientFn mu;      // mortality, active phase
  CoefficientFn c1;      // active -> resting transfer
  CoefficientFn c2;      // resting -> active transfer
  BirthKernel beta;
  double m = 1.0;

  /// Checks every model assumption; throws ConfigError on the first failure.
  void validate() const;

  double birth_bound() const { return beta.sup_value(); }
  double transfer_bound() const { return std::max(c1.sup_norm(), c2.sup_norm()); }

  bool operator==(const ModelParams&) const = default;
};

/// min(gamma1(s), gamma2(s))
double min_growth(const ModelParams& params, double s);

template <typename Fn>
BirthKernel BirthKernel::tabulate(Fn&& fn, double m, int n_nodes) {
  std::vector<double> nodes(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    nodes[static_cast<std::size_t>(i)] = m * i / (n_nodes - 1);
  }
  nodes.back() = m;
  Eigen::MatrixXd values(n_nodes, n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = 0; j < n_nodes; ++j) {
      values(i, j) = fn(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]);
    }
  }
  return general(nodes, nodes, std::move(values));
}

}  // namespace sspop
