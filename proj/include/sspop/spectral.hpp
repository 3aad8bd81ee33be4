#pragma once

#include "sspop/coeffs.hpp"
#include "sspop/errors.hpp"
#include "sspop/solver.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace sspop {

enum class SpectralMethod {
  closed_form,
  quadrature_bisection,
  rank_n_determinant,
  generator_power_iteration,
};

std::string_view to_string(SpectralMethod method);

struct SpectralResult {
  double lambda_star = 0.0;
  /// Net reproduction number: K(0) for rank one, rho(M(0)) for rank n.
  double k_at_zero = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  SpectralMethod method = SpectralMethod::quadrature_bisection;
  int iterations = 0;
};

/// 4-point Gauss-Legendre rule on [-1, 1].
template <typename Scalar = double>
struct GaussLegendre4 {
  static constexpr std::array<Scalar, 4> nodes{
      Scalar(-0.86113631159405257522), Scalar(-0.33998104358485626480),
      Scalar(0.33998104358485626480), Scalar(0.86113631159405257522)};
  static constexpr std::array<Scalar, 4> weights{
      Scalar(0.34785484513745385737), Scalar(0.65214515486254614263),
      Scalar(0.65214515486254614263), Scalar(0.34785484513745385737)};
};

struct QuadratureOptions {
  /// Composite Gauss-Legendre panels per dimension.
  int panels = 64;
};

/// Characteristic matrix of the active-phase operator with a rank-n separable
/// birth kernel sum_k b1_k(s) b2_k(y):
///
///   M_jk(lambda) = int_0^m b2_j(s) int_0^s b1_k(y)/gamma1(y)
///                  * exp(-(E(s) - E(y))) dy ds,
///   E(s) = int_0^s (lambda + mu + c1 + gamma1') / gamma1 dr.
///
/// lambda is an eigenvalue iff det(I - M(lambda)) = 0. All lambda-independent
/// samples are precomputed; matrix() is cheap to call repeatedly.
class CharMatrix {
 public:
  explicit CharMatrix(const ModelParams& params, QuadratureOptions options = {});

  int rank() const { return rank_; }

  /// May contain +inf when the exponent overflows (very negative lambda).
  Eigen::MatrixXd operator()(double lambda) const;

 private:
  struct Node {
    double weight;
    double g;  // int_0^y 1/gamma1
    double h;  // int_0^y (mu + c1 + gamma1')/gamma1
  };

  int rank_ = 0;
  std::vector<Node> outer_;
  Eigen::MatrixXd outer_parent_;  // b2_j at outer nodes (node x term)
  // Inner nodes of outer node a: outer nodes [0, 4*panel(a)) followed by the
  // four partial-panel nodes stored at partial_[4a .. 4a+3].
  std::vector<Node> partial_;
  Eigen::MatrixXd outer_birth_;    // b1_k / gamma1 at outer nodes
  Eigen::MatrixXd partial_birth_;  // b1_k / gamma1 at partial nodes
};

/// K(lambda) for a rank-one separable kernel. Throws MethodError for other
/// kernels and NumericalError on a non-finite result.
double k_of_lambda(const ModelParams& params, double lambda, QuadratureOptions options = {});

/// Unique real root of K(lambda) = 1: bracket expansion from [-1, 1] then
/// bisection down to width tol.
SpectralResult solve_lambda_star(const ModelParams& params, double tol,
                                 QuadratureOptions options = {});

/// Closed form of K for constant gamma1, mu, c1 and constant rank-one factors;
/// throws MethodError otherwise.
double k_closed_form(const ModelParams& params, double lambda);
SpectralResult solve_lambda_star_closed_form(const ModelParams& params, double tol);

Eigen::MatrixXd rank_n_char_matrix(const ModelParams& params, double lambda,
                                   QuadratureOptions options = {});

double spectral_radius(const Eigen::MatrixXd& m);

/// Largest real root of det(I - M(lambda)), scanning down from a lambda where
/// rho(M) < 1 in steps of 0.5, then bisecting.
SpectralResult solve_rank_n_root(const ModelParams& params, double tol,
                                 QuadratureOptions options = {});

/// Semi-discrete generator on (u1, u2): upwind transport plus reaction and
/// birth, exactly the right-hand side the splitting integrator advances.
Eigen::MatrixXd generator_matrix(const ModelParams& params, const Grid& grid);
Eigen::MatrixXd generator_matrix(const Discretization& disc);

template <typename Scalar>
struct EigenPair {
  Scalar value{};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
  int iterations = 0;
};

/// Dominant eigenpair of a Metzler matrix by power iteration on A + sigma I,
/// sigma = |min diag| + 1, which is entrywise nonnegative. The returned vector
/// is nonnegative with unit L1 norm.
template <typename Derived>
EigenPair<typename Derived::Scalar> dominant_eigenpair(const Eigen::MatrixBase<Derived>& a,
                                                       typename Derived::Scalar tol,
                                                       int max_iterations = 100000) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols() || a.rows() == 0) throw ConfigError("dominant_eigenpair: matrix must be square");
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) < Scalar(0)) {
        throw MethodError("dominant_eigenpair: negative off-diagonal entry, matrix is not Metzler");
      }
    }
  }

  const Scalar sigma = std::abs(a.diagonal().minCoeff()) + Scalar(1);
  Matrix shifted = a;
  shifted.diagonal().array() += sigma;

  const Eigen::Index n = a.rows();
  Vector v = Vector::Constant(n, Scalar(1) / Scalar(n));
  Scalar previous = std::numeric_limits<Scalar>::quiet_NaN();
  for (int it = 1; it <= max_iterations; ++it) {
    Vector w = shifted * v;
    const Scalar rho = w.sum();  // v sums to one
    if (!(rho > Scalar(0)) || !std::isfinite(static_cast<double>(rho))) {
      throw NumericalError("dominant_eigenpair: iteration collapsed");
    }
    const Scalar value = rho - sigma;
    const Scalar residual = (w - rho * v).template lpNorm<1>();
    if (std::abs(value - previous) < tol && residual < tol) {
      return {value, v, it};
    }
    previous = value;
    v = w / rho;
  }
  throw ConvergenceError("dominant_eigenpair: no convergence after " +
                         std::to_string(max_iterations) + " iterations");
}

/// dominant_eigenpair of the generator matrix, reported as a SpectralResult.
SpectralResult generator_spectral_bound(const ModelParams& params, const Grid& grid, double tol);

}  // namespace sspop
