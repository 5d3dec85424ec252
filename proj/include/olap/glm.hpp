#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "olap/support.hpp"

namespace olap {

/// Cumulant function psi of the GLM log-likelihood
///   l(theta) = sum_i y_i <theta, x_i> - psi(<theta, x_i>).
///
/// logistic: psi(x) = log(1 + e^x)
/// poisson:  psi(x) = e^x
/// gaussian: psi(x) = x^2 / 2   (unit noise variance)
enum class Family { logistic, poisson, gaussian };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

/// |linear predictor| beyond which the poisson exponential is refused.
inline constexpr double kPoissonClamp = 700.0;

/// Self-concordance constant c3 with |psi'''| <= c3 psi''.
double self_concordance_constant(Family f);

/// d^order psi / dx^order at x, order in {0,1,2,3}.
/// Throws OverflowError for poisson when |x| > clamp.
double link_eval(Family f, double x, int order, double clamp = kPoissonClamp);

/// Vectorised psi and its first two derivatives at the linear predictors eta.
struct LinkValues {
  Eigen::ArrayXd psi;
  Eigen::ArrayXd mean;      // psi'
  Eigen::ArrayXd variance;  // psi''
};
LinkValues link_values(Family f, const Eigen::ArrayXd& eta, double clamp = kPoissonClamp);

/// Sum of psi(eta_i). Throws OverflowError (poisson).
double sum_psi(Family f, const Eigen::ArrayXd& eta, double clamp = kPoissonClamp);

/// Design X (n x p), response y and family. Immutable once validated.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Family family = Family::gaussian;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  /// max_ij |x_ij|
  double max_abs_x() const;
  /// Throws ValidationError when sizes, finiteness or response domain are off.
  void validate() const;
};

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y, Family family);

/// Columns of X selected by delta, in increasing index order.
Eigen::MatrixXd active_columns(const Dataset& data, const Support& delta);

double log_lik(const Dataset& data, const Eigen::VectorXd& theta);

/// Penalised restricted log-likelihood
///   bar_l(w) = l((w, 0)_delta) - |w|^2 / 2
/// with X_delta formed once. Value, gradient and negated Hessian share it.
class RestrictedProblem {
 public:
  RestrictedProblem(const Dataset& data, const Support& delta);

  std::size_t dim() const { return static_cast<std::size_t>(Xd_.cols()); }
  const Eigen::MatrixXd& design() const { return Xd_; }

  double value(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  /// X_d^T diag(psi''(X_d w)) X_d + I
  Eigen::MatrixXd neg_hessian(const Eigen::VectorXd& w) const;

  struct Eval {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd neg_hessian;
  };
  /// All three from one pass over the linear predictor.
  Eval evaluate(const Eigen::VectorXd& w, bool with_hessian = true) const;

 private:
  void check(const Eigen::VectorXd& w) const;

  const Dataset* data_;
  Eigen::MatrixXd Xd_;
};

double restricted_objective(const Dataset& data, const Support& delta, const Eigen::VectorXd& w);
Eigen::VectorXd restricted_grad(const Dataset& data, const Support& delta, const Eigen::VectorXd& w);
Eigen::MatrixXd restricted_hess(const Dataset& data, const Support& delta, const Eigen::VectorXd& w);

struct SelfConcordanceReport {
  double max_ratio = 0.0;
  bool pass = false;
};

/// max over the grid of |psi'''(x)| / psi''(x); passes iff <= c3.
SelfConcordanceReport self_concordance_check(Family f, const Eigen::VectorXd& grid, double c3);

struct RemainderReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// Third-order Taylor remainder of psi against (c3/6)|h|^3 e^{c3|h|} psi''(u).
RemainderReport remainder_bound_check(Family f, double u, double h, double c3);

}  // namespace olap
