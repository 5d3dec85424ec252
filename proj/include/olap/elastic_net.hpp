#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "olap/glm.hpp"
#include "olap/support.hpp"

namespace olap {

struct NetConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tol = 1e-7;  // KKT tolerance, in the units of the unscaled gradient
  int max_iter = 10000;
  double support_tol = 1e-8;
  /// Rescale columns to unit root-mean-square for the solve. The penalty is
  /// rescaled with them, so the minimiser is unchanged; only conditioning is.
  bool standardize = true;
  /// Unpenalised intercept. Off by default: the model has none.
  bool intercept = false;
  /// Number of threads for cross-validation folds (0 = hardware default).
  std::size_t threads = 1;

  void validate() const;
};

struct NetResult {
  Eigen::VectorXd theta_tilde;
  double intercept = 0.0;
  double kkt_violation = 0.0;
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
  /// Objective after every outer iteration, starting with the initial point.
  std::vector<double> objective_trace;
};

/// sum_i [psi(eta_i) - y_i eta_i] + lambda1 |theta|_1 + lambda2/2 |theta|^2,
/// eta = X theta + intercept.
double net_objective(const Dataset& data, const Eigen::VectorXd& theta, double intercept,
                     const NetConfig& cfg);

/// Max over coordinates of the distance from 0 to the subdifferential of
/// net_objective.
double net_kkt_violation(const Dataset& data, const Eigen::VectorXd& theta, double intercept,
                         const NetConfig& cfg);

/// Proximal Newton: IRLS quadratic model, cyclic coordinate descent with an
/// active set on the model, then backtracking on the true objective.
/// Never throws for non-convergence; inspect `converged`.
NetResult fit_elastic_net(const Dataset& data, const NetConfig& cfg,
                          const NetResult* warm_start = nullptr);

/// Smallest lambda1 for which theta = 0 is optimal (no intercept):
/// |X^T (y - psi'(0))|_inf.
double lambda_max(const Dataset& data);

/// Descending log-spaced grid from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(const Dataset& data, std::size_t count, double ratio);

/// Deviance of y against the linear predictor eta (2 x log-likelihood gap to
/// the saturated model).
double deviance(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& eta);

struct CvResult {
  NetConfig config;
  std::vector<double> lambdas;        // deduplicated grid actually used
  std::vector<double> mean_deviance;  // per lambda, over the folds kept
  std::vector<std::size_t> folds_used;
  std::vector<std::string> warnings;
};

/// K-fold cross-validation over a descending lambda1 grid. Folds are
/// stratified by class for logistic data. Picks the minimum mean held-out
/// deviance; ties go to the larger lambda1. Deterministic given seed.
CvResult cv_select(const Dataset& data, Family family, int folds,
                   const std::vector<double>& lambda1_grid, double lambda2, std::uint64_t seed,
                   const NetConfig& base = {});

/// Bit j set iff |theta_j| > support_tol.
Support support_of(const NetResult& result, double support_tol);

}  // namespace olap
