#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "olap/glm.hpp"
#include "olap/rng.hpp"
#include "olap/support.hpp"

namespace olap {

struct SimConfig {
  std::size_t n = 200;
  std::size_t p = 500;
  double rho = 0.0;  // lag-one correlation of the AR(1) design
  std::size_t s_star = 10;
  double signal_low = 2.0;
  double signal_high = 3.0;
  Family family = Family::logistic;
  std::uint64_t seed = 1;
  /// Poisson only: largest allowed |linear predictor| before theta_star is redrawn.
  double max_log_rate = 30.0;

  void validate() const;
};

struct Simulation {
  Dataset data;
  Eigen::VectorXd theta_star;
  Support delta_star;
};

/// Rows follow x_1 ~ N(0,1), x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j, so the
/// covariance is rho^|j-k| exactly.
Eigen::MatrixXd simulate_design(std::size_t n, std::size_t p, double rho, Rng& rng);

/// First s_star coordinates with magnitudes uniform in (low, high) and
/// random signs; zeros elsewhere.
Eigen::VectorXd simulate_theta(const SimConfig& cfg, Rng& rng);

Eigen::VectorXd simulate_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta, Family family,
                                  Rng& rng);

/// Poisson: theta_star is redrawn up to 10 times if the linear predictor
/// leaves [-max_log_rate, max_log_rate]; then OverflowError.
Simulation simulate(const SimConfig& cfg);

/// Fresh rows (design and response) from the same law, for test-set metrics.
Dataset simulate_test_set(const SimConfig& cfg, const Eigen::VectorXd& theta_star, std::size_t n,
                          std::uint64_t seed);

}  // namespace olap
