#include "olap/simulate.hpp"

#include <cmath>
#include <random>

#include "olap/error.hpp"

namespace olap {

void SimConfig::validate() const {
  if (n < 1 || p < 1) throw ValidationError("simulation needs n >= 1 and p >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("rho must be in [0, 1)");
  if (s_star > p) throw ValidationError("s_star must not exceed p");
  if (!(signal_low >= 0.0 && signal_low <= signal_high)) {
    throw ValidationError("need 0 <= signal_low <= signal_high");
  }
  if (!(max_log_rate > 0.0)) throw ValidationError("max_log_rate must be > 0");
}

Eigen::MatrixXd simulate_design(std::size_t n, std::size_t p, double rho, Rng& rng) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const double innov = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double prev = rng.normal();
    X(i, 0) = prev;
    for (Eigen::Index j = 1; j < X.cols(); ++j) {
      prev = rho * prev + innov * rng.normal();
      X(i, j) = prev;
    }
  }
  return X;
}

Eigen::VectorXd simulate_theta(const SimConfig& cfg, Rng& rng) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.p));
  for (std::size_t j = 0; j < cfg.s_star; ++j) {
    const double mag = cfg.signal_low + (cfg.signal_high - cfg.signal_low) * rng.uniform();
    theta(static_cast<Eigen::Index>(j)) = rng.uniform() < 0.5 ? -mag : mag;
  }
  return theta;
}

Eigen::VectorXd simulate_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta, Family family,
                                  Rng& rng) {
  const Eigen::VectorXd eta = X * theta;
  Eigen::VectorXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    switch (family) {
      case Family::logistic:
        y(i) = rng.uniform() < link_eval(family, eta(i), 1) ? 1.0 : 0.0;
        break;
      case Family::poisson: {
        std::poisson_distribution<long long> pois(std::exp(eta(i)));
        y(i) = static_cast<double>(pois(rng));
        break;
      }
      case Family::gaussian:
        y(i) = eta(i) + rng.normal();
        break;
    }
  }
  return y;
}

Simulation simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Simulation sim;
  Eigen::MatrixXd X = simulate_design(cfg.n, cfg.p, cfg.rho, rng);
  Eigen::VectorXd theta = simulate_theta(cfg, rng);
  if (cfg.family == Family::poisson) {
    int attempt = 1;
    while ((X * theta).cwiseAbs().maxCoeff() > cfg.max_log_rate) {
      if (attempt == 10) {
        throw OverflowError("poisson simulation: linear predictor exceeds max_log_rate = " +
                            std::to_string(cfg.max_log_rate) + " after 10 draws of theta_star");
      }
      theta = simulate_theta(cfg, rng);
      ++attempt;
    }
  }
  Eigen::VectorXd y = simulate_response(X, theta, cfg.family, rng);
  sim.data = make_dataset(std::move(X), std::move(y), cfg.family);
  sim.theta_star = theta;
  sim.delta_star = Support(cfg.p);
  for (std::size_t j = 0; j < cfg.s_star; ++j) sim.delta_star.set(j, true);
  return sim;
}

Dataset simulate_test_set(const SimConfig& cfg, const Eigen::VectorXd& theta_star, std::size_t n,
                          std::uint64_t seed) {
  cfg.validate();
  if (static_cast<std::size_t>(theta_star.size()) != cfg.p) throw DimensionError("theta_star has wrong length");
  Rng rng(seed);
  Eigen::MatrixXd X = simulate_design(n, cfg.p, cfg.rho, rng);
  Eigen::VectorXd y = simulate_response(X, theta_star, cfg.family, rng);
  return make_dataset(std::move(X), std::move(y), cfg.family);
}

}  // namespace olap
