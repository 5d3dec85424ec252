#include <cmath>
#include <limits>
#include <numbers>

#include "olap/error.hpp"
#include "olap/sampler.hpp"

namespace olap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sum_psi_or_inf(Family f, const Eigen::VectorXd& eta) {
  try {
    return sum_psi(f, eta.array());
  } catch (const OverflowError&) {
    return std::numeric_limits<double>::infinity();
  }
}

Eigen::VectorXd active_predictor(const Dataset& data, const Eigen::VectorXd& theta, const Support& delta) {
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(data.X.rows());
  for (auto j : delta.indices()) {
    eta.noalias() += theta(static_cast<Eigen::Index>(j)) * data.X.col(static_cast<Eigen::Index>(j));
  }
  return eta;
}

// theta-part of the log target at fixed delta and its gradient.
// Returns -inf (gradient untouched) on overflow.
double theta_log_density(const OlapModel& model, const Eigen::VectorXd& theta, const Support& delta,
                         double rho0, Eigen::VectorXd* grad) {
  const Dataset& data = model.data();
  const Eigen::VectorXd eta = active_predictor(data, theta, delta);
  LinkValues lv;
  try {
    lv = link_values(data.family, eta.array());
  } catch (const OverflowError&) {
    return kNegInf;
  }
  double on = 0.0, off = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    (delta.test(static_cast<std::size_t>(j)) ? on : off) += theta(j) * theta(j);
  }
  const double value = data.y.dot(eta) - lv.psi.sum() - 0.5 * on - 0.5 * rho0 * off;
  if (grad != nullptr) {
    const Eigen::VectorXd r = data.y - lv.mean.matrix();
    grad->resize(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      if (delta.test(static_cast<std::size_t>(j))) {
        (*grad)(j) = data.X.col(j).dot(r) - theta(j);
      } else {
        (*grad)(j) = -rho0 * theta(j);
      }
    }
  }
  return value;
}

double prob_from_log_odds(double log_odds) {
  if (log_odds >= 0) return 1.0 / (1.0 + std::exp(-log_odds));
  const double e = std::exp(log_odds);
  return e / (1.0 + e);
}

// Log odds for coordinate j from the current active predictor eta.
double inclusion_log_odds(const OlapModel& model, const Eigen::VectorXd& theta, const Support& delta,
                          std::size_t j, double rho0, const Eigen::VectorXd& eta) {
  const Dataset& data = model.data();
  const auto jj = static_cast<Eigen::Index>(j);
  const double tj = theta(jj);
  const Eigen::VectorXd diff = tj * data.X.col(jj);
  const Eigen::VectorXd eta0 = delta.test(j) ? Eigen::VectorXd(eta - diff) : eta;
  const Eigen::VectorXd eta1 = eta0 + diff;
  const double psi0 = sum_psi_or_inf(data.family, eta0);
  const double psi1 = sum_psi_or_inf(data.family, eta1);
  if (std::isinf(psi1) && std::isinf(psi0)) return 0.0;
  if (std::isinf(psi1)) return kNegInf;
  if (std::isinf(psi0)) return std::numeric_limits<double>::infinity();
  const double dl = data.y.dot(diff) - (psi1 - psi0);
  return -model.u() * model.log_p() - 0.5 * std::log(rho0) + 0.5 * (rho0 - 1.0) * tj * tj + dl;
}

}  // namespace

void DaConfig::validate() const {
  if (rho0 && !(*rho0 > 0.0)) throw ValidationError("rho0 must be > 0");
  if (mala_step && !(*mala_step > 0.0)) throw ValidationError("mala_step must be > 0");
  if (!(adapt_target > 0.0 && adapt_target < 1.0)) throw ValidationError("adapt_target must be in (0, 1)");
  if (thin < 1) throw ValidationError("thin must be >= 1");
}

double DaConfig::rho0_for(const Dataset& data) const {
  return rho0 ? *rho0 : static_cast<double>(data.n());
}

DaState::DaState(Eigen::VectorXd theta_, Support delta_, std::uint64_t seed)
    : theta(std::move(theta_)), delta(std::move(delta_)), rng(seed) {}

double da_log_target(const OlapModel& model, const Eigen::VectorXd& theta, const Support& delta,
                     double rho0) {
  const double k = static_cast<double>(delta.weight());
  const double p = static_cast<double>(model.p());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  return -model.u() * k * model.log_p() - 0.5 * k * log2pi + 0.5 * (p - k) * (std::log(rho0) - log2pi) +
         theta_log_density(model, theta, delta, rho0, nullptr);
}

double mala_log_accept_ratio(const OlapModel& model, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& proposal, const Support& delta, double h,
                             double rho0) {
  Eigen::VectorXd g0, g1;
  const double f0 = theta_log_density(model, theta, delta, rho0, &g0);
  const double f1 = theta_log_density(model, proposal, delta, rho0, &g1);
  if (f1 == kNegInf) return kNegInf;
  const double forward = (proposal - theta - 0.5 * h * g0).squaredNorm();
  const double backward = (theta - proposal - 0.5 * h * g1).squaredNorm();
  return f1 - f0 - (backward - forward) / (2.0 * h);
}

double da_inclusion_log_odds(const OlapModel& model, const Eigen::VectorXd& theta,
                             const Support& delta, std::size_t j, double rho0) {
  return inclusion_log_odds(model, theta, delta, j, rho0, active_predictor(model.data(), theta, delta));
}

void da_step(const OlapModel& model, DaState& state, const DaConfig& cfg) {
  const Dataset& data = model.data();
  const std::size_t p = model.p();
  if (state.theta.size() != static_cast<Eigen::Index>(p) || state.delta.size() != p) {
    throw DimensionError("da_step: state has wrong length");
  }
  if (!state.theta.allFinite()) throw ValidationError("da_step: theta must be finite");
  const double rho0 = cfg.rho0_for(data);

  Eigen::VectorXd eta = active_predictor(data, state.theta, state.delta);
  for (std::size_t j = 0; j < p; ++j) {
    const double lo = inclusion_log_odds(model, state.theta, state.delta, j, rho0, eta);
    const bool next = state.rng.uniform() < prob_from_log_odds(lo);
    if (next != state.delta.test(j)) {
      const double tj = state.theta(static_cast<Eigen::Index>(j));
      eta.noalias() += (next ? tj : -tj) * data.X.col(static_cast<Eigen::Index>(j));
      state.delta.set(j, next);
    }
  }

  const double h = std::exp(state.log_step);
  Eigen::VectorXd g;
  const double f0 = theta_log_density(model, state.theta, state.delta, rho0, &g);
  Eigen::VectorXd noise(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) noise(static_cast<Eigen::Index>(j)) = state.rng.normal();
  const Eigen::VectorXd prop = state.theta + 0.5 * h * g + std::sqrt(h) * noise;
  const double u = state.rng.uniform();

  double log_alpha = kNegInf;
  Eigen::VectorXd g1;
  const double f1 = theta_log_density(model, prop, state.delta, rho0, &g1);
  if (f1 != kNegInf && f0 != kNegInf) {
    const double forward = (prop - state.theta - 0.5 * h * g).squaredNorm();
    const double backward = (state.theta - prop - 0.5 * h * g1).squaredNorm();
    log_alpha = f1 - f0 - (backward - forward) / (2.0 * h);
  }
  ++state.proposed;
  if (std::log(u) < log_alpha) {
    state.theta = prop;
    ++state.accepted;
  }
  if (cfg.adapt && state.step < cfg.adapt_steps) {
    const double alpha = log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
    const double gamma = std::pow(static_cast<double>(state.step + 1), -0.6);
    state.log_step += gamma * (alpha - cfg.adapt_target);
  }
  ++state.step;
}

Trace run_da_chain(const OlapModel& model, const Eigen::VectorXd& theta0, const Support& delta0,
                   std::uint64_t steps, const DaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (delta0.size() != model.p() || static_cast<std::size_t>(theta0.size()) != model.p()) {
    throw DimensionError("run_da_chain: initial state has wrong length");
  }
  const double rho0 = cfg.rho0_for(model.data());
  DaState st(theta0, delta0, seed);
  st.log_step = std::log(cfg.mala_step ? *cfg.mala_step : 1.0 / (static_cast<double>(model.n()) + rho0));
  Trace tr(model.p());
  tr.push(0, st.delta, da_log_target(model, st.theta, st.delta, rho0));
  std::uint64_t acc_after = 0, prop_after = 0;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const std::uint64_t before = st.accepted;
    const bool frozen = !cfg.adapt || st.step >= cfg.adapt_steps;
    da_step(model, st, cfg);
    if (frozen) {
      ++prop_after;
      acc_after += st.accepted - before;
    }
    if (t % cfg.thin == 0) tr.push(t, st.delta, da_log_target(model, st.theta, st.delta, rho0));
  }
  tr.steps_run = steps;
  if (prop_after > 0) {
    tr.acceptance_rate = static_cast<double>(acc_after) / static_cast<double>(prop_after);
  } else if (st.proposed > 0) {
    tr.acceptance_rate = static_cast<double>(st.accepted) / static_cast<double>(st.proposed);
  }
  tr.final_step_size = std::exp(st.log_step);
  return tr;
}

}  // namespace olap
