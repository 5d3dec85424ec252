#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "olap/olap.hpp"
#include "olap/rng.hpp"
#include "olap/support.hpp"

namespace olap {

inline constexpr std::size_t kDefaultJ = 100;

/// Current model, step counter and generator of one chain. `perm` is the
/// Fisher-Yates scratch; it is part of the state because the partial
/// shuffle continues from the previous arrangement.
struct ChainState {
  ChainState(Support start, std::uint64_t seed);

  Support delta;
  std::uint64_t step = 0;
  Rng rng;
  std::vector<std::size_t> perm;
};

/// Sampled models, packed `stride` words per entry.
struct Trace {
  std::size_t p = 0;
  std::size_t stride = 0;
  std::uint64_t steps_run = 0;
  std::vector<std::uint64_t> step;
  std::vector<std::uint64_t> bits;
  std::vector<double> log_score;
  /// Wall-clock seconds spent producing each entry (empty unless timed).
  std::vector<double> seconds;
  /// MaLA acceptance rate and final step size (data-augmentation chains only).
  double acceptance_rate = std::numeric_limits<double>::quiet_NaN();
  double final_step_size = std::numeric_limits<double>::quiet_NaN();

  explicit Trace(std::size_t p = 0);
  std::size_t size() const { return step.size(); }
  Support at(std::size_t i) const;
  void push(std::uint64_t at_step, const Support& delta, double score);
};

/// Counts of each model among entries with step >= burnin. The counts sum
/// to the number of such entries.
std::unordered_map<Support, std::size_t, SupportHash> visit_counts(const Trace& trace,
                                                                   std::uint64_t burnin = 0);

/// One iteration of the random-scan Gibbs sampler: a uniformly random
/// ordered J-subset by partial Fisher-Yates, then J sequential Bernoulli
/// updates from cond_prob. Consumes exactly 2J generator draws.
void gibbs_step(const OlapModel& model, ChainState& state, std::size_t J);

struct ChainOptions {
  std::size_t J = kDefaultJ;
  std::size_t thin = 1;
  bool record_timing = false;
};

/// Records delta^0 at step 0 and then every `thin`-th state.
Trace run_chain(const OlapModel& model, const Support& delta0, std::uint64_t steps,
                std::uint64_t seed, const ChainOptions& opts = {});

/// Fraction of entries with step >= burnin that include each coordinate.
Eigen::VectorXd inclusion_probs(const Trace& trace, std::uint64_t burnin);

// ---------------------------------------------------------------------------
// Data-augmentation sampler over (delta, theta).

struct DaConfig {
  /// Pseudo-prior precision for inactive coordinates; n when unset.
  std::optional<double> rho0;
  /// Initial MaLA step size h; 1 / (n + rho0) when unset.
  std::optional<double> mala_step;
  double adapt_target = 0.57;
  bool adapt = true;
  /// Robbins-Monro updates of log h stop after this many steps.
  std::uint64_t adapt_steps = 1000;
  std::size_t thin = 1;

  void validate() const;
  double rho0_for(const Dataset& data) const;
};

struct DaState {
  DaState(Eigen::VectorXd theta, Support delta, std::uint64_t seed);

  Eigen::VectorXd theta;
  Support delta;
  Rng rng;
  double log_step = 0.0;  // log h
  std::uint64_t step = 0;
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
};

/// log target of (delta, theta) up to a constant:
///   -u k log p - k/2 log(2 pi) + (p-k)/2 log(rho0 / 2 pi)
///   - |theta_d|^2 / 2 - rho0/2 |theta_{d^c}|^2 + l(theta_d).
double da_log_target(const OlapModel& model, const Eigen::VectorXd& theta, const Support& delta,
                     double rho0);

/// Log Metropolis-Hastings ratio of a MaLA move theta -> proposal at fixed
/// delta with step h. Returns -inf if the proposal overflows.
double mala_log_accept_ratio(const OlapModel& model, const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& proposal, const Support& delta, double h,
                             double rho0);

/// Systematic sweep over delta_j (j = 0..p-1) from its exact conditional,
/// then one MaLA update of theta. Adapts the step while state.step <
/// cfg.adapt_steps.
void da_step(const OlapModel& model, DaState& state, const DaConfig& cfg);

/// Log odds of delta_j = 1 against delta_j = 0 given theta and delta_{-j}.
double da_inclusion_log_odds(const OlapModel& model, const Eigen::VectorXd& theta,
                             const Support& delta, std::size_t j, double rho0);

Trace run_da_chain(const OlapModel& model, const Eigen::VectorXd& theta0, const Support& delta0,
                   std::uint64_t steps, const DaConfig& cfg, std::uint64_t seed);

}  // namespace olap
