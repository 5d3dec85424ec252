#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "olap/olap.hpp"
#include "olap/rng.hpp"
#include "olap/support.hpp"

namespace olap {

enum class InitKind { null_model, lasso, truth_plus, posterior, fixed };

std::string to_string(InitKind k);
InitKind init_kind_from_string(const std::string& s);

/// Draws initial states for coupled chains.
///   null_model: the empty model
///   lasso / fixed: the stored support
///   truth_plus: the stored truth plus `false_positives` random extra coordinates
///   posterior: a draw from an enumerated posterior (small p)
struct InitSampler {
  InitKind kind = InitKind::null_model;
  std::size_t p = 0;
  Support base;
  std::size_t false_positives = 0;
  std::vector<double> table;  // probabilities by state index for `posterior`

  static InitSampler null_model(std::size_t p);
  static InitSampler lasso(Support support);
  static InitSampler fixed(Support support);
  static InitSampler truth_plus(Support truth, std::size_t false_positives);
  static InitSampler posterior(const PosteriorTable& table);

  Support draw(Rng& rng) const;
};

struct MeetingRecord {
  std::uint64_t tau = 0;
  std::uint64_t L = 1;
  std::uint64_t seed = 0;
  Support delta0_x;
  Support delta0_y;
  bool censored = false;
  InitKind init_kind = InitKind::null_model;
};

/// Shared ordered subset and one shared uniform per coordinate; each bit is
/// set to 1{U < q} with the chain's own q. Equal inputs stay equal.
/// Consumes exactly 2J draws from rng, like gibbs_step.
void coupled_gibbs_step(const OlapModel& model, Support& x, Support& y, std::size_t J, Rng& rng,
                        std::vector<std::size_t>& perm);

struct CouplingOptions {
  std::uint64_t L = 1;
  std::size_t J = 1;
  std::uint64_t max_steps = 100000;
  /// Joint steps run after meeting to assert that the chains stay together.
  std::uint64_t faithfulness_steps = 0;
};

/// X runs alone for L steps, then (X, Y) move jointly until the first
/// t >= L with X_t = Y_{t-L}. Records past max_steps are censored.
MeetingRecord l_lag_meeting_time(const OlapModel& model, const InitSampler& init,
                                 const CouplingOptions& opts, std::uint64_t seed);

/// Record i uses seed Rng::split_seed(master_seed, i); order is by i.
std::vector<MeetingRecord> meeting_records(const OlapModel& model, const InitSampler& init,
                                           const CouplingOptions& opts, std::size_t count,
                                           std::uint64_t master_seed, std::size_t threads = 1);

struct TvBound {
  Eigen::VectorXd d_hat;  // t = 0..t_max
  std::size_t used = 0;
  std::size_t censored = 0;
  std::vector<std::string> warnings;
};

/// d_hat(t) = mean over records of max(0, ceil((tau - L - t) / L)).
TvBound tv_bound_curve(const std::vector<MeetingRecord>& records, std::size_t t_max);

struct MixingEstimate {
  std::size_t t = 0;
  bool reached = false;
};

/// Smallest t with curve(t) <= threshold, or curve.size() (= t_max + 1)
/// with reached = false.
MixingEstimate mixing_time_estimate(const Eigen::VectorXd& curve, double threshold = 0.25);

}  // namespace olap
