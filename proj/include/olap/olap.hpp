#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "olap/glm.hpp"
#include "olap/support.hpp"

namespace olap {

inline constexpr double kDefaultU = 0.8;

/// Score of one model under the one-step Laplace approximation.
/// log_score = -u |delta|_0 log p + bar_ell, with bar_ell = bar_l(theta_check).
/// On poisson overflow both scores are -inf and theta_check holds NaNs.
struct ModelScore {
  Support delta;
  Eigen::VectorXd theta_check;
  double log_score = 0.0;
  double bar_ell = 0.0;
};

/// Thread-safe memo table from Support to ModelScore. Unbounded unless a
/// cap is given, in which case the least recently used entry is evicted.
class ScoreCache {
 public:
  explicit ScoreCache(std::optional<std::size_t> cap = std::nullopt);

  std::shared_ptr<const ModelScore> find(const Support& delta);
  /// Last writer wins; racing writers store identical values.
  void insert(std::shared_ptr<const ModelScore> score);
  void clear();
  std::size_t size() const;
  std::optional<std::size_t> cap() const { return cap_; }
  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }

 private:
  using Lru = std::list<Support>;
  struct Entry {
    std::shared_ptr<const ModelScore> score;
    Lru::iterator pos;
  };

  std::optional<std::size_t> cap_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<Support, Entry, SupportHash> map_;
  Lru lru_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

/// Dataset, sparsity parameter u and initial estimator theta_tilde, plus the
/// score cache. Read-only apart from the cache; share freely across chains.
class OlapModel {
 public:
  OlapModel(Dataset data, Eigen::VectorXd theta_tilde, double u = kDefaultU,
            std::optional<std::size_t> cache_cap = std::nullopt);

  const Dataset& data() const { return *data_; }
  std::shared_ptr<const Dataset> shared_data() const { return data_; }
  const Eigen::VectorXd& theta_tilde() const { return theta_tilde_; }
  double u() const { return u_; }
  std::size_t p() const { return data_->p(); }
  std::size_t n() const { return data_->n(); }
  Family family() const { return data_->family; }
  double log_p() const { return std::log(static_cast<double>(p())); }

  /// Cached score; computes and inserts on a miss.
  std::shared_ptr<const ModelScore> score(const Support& delta) const;
  /// Fresh computation that bypasses the cache.
  ModelScore compute_score(const Support& delta) const;

  ScoreCache& cache() const { return *cache_; }

  /// Same data and theta_tilde, different u, empty cache.
  OlapModel with_u(double u) const;

 private:
  std::shared_ptr<const Dataset> data_;
  Eigen::VectorXd theta_tilde_;
  double u_;
  std::shared_ptr<ScoreCache> cache_;
};

/// theta_tilde^delta + H^{-1} G at theta_tilde^delta (one Newton step).
/// Throws DiagnosticsError if the Cholesky factorisation fails.
Eigen::VectorXd one_step(const OlapModel& model, const Support& delta);

ModelScore olap_log_score(const OlapModel& model, const Support& delta);

/// P(delta_j = 1 | delta_{-j}) under the OLAP posterior; j is 0-based.
double cond_prob(const OlapModel& model, const Support& delta, std::size_t j);

/// q = 1 / (1 + exp(s0 - s1)) with the -inf conventions of the sampler.
double bernoulli_from_scores(double s1, double s0);

struct MleResult {
  Eigen::VectorXd theta;
  int iterations = 0;
  double grad_norm = 0.0;  // sup norm at the returned point
  bool converged = false;
};

/// Newton iteration with step halving on bar_l^delta until |grad|_inf <= tol.
MleResult mle_restricted(const OlapModel& model, const Support& delta, double tol = 1e-10,
                         int max_iter = 100);

/// -u k log p + bar_l(theta_hat) - 0.5 log det H(theta_hat).
double full_laplace_log_score(const OlapModel& model, const Support& delta);

/// Closed-form log marginal of delta for the gaussian family, computed from
/// A = X_d^T X_d + I and b = X_d^T y without any iteration:
///   -u k log p - 0.5 log det A + 0.5 b^T A^{-1} b.
/// Throws ValidationError for other families.
double exact_gaussian_log_marginal(const OlapModel& model, const Support& delta);

/// All 2^p models with normalised probabilities. Index = integer value of
/// the bit vector (bit j = coordinate j).
struct PosteriorTable {
  std::size_t p = 0;
  std::vector<double> log_score;
  std::vector<double> prob;
  double log_normalizer = 0.0;

  std::size_t size() const { return prob.size(); }
  Support state(std::size_t index) const { return Support::from_mask(p, index); }
  double probability(const Support& delta) const { return prob[delta.mask()]; }
  Eigen::VectorXd inclusion() const;
  std::size_t mode() const;
};

using ScoreFn = std::function<double(const Support&)>;

PosteriorTable enumerate_posterior(const OlapModel& model, std::size_t max_p = 20,
                                   std::size_t threads = 1);
/// Same, for an arbitrary log-score (e.g. full Laplace or the exact marginal).
PosteriorTable enumerate_scores(std::size_t p, const ScoreFn& log_score, std::size_t max_p = 20,
                                std::size_t threads = 1);

struct ConsistencyDiagnostic {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  std::size_t pairs_checked = 0;
  std::size_t irrelevant_pairs = 0;
  std::size_t relevant_pairs = 0;
  bool exhaustive = false;
  /// Relevant pairs (delta0, delta) whose gain is not positive.
  std::vector<std::pair<Support, Support>> violations;
  /// u >= 2 (1 + c1_hat)
  bool u_condition = false;
  std::vector<std::string> warnings;
};

ConsistencyDiagnostic consistency_diagnostic(const OlapModel& model, const Support& delta_star,
                                             std::size_t sample_size, std::uint64_t seed);

}  // namespace olap
