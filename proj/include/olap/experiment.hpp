#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "olap/coupling.hpp"
#include "olap/metrics.hpp"
#include "olap/simulate.hpp"

namespace olap {

inline constexpr int kExperimentSchemaVersion = 1;

struct CvSettings {
  int folds = 5;
  std::size_t grid_size = 40;
  double grid_ratio = 0.01;
  double lambda2 = 0.0;
  /// Skips cross-validation when set.
  std::optional<double> lambda1;
};

struct MixingSettings {
  bool enabled = false;
  std::size_t records = 30;
  std::uint64_t L = 1;
  std::size_t J = 0;  // 0: use the experiment's J
  std::uint64_t max_steps = 100000;
  double threshold = 0.25;
  /// Use the estimated mixing time as burn-in when it is reached.
  bool use_for_burnin = false;
};

struct DaSettings {
  bool enabled = false;
  std::uint64_t steps = 5000;
  std::optional<double> rho0;
};

struct ExperimentConfig {
  int schema_version = kExperimentSchemaVersion;
  SimConfig sim;
  std::size_t replications = 10;
  std::uint64_t master_seed = 1;
  double u = 0.8;
  std::size_t J = 100;
  std::uint64_t steps = 2000;
  double burnin_fraction = 0.5;
  InitKind init = InitKind::lasso;
  std::size_t false_positives = 10;  // truth_plus only
  CvSettings cv;
  MixingSettings mixing;
  DaSettings da;
  std::size_t test_n = 0;  // 0: no test set, RMSE is skipped
  std::size_t threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Per-replication seeds: Rng::split_seed(master_seed, r); sub-streams of a
/// replication use Rng::split_seed(replication_seed, k) with k below.
enum class SeedStream : std::uint64_t { simulation = 0, cv = 1, chain = 2, test = 3, mixing = 4, da = 5 };
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t replication);
std::uint64_t stream_seed(std::uint64_t replication_seed, SeedStream stream);

struct ReplicationRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double lambda1 = 0.0;
  std::size_t lasso_size = 0;
  double f1_median = 0.0;
  double f1_modal = 0.0;
  double f1_lasso = 0.0;
  double rmse = 0.0;  // NaN when no test set
  std::size_t median_size = 0;
  std::uint64_t burnin = 0;
  std::string burnin_source;  // "fraction" or "mixing"
  std::optional<std::size_t> mixing_time;
  std::optional<bool> mixing_reached;
  std::optional<double> da_f1;
  std::optional<double> da_acceptance;
  double seconds = 0.0;  // timing only, never part of the deterministic body
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicationRow> rows;
  std::map<std::string, Summary> summaries;
  bool complete = true;
  double total_seconds = 0.0;
};

ReplicationRow run_replication(const ExperimentConfig& cfg, std::size_t index);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Recomputes the summaries from the rows (failed rows are skipped).
std::map<std::string, Summary> summarize_rows(const std::vector<ReplicationRow>& rows);

}  // namespace olap
