#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "olap/chain_analysis.hpp"
#include "olap/coupling.hpp"
#include "olap/experiment.hpp"
#include "olap/metrics.hpp"
#include "olap/olap.hpp"
#include "olap/sampler.hpp"

namespace olap {

/// Finite numbers as JSON numbers; inf/-inf/nan as the strings "inf", "-inf", "nan".
nlohmann::json json_number(double x);
double number_from_json(const nlohmann::json& j);

nlohmann::json support_json(const Support& delta);  // 1-based indices

nlohmann::json posterior_json(const PosteriorTable& table);
/// One JSON object per recorded step: {"step", "delta" (1-based), "log_score"}.
void write_trace_jsonl(const std::string& path, const Trace& trace);

nlohmann::json record_json(const MeetingRecord& r);
/// Columns: seed, L, tau, censored, init_kind.
void write_records_csv(const std::string& path, const std::vector<MeetingRecord>& records);
/// Columns: t, d_hat.
void write_curve_csv(const std::string& path, const Eigen::VectorXd& curve);

nlohmann::json bounds_json(const BoundsReport& report);
nlohmann::json consistency_json(const ConsistencyDiagnostic& diag);

/// {"delta": [...], "weight": w, "theta_check": [...]} per model.
nlohmann::json models_json(const std::vector<WeightedModel>& models);
std::vector<WeightedModel> models_from_json(const nlohmann::json& j, std::size_t p);

/// Deterministic part of an experiment report: config, rows and summaries.
nlohmann::json experiment_body_json(const ExperimentReport& report);
/// {"header": ..., "body": ..., "timing": ...}; only the timing block varies between reruns.
nlohmann::json experiment_report_json(const ExperimentReport& report);
/// One line per replication.
void write_experiment_csv(const std::string& path, const ExperimentReport& report);

void write_text(const std::string& path, const std::string& text);

}  // namespace olap
