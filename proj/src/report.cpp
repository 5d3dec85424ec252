#include "olap/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "olap/dataset_io.hpp"
#include "olap/error.hpp"

namespace olap {

using nlohmann::json;

json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ValidationError("expected a number, got " + j.dump());
}

json support_json(const Support& delta) { return delta.one_based(); }

json posterior_json(const PosteriorTable& table) {
  json models = json::array();
  for (std::size_t i = 0; i < table.size(); ++i) {
    models.push_back({{"delta", support_json(table.state(i))},
                      {"log_score", json_number(table.log_score[i])},
                      {"prob", json_number(table.prob[i])}});
  }
  json inc = json::array();
  const Eigen::VectorXd pi = table.inclusion();
  for (Eigen::Index j = 0; j < pi.size(); ++j) inc.push_back(json_number(pi(j)));
  return {{"p", table.p},
          {"log_normalizer", json_number(table.log_normalizer)},
          {"mode", support_json(table.state(table.mode()))},
          {"inclusion", inc},
          {"models", models}};
}

void write_trace_jsonl(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    json line = {{"step", trace.step[i]}, {"delta", support_json(trace.at(i))},
                 {"log_score", json_number(trace.log_score[i])}};
    out << line.dump() << '\n';
  }
}

json record_json(const MeetingRecord& r) {
  return {{"seed", r.seed},           {"L", r.L},
          {"tau", r.tau},             {"censored", r.censored},
          {"init_kind", to_string(r.init_kind)}, {"delta0_x", support_json(r.delta0_x)},
          {"delta0_y", support_json(r.delta0_y)}};
}

void write_records_csv(const std::string& path, const std::vector<MeetingRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "seed,L,tau,censored,init_kind\n";
  for (const auto& r : records) {
    out << r.seed << ',' << r.L << ',' << r.tau << ',' << (r.censored ? 1 : 0) << ',' << to_string(r.init_kind)
        << '\n';
  }
}

void write_curve_csv(const std::string& path, const Eigen::VectorXd& curve) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "t,d_hat\n";
  for (Eigen::Index t = 0; t < curve.size(); ++t) out << t << ',' << format_double(curve(t)) << '\n';
}

json bounds_json(const BoundsReport& report) {
  json phis = json::array();
  for (const auto& c : report.phi_by_zeta) {
    phis.push_back({{"zeta", c.zeta}, {"phi", json_number(c.phi)}, {"best_set", c.best_set}});
  }
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"skipped", c.skipped},
                      {"lhs", json_number(c.lhs)},
                      {"rhs", json_number(c.rhs)},
                      {"witness", c.witness}});
  }
  return {{"lambda", json_number(report.lambda)},
          {"conductance", phis},
          {"m_all", json_number(report.m_all)},
          {"m_x0", json_number(report.m_x0)},
          {"x0_mass", json_number(report.x0_mass)},
          {"violations", report.violations()},
          {"checks", checks}};
}

json consistency_json(const ConsistencyDiagnostic& d) {
  json viol = json::array();
  for (const auto& [a, b] : d.violations) viol.push_back({support_json(a), support_json(b)});
  return {{"c1_hat", json_number(d.c1_hat)},
          {"c2_hat", json_number(d.c2_hat)},
          {"pairs_checked", d.pairs_checked},
          {"irrelevant_pairs", d.irrelevant_pairs},
          {"relevant_pairs", d.relevant_pairs},
          {"exhaustive", d.exhaustive},
          {"u_condition", d.u_condition},
          {"violations", viol},
          {"warnings", d.warnings}};
}

json models_json(const std::vector<WeightedModel>& models) {
  json out = json::array();
  for (const auto& m : models) {
    json theta = json::array();
    for (Eigen::Index k = 0; k < m.theta_check.size(); ++k) theta.push_back(json_number(m.theta_check(k)));
    out.push_back({{"delta", support_json(m.delta)}, {"weight", m.weight}, {"theta_check", theta}});
  }
  return out;
}

std::vector<WeightedModel> models_from_json(const json& j, std::size_t p) {
  if (!j.is_array() || j.empty()) throw ValidationError("models must be a nonempty array");
  std::vector<WeightedModel> out;
  for (const auto& m : j) {
    WeightedModel w;
    try {
      w.delta = Support::from_one_based(p, m.at("delta").get<std::vector<std::size_t>>());
      w.weight = m.at("weight").get<double>();
      const auto& th = m.at("theta_check");
      w.theta_check.resize(static_cast<Eigen::Index>(th.size()));
      for (std::size_t k = 0; k < th.size(); ++k) w.theta_check(static_cast<Eigen::Index>(k)) = number_from_json(th[k]);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed model entry: ") + e.what());
    }
    if (static_cast<std::size_t>(w.theta_check.size()) != w.delta.weight()) {
      throw ValidationError("model entry: theta_check length does not match delta");
    }
    if (!(w.weight >= 0.0)) throw ValidationError("model entry: negative weight");
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json_number(*v) : json(nullptr); }

json row_json(const ReplicationRow& r) {
  json j = {{"index", r.index},
            {"seed", r.seed},
            {"ok", r.ok},
            {"error", r.error},
            {"lambda1", json_number(r.lambda1)},
            {"lasso_size", r.lasso_size},
            {"f1_median", json_number(r.f1_median)},
            {"f1_modal", json_number(r.f1_modal)},
            {"f1_lasso", json_number(r.f1_lasso)},
            {"rmse", json_number(r.rmse)},
            {"median_size", r.median_size},
            {"burnin", r.burnin},
            {"burnin_source", r.burnin_source}};
  j["mixing_time"] = r.mixing_time ? json(*r.mixing_time) : json(nullptr);
  j["mixing_reached"] = r.mixing_reached ? json(*r.mixing_reached) : json(nullptr);
  j["da_f1"] = optional_json(r.da_f1);
  j["da_acceptance"] = optional_json(r.da_acceptance);
  return j;
}

}  // namespace

json experiment_body_json(const ExperimentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  json sums = json::object();
  for (const auto& [name, s] : report.summaries) {
    sums[name] = {{"median", json_number(s.median)},
                  {"mean", json_number(s.mean)},
                  {"std_error", json_number(s.std_error)},
                  {"count", s.count}};
  }
  json incomplete = json::array();
  for (const auto& r : report.rows) {
    if (!r.ok) incomplete.push_back(r.index);
  }
  return {{"config", report.config},
          {"replications", rows},
          {"summary", sums},
          {"complete", report.complete},
          {"incomplete_replications", incomplete}};
}

json experiment_report_json(const ExperimentReport& report) {
  json per_rep = json::array();
  for (const auto& r : report.rows) per_rep.push_back(r.seconds);
  const json header = {{"schema_version", kExperimentSchemaVersion},
                       {"standard_error", "sample standard deviation across replications"},
                       {"model_estimator", "median probability model (inclusion > 0.5); modal model also reported"},
                       {"seed_rule", "replication r uses split_seed(master_seed, r)"},
                       {"coupling_lag", report.config.mixing.L},
                       {"mixing_threshold", report.config.mixing.threshold}};
  return {{"header", header},
          {"body", experiment_body_json(report)},
          {"timing", {{"total_seconds", report.total_seconds}, {"replication_seconds", per_rep}}}};
}

void write_experiment_csv(const std::string& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "index,seed,ok,lambda1,lasso_size,f1_median,f1_modal,f1_lasso,rmse,median_size,burnin,burnin_source,"
         "mixing_time,da_f1,da_acceptance\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : report.rows) {
    out << r.index << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << format_double(r.lambda1) << ','
        << r.lasso_size << ',' << format_double(r.f1_median) << ',' << format_double(r.f1_modal) << ','
        << format_double(r.f1_lasso) << ',' << format_double(r.rmse) << ',' << r.median_size << ',' << r.burnin
        << ',' << r.burnin_source << ',' << (r.mixing_time ? std::to_string(*r.mixing_time) : std::string()) << ','
        << opt(r.da_f1) << ',' << opt(r.da_acceptance) << '\n';
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace olap
