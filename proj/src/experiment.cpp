#include "olap/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "olap/elastic_net.hpp"
#include "olap/error.hpp"
#include "olap/olap.hpp"
#include "olap/parallel.hpp"
#include "olap/rng.hpp"
#include "olap/sampler.hpp"

namespace olap {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (schema_version != kExperimentSchemaVersion) {
    throw ValidationError("unsupported schema_version " + std::to_string(schema_version) + " (expected " +
                          std::to_string(kExperimentSchemaVersion) + ")");
  }
  sim.validate();
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (!(u > 0.0)) throw ValidationError("u must be > 0");
  if (J < 1) throw ValidationError("J must be >= 1");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (!(burnin_fraction >= 0.0 && burnin_fraction < 1.0)) throw ValidationError("burnin_fraction must be in [0, 1)");
  if (init != InitKind::null_model && init != InitKind::lasso && init != InitKind::truth_plus) {
    throw ValidationError("init must be one of null, lasso, truth_plus");
  }
  if (init == InitKind::truth_plus && sim.s_star + false_positives > sim.p) {
    throw ValidationError("s_star + false_positives exceeds p");
  }
  if (cv.folds < 2) throw ValidationError("cv.folds must be >= 2");
  if (cv.grid_size < 1) throw ValidationError("cv.grid_size must be >= 1");
  if (!(cv.grid_ratio > 0.0 && cv.grid_ratio <= 1.0)) throw ValidationError("cv.grid_ratio must be in (0, 1]");
  if (!(cv.lambda2 >= 0.0)) throw ValidationError("cv.lambda2 must be >= 0");
  if (cv.lambda1 && !(*cv.lambda1 >= 0.0)) throw ValidationError("cv.lambda1 must be >= 0");
  if (mixing.enabled) {
    if (mixing.records < 1) throw ValidationError("mixing.records must be >= 1");
    if (mixing.L < 1) throw ValidationError("mixing.L must be >= 1");
    if (!(mixing.threshold > 0.0 && mixing.threshold < 1.0)) throw ValidationError("mixing.threshold must be in (0,1)");
  }
  if (da.enabled) {
    if (da.steps < 2) throw ValidationError("da.steps must be >= 2");
    if (da.rho0 && !(*da.rho0 > 0.0)) throw ValidationError("da.rho0 must be > 0");
  }
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"schema_version", c.schema_version},
           {"sim",
            {{"n", c.sim.n},
             {"p", c.sim.p},
             {"rho", c.sim.rho},
             {"s_star", c.sim.s_star},
             {"signal_low", c.sim.signal_low},
             {"signal_high", c.sim.signal_high},
             {"family", to_string(c.sim.family)},
             {"max_log_rate", c.sim.max_log_rate}}},
           {"replications", c.replications},
           {"master_seed", c.master_seed},
           {"u", c.u},
           {"J", c.J},
           {"steps", c.steps},
           {"burnin_fraction", c.burnin_fraction},
           {"init", to_string(c.init)},
           {"false_positives", c.false_positives},
           {"cv",
            {{"folds", c.cv.folds},
             {"grid_size", c.cv.grid_size},
             {"grid_ratio", c.cv.grid_ratio},
             {"lambda2", c.cv.lambda2},
             {"lambda1", c.cv.lambda1 ? json(*c.cv.lambda1) : json(nullptr)}}},
           {"mixing",
            {{"enabled", c.mixing.enabled},
             {"records", c.mixing.records},
             {"L", c.mixing.L},
             {"J", c.mixing.J},
             {"max_steps", c.mixing.max_steps},
             {"threshold", c.mixing.threshold},
             {"use_for_burnin", c.mixing.use_for_burnin}}},
           {"da", {{"enabled", c.da.enabled}, {"steps", c.da.steps}, {"rho0", c.da.rho0 ? json(*c.da.rho0) : json(nullptr)}}},
           {"test_n", c.test_n},
           {"threads", c.threads}};
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v, where);
  out = v;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "config",
             {"schema_version", "sim", "replications", "master_seed", "u", "J", "steps", "burnin_fraction", "init",
              "false_positives", "cv", "mixing", "da", "test_n", "threads"});
  read(j, "schema_version", c.schema_version, "config");
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    check_keys(s, "sim", {"n", "p", "rho", "s_star", "signal_low", "signal_high", "family", "max_log_rate"});
    read(s, "n", c.sim.n, "sim");
    read(s, "p", c.sim.p, "sim");
    read(s, "rho", c.sim.rho, "sim");
    read(s, "s_star", c.sim.s_star, "sim");
    read(s, "signal_low", c.sim.signal_low, "sim");
    read(s, "signal_high", c.sim.signal_high, "sim");
    read(s, "max_log_rate", c.sim.max_log_rate, "sim");
    if (s.contains("family")) {
      std::string f;
      read(s, "family", f, "sim");
      c.sim.family = family_from_string(f);
    }
  }
  read(j, "replications", c.replications, "config");
  read(j, "master_seed", c.master_seed, "config");
  read(j, "u", c.u, "config");
  read(j, "J", c.J, "config");
  read(j, "steps", c.steps, "config");
  read(j, "burnin_fraction", c.burnin_fraction, "config");
  if (j.contains("init")) {
    std::string k;
    read(j, "init", k, "config");
    c.init = init_kind_from_string(k);
  }
  read(j, "false_positives", c.false_positives, "config");
  if (j.contains("cv")) {
    const json& s = j.at("cv");
    check_keys(s, "cv", {"folds", "grid_size", "grid_ratio", "lambda2", "lambda1"});
    read(s, "folds", c.cv.folds, "cv");
    read(s, "grid_size", c.cv.grid_size, "cv");
    read(s, "grid_ratio", c.cv.grid_ratio, "cv");
    read(s, "lambda2", c.cv.lambda2, "cv");
    read_optional(s, "lambda1", c.cv.lambda1, "cv");
  }
  if (j.contains("mixing")) {
    const json& s = j.at("mixing");
    check_keys(s, "mixing", {"enabled", "records", "L", "J", "max_steps", "threshold", "use_for_burnin"});
    read(s, "enabled", c.mixing.enabled, "mixing");
    read(s, "records", c.mixing.records, "mixing");
    read(s, "L", c.mixing.L, "mixing");
    read(s, "J", c.mixing.J, "mixing");
    read(s, "max_steps", c.mixing.max_steps, "mixing");
    read(s, "threshold", c.mixing.threshold, "mixing");
    read(s, "use_for_burnin", c.mixing.use_for_burnin, "mixing");
  }
  if (j.contains("da")) {
    const json& s = j.at("da");
    check_keys(s, "da", {"enabled", "steps", "rho0"});
    read(s, "enabled", c.da.enabled, "da");
    read(s, "steps", c.da.steps, "da");
    read_optional(s, "rho0", c.da.rho0, "da");
  }
  read(j, "test_n", c.test_n, "config");
  read(j, "threads", c.threads, "config");
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0, e.byte);
  }
  return experiment_config_from_json(j);
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t replication) {
  return Rng::split_seed(master_seed, replication);
}

std::uint64_t stream_seed(std::uint64_t rep_seed, SeedStream stream) {
  return Rng::split_seed(rep_seed, static_cast<std::uint64_t>(stream));
}

namespace {

InitSampler make_init(const ExperimentConfig& cfg, const Support& lasso, const Support& truth) {
  switch (cfg.init) {
    case InitKind::null_model:
      return InitSampler::null_model(truth.size());
    case InitKind::truth_plus:
      return InitSampler::truth_plus(truth, cfg.false_positives);
    default:
      return InitSampler::lasso(lasso);
  }
}

}  // namespace

ReplicationRow run_replication(const ExperimentConfig& cfg, std::size_t index) {
  ReplicationRow row;
  row.index = index;
  row.seed = replication_seed(cfg.master_seed, index);
  row.rmse = std::numeric_limits<double>::quiet_NaN();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SimConfig sc = cfg.sim;
    sc.seed = stream_seed(row.seed, SeedStream::simulation);
    const Simulation sim = simulate(sc);

    NetConfig net;
    net.lambda2 = cfg.cv.lambda2;
    if (cfg.cv.lambda1) {
      net.lambda1 = *cfg.cv.lambda1;
    } else {
      const auto grid = lambda_grid(sim.data, cfg.cv.grid_size, cfg.cv.grid_ratio);
      net = cv_select(sim.data, sc.family, cfg.cv.folds, grid, cfg.cv.lambda2, stream_seed(row.seed, SeedStream::cv),
                      net)
                .config;
    }
    const NetResult fit = fit_elastic_net(sim.data, net);
    row.lambda1 = net.lambda1;
    const Support lasso = support_of(fit, net.support_tol);
    row.lasso_size = lasso.weight();
    row.f1_lasso = f1_score(lasso, sim.delta_star);

    const OlapModel model(sim.data, fit.theta_tilde, cfg.u);
    const InitSampler init = make_init(cfg, lasso, sim.delta_star);
    const std::uint64_t chain_seed = stream_seed(row.seed, SeedStream::chain);
    Rng start_rng = Rng::derive(chain_seed, 1);
    const Support delta0 = init.draw(start_rng);
    ChainOptions copts;
    copts.J = cfg.J;
    const Trace trace = run_chain(model, delta0, cfg.steps, chain_seed, copts);

    row.burnin = static_cast<std::uint64_t>(std::floor(cfg.burnin_fraction * static_cast<double>(cfg.steps)));
    row.burnin_source = "fraction";
    if (cfg.mixing.enabled) {
      CouplingOptions mo;
      mo.L = cfg.mixing.L;
      mo.J = cfg.mixing.J ? cfg.mixing.J : cfg.J;
      mo.max_steps = cfg.mixing.max_steps;
      const auto records =
          meeting_records(model, init, mo, cfg.mixing.records, stream_seed(row.seed, SeedStream::mixing), 1);
      std::uint64_t t_max = 1;
      for (const auto& r : records) t_max = std::max(t_max, r.tau);
      const TvBound curve = tv_bound_curve(records, static_cast<std::size_t>(t_max));
      const MixingEstimate est = mixing_time_estimate(curve.d_hat, cfg.mixing.threshold);
      row.mixing_time = est.t;
      row.mixing_reached = est.reached;
      if (cfg.mixing.use_for_burnin && est.reached && est.t < cfg.steps) {
        row.burnin = est.t;
        row.burnin_source = "mixing";
      }
    }

    const Support med = median_model(trace, row.burnin);
    row.median_size = med.weight();
    row.f1_median = f1_score(med, sim.delta_star);
    row.f1_modal = f1_score(modal_model(trace, row.burnin), sim.delta_star);

    if (cfg.test_n > 0) {
      const Dataset test = simulate_test_set(sc, sim.theta_star, cfg.test_n, stream_seed(row.seed, SeedStream::test));
      const Prediction pred = predict(model, trace, row.burnin, test.X);
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
        if (std::isfinite(pred.mean(i))) keep.push_back(i);
      }
      if (!keep.empty()) {
        Eigen::VectorXd a(static_cast<Eigen::Index>(keep.size())), b(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
          a(static_cast<Eigen::Index>(k)) = test.y(keep[k]);
          b(static_cast<Eigen::Index>(k)) = pred.mean(keep[k]);
        }
        row.rmse = rmse(a, b);
      }
    }

    if (cfg.da.enabled) {
      DaConfig dc;
      dc.rho0 = cfg.da.rho0;
      const Trace da = run_da_chain(model, fit.theta_tilde, lasso, cfg.da.steps, dc, stream_seed(row.seed, SeedStream::da));
      row.da_f1 = f1_score(median_model(da, cfg.da.steps / 2), sim.delta_star);
      row.da_acceptance = da.acceptance_rate;
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::map<std::string, Summary> summarize_rows(const std::vector<ReplicationRow>& rows) {
  std::map<std::string, std::vector<double>> cols;
  for (const auto& r : rows) {
    if (!r.ok) continue;
    cols["f1_median"].push_back(r.f1_median);
    cols["f1_modal"].push_back(r.f1_modal);
    cols["f1_lasso"].push_back(r.f1_lasso);
    cols["lasso_size"].push_back(static_cast<double>(r.lasso_size));
    cols["median_size"].push_back(static_cast<double>(r.median_size));
    if (!std::isnan(r.rmse)) cols["rmse"].push_back(r.rmse);
    if (r.mixing_time) cols["mixing_time"].push_back(static_cast<double>(*r.mixing_time));
    if (r.da_f1) cols["da_f1"].push_back(*r.da_f1);
    if (r.da_acceptance) cols["da_acceptance"].push_back(*r.da_acceptance);
  }
  std::map<std::string, Summary> out;
  for (const auto& [name, values] : cols) out[name] = summarize(values);
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  report.rows.resize(cfg.replications);
  parallel_for(cfg.replications, std::max<std::size_t>(1, cfg.threads),
               [&](std::size_t r) { report.rows[r] = run_replication(cfg, r); });
  report.summaries = summarize_rows(report.rows);
  report.complete = std::all_of(report.rows.begin(), report.rows.end(), [](const auto& r) { return r.ok; });
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace olap
