#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "olap/chain_analysis.hpp"
#include "olap/coupling.hpp"
#include "olap/dataset_io.hpp"
#include "olap/elastic_net.hpp"
#include "olap/error.hpp"
#include "olap/experiment.hpp"
#include "olap/metrics.hpp"
#include "olap/olap.hpp"
#include "olap/report.hpp"
#include "olap/sampler.hpp"
#include "olap/simulate.hpp"

using nlohmann::json;
using namespace olap;

namespace {

struct DataArgs {
  std::string path;
  std::string family = "logistic";
  std::string response = "y";
};

struct InitArgs {
  std::optional<double> lambda1;
  int folds = 5;
  std::size_t grid_size = 40;
  double grid_ratio = 0.01;
  double lambda2 = 0.0;
  std::uint64_t seed = 1;
  double u = kDefaultU;
  std::size_t threads = 1;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.path, "CSV with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_option("--family", a.family, "logistic, poisson or gaussian")->capture_default_str();
  cmd->add_option("--response", a.response, "name of the response column")->capture_default_str();
}

void add_init_options(CLI::App* cmd, InitArgs& a) {
  cmd->add_option("--lambda1", a.lambda1, "fixed l1 weight (skips cross-validation)");
  cmd->add_option("--folds", a.folds, "cross-validation folds")->capture_default_str();
  cmd->add_option("--grid-size", a.grid_size, "lambda grid size")->capture_default_str();
  cmd->add_option("--grid-ratio", a.grid_ratio, "smallest/largest lambda")->capture_default_str();
  cmd->add_option("--lambda2", a.lambda2, "l2 weight")->capture_default_str();
  cmd->add_option("--seed", a.seed, "seed")->capture_default_str();
  cmd->add_option("--u", a.u, "sparsity exponent")->capture_default_str();
  cmd->add_option("--threads", a.threads, "worker threads")->capture_default_str();
}

struct Fitted {
  Dataset data;
  NetConfig net;
  NetResult fit;
  Support lasso;
  std::vector<std::string> warnings;
};

Fitted fit_initial(const DataArgs& d, const InitArgs& a) {
  Fitted f;
  f.data = load_dataset(d.path, family_from_string(d.family), d.response);
  std::cerr << "loaded " << f.data.n() << " rows, " << f.data.p() << " covariates\n";
  f.net.lambda2 = a.lambda2;
  f.net.threads = a.threads;
  if (a.lambda1) {
    f.net.lambda1 = *a.lambda1;
  } else {
    const auto grid = lambda_grid(f.data, a.grid_size, a.grid_ratio);
    CvResult cv = cv_select(f.data, f.data.family, a.folds, grid, a.lambda2, Rng::split_seed(a.seed, 1), f.net);
    f.net = cv.config;
    f.warnings = cv.warnings;
  }
  f.fit = fit_elastic_net(f.data, f.net);
  if (!f.fit.converged) f.warnings.push_back("elastic net did not converge; using best iterate");
  f.lasso = support_of(f.fit, f.net.support_tol);
  return f;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v(i)));
  return out;
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_text(out, j.dump(2) + "\n");
  }
}

Support read_truth(const std::string& path, std::size_t p) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
    return Support::from_one_based(p, j.at("delta_star").get<std::vector<std::size_t>>());
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"olapvs: Bayesian variable selection with one-step Laplace scores"};
  app.require_subcommand(1);

  // simulate
  SimConfig sim;
  std::string sim_family = "logistic", sim_out, sim_truth;
  auto* c_sim = app.add_subcommand("simulate", "simulate a dataset and its true support");
  c_sim->add_option("--n", sim.n)->capture_default_str();
  c_sim->add_option("--p", sim.p)->capture_default_str();
  c_sim->add_option("--rho", sim.rho, "AR(1) design correlation")->capture_default_str();
  c_sim->add_option("--s-star", sim.s_star)->capture_default_str();
  c_sim->add_option("--signal-low", sim.signal_low)->capture_default_str();
  c_sim->add_option("--signal-high", sim.signal_high)->capture_default_str();
  c_sim->add_option("--family", sim_family)->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--out", sim_out, "dataset CSV")->required();
  c_sim->add_option("--truth", sim_truth, "truth JSON (delta_star, theta_star)");

  // fit
  DataArgs fit_data;
  InitArgs fit_init;
  std::size_t fit_J = kDefaultJ;
  std::uint64_t fit_steps = 2000;
  double fit_burnin = 0.5;
  std::string fit_start = "lasso", fit_out, fit_trace;
  auto* c_fit = app.add_subcommand("fit", "run the sampler; report inclusion probabilities and models");
  add_data_options(c_fit, fit_data);
  add_init_options(c_fit, fit_init);
  c_fit->add_option("--J", fit_J, "coordinates updated per step")->capture_default_str();
  c_fit->add_option("--steps", fit_steps)->capture_default_str();
  c_fit->add_option("--burnin-fraction", fit_burnin)->capture_default_str();
  c_fit->add_option("--init", fit_start, "lasso or null")->capture_default_str();
  c_fit->add_option("--out", fit_out, "output JSON (default stdout)");
  c_fit->add_option("--trace", fit_trace, "trace JSONL output");

  // mixing
  DataArgs mix_data;
  InitArgs mix_init;
  CouplingOptions mix_opts;
  std::size_t mix_count = 30, mix_fp = 10;
  double mix_threshold = 0.25;
  std::string mix_kind = "null", mix_truth, mix_records, mix_curve, mix_out;
  auto* c_mix = app.add_subcommand("mixing", "L-lag coupling records and the TV bound curve");
  add_data_options(c_mix, mix_data);
  add_init_options(c_mix, mix_init);
  c_mix->add_option("--init", mix_kind, "null, lasso or truth_plus")->capture_default_str();
  c_mix->add_option("--truth", mix_truth, "truth JSON for truth_plus");
  c_mix->add_option("--false-positives", mix_fp)->capture_default_str();
  c_mix->add_option("--records", mix_count)->capture_default_str();
  c_mix->add_option("--L", mix_opts.L)->capture_default_str();
  c_mix->add_option("--J", mix_opts.J)->capture_default_str();
  c_mix->add_option("--max-steps", mix_opts.max_steps)->capture_default_str();
  c_mix->add_option("--threshold", mix_threshold)->capture_default_str();
  c_mix->add_option("--records-out", mix_records, "records CSV");
  c_mix->add_option("--curve-out", mix_curve, "curve CSV");
  c_mix->add_option("--out", mix_out, "summary JSON (default stdout)");

  // spectral
  DataArgs sp_data;
  InitArgs sp_init;
  std::string sp_truth, sp_out;
  std::size_t sp_N = 200;
  auto* c_sp = app.add_subcommand("spectral", "exact chain analysis for small p (p <= 12)");
  add_data_options(c_sp, sp_data);
  add_init_options(c_sp, sp_init);
  c_sp->add_option("--truth", sp_truth, "truth JSON; the posterior mode is used otherwise");
  c_sp->add_option("--tv-steps", sp_N, "length of the TV curve")->capture_default_str();
  c_sp->add_option("--out", sp_out, "report JSON (default stdout)");

  // benchmark
  std::string bm_config, bm_out, bm_csv;
  std::optional<std::size_t> bm_threads;
  auto* c_bm = app.add_subcommand("benchmark", "run a simulation study from a JSON config");
  c_bm->add_option("--config", bm_config)->required()->check(CLI::ExistingFile);
  c_bm->add_option("--out", bm_out, "report JSON (default stdout)");
  c_bm->add_option("--csv", bm_csv, "per-replication CSV");
  c_bm->add_option("--threads", bm_threads, "override the config's thread count");

  // predict
  std::string pr_fit, pr_data, pr_drop = "y", pr_out;
  auto* c_pr = app.add_subcommand("predict", "posterior-averaged predictions for new rows");
  c_pr->add_option("--fit", pr_fit, "JSON written by fit")->required()->check(CLI::ExistingFile);
  c_pr->add_option("--data", pr_data, "CSV of covariates")->required()->check(CLI::ExistingFile);
  c_pr->add_option("--drop", pr_drop, "column ignored if present")->capture_default_str();
  c_pr->add_option("--out", pr_out, "predictions CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_sim) {
      sim.family = family_from_string(sim_family);
      const Simulation s = simulate(sim);
      save_dataset(sim_out, s.data);
      if (!sim_truth.empty()) {
        json t = {{"delta_star", support_json(s.delta_star)},
                  {"theta_star", vector_json(s.theta_star)},
                  {"seed", sim.seed},
                  {"family", to_string(sim.family)}};
        write_text(sim_truth, t.dump(2) + "\n");
      }
      std::cerr << "wrote " << s.data.n() << " x " << s.data.p() << " to " << sim_out << '\n';
    } else if (*c_fit) {
      if (fit_start != "lasso" && fit_start != "null") throw ValidationError("--init must be lasso or null");
      if (!(fit_burnin >= 0.0 && fit_burnin < 1.0)) throw ValidationError("--burnin-fraction must be in [0,1)");
      Fitted f = fit_initial(fit_data, fit_init);
      const OlapModel model(f.data, f.fit.theta_tilde, fit_init.u);
      const Support start = fit_start == "lasso" ? f.lasso : Support(f.data.p());
      ChainOptions co;
      co.J = fit_J;
      const Trace trace = run_chain(model, start, fit_steps, Rng::split_seed(fit_init.seed, 2), co);
      const auto burnin = static_cast<std::uint64_t>(fit_burnin * static_cast<double>(fit_steps));
      if (!fit_trace.empty()) write_trace_jsonl(fit_trace, trace);
      json out = {{"family", to_string(f.data.family)},
                  {"n", f.data.n()},
                  {"p", f.data.p()},
                  {"u", fit_init.u},
                  {"lambda1", f.net.lambda1},
                  {"lambda2", f.net.lambda2},
                  {"lasso_support", support_json(f.lasso)},
                  {"steps", fit_steps},
                  {"burnin", burnin},
                  {"J", fit_J},
                  {"inclusion", vector_json(inclusion_probs(trace, burnin))},
                  {"median_model", support_json(median_model(trace, burnin))},
                  {"modal_model", support_json(modal_model(trace, burnin))},
                  {"models", models_json(posterior_models(model, trace, burnin))},
                  {"warnings", f.warnings}};
      emit(out, fit_out);
    } else if (*c_mix) {
      Fitted f = fit_initial(mix_data, mix_init);
      const OlapModel model(f.data, f.fit.theta_tilde, mix_init.u);
      const InitKind kind = init_kind_from_string(mix_kind);
      InitSampler init;
      if (kind == InitKind::null_model) {
        init = InitSampler::null_model(f.data.p());
      } else if (kind == InitKind::lasso) {
        init = InitSampler::lasso(f.lasso);
      } else if (kind == InitKind::truth_plus) {
        if (mix_truth.empty()) throw ValidationError("--init truth_plus needs --truth");
        init = InitSampler::truth_plus(read_truth(mix_truth, f.data.p()), mix_fp);
      } else {
        throw ValidationError("--init must be null, lasso or truth_plus");
      }
      const auto records = meeting_records(model, init, mix_opts, mix_count, mix_init.seed, mix_init.threads);
      std::uint64_t t_max = 1;
      for (const auto& r : records) t_max = std::max(t_max, r.tau);
      const TvBound curve = tv_bound_curve(records, static_cast<std::size_t>(t_max));
      const MixingEstimate est = mixing_time_estimate(curve.d_hat, mix_threshold);
      if (!mix_records.empty()) write_records_csv(mix_records, records);
      if (!mix_curve.empty()) write_curve_csv(mix_curve, curve.d_hat);
      std::vector<double> taus;
      for (const auto& r : records) taus.push_back(static_cast<double>(r.tau));
      json out = {{"init_kind", to_string(kind)},
                  {"L", mix_opts.L},
                  {"J", mix_opts.J},
                  {"records", records.size()},
                  {"censored", curve.censored},
                  {"median_tau", json_number(summarize(taus).median)},
                  {"threshold", mix_threshold},
                  {"mixing_time", est.t},
                  {"reached", est.reached},
                  {"warnings", curve.warnings}};
      for (const auto& w : f.warnings) out["warnings"].push_back(w);
      emit(out, mix_out);
    } else if (*c_sp) {
      Fitted f = fit_initial(sp_data, sp_init);
      if (f.data.p() > 12) {
        throw ValidationError("spectral analysis enumerates 2^p states; p = " + std::to_string(f.data.p()) +
                              " exceeds the limit of 12");
      }
      const OlapModel model(f.data, f.fit.theta_tilde, sp_init.u);
      const FiniteChain chain = build_transition_matrix(model, 12, sp_init.threads);
      const ChainCheck check = check_chain(chain, true);
      const PosteriorTable post = enumerate_posterior(model, 12, sp_init.threads);
      const Support star = sp_truth.empty() ? post.state(post.mode()) : read_truth(sp_truth, f.data.p());
      Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain.size()));
      pi0(0) = 1.0;
      const Eigen::VectorXd tv = tv_curve(chain, pi0, sp_N);
      json out = {{"p", f.data.p()},
                  {"states", chain.size()},
                  {"u", sp_init.u},
                  {"delta_star", support_json(star)},
                  {"posterior_delta_star", json_number(post.probability(star))},
                  {"spectral_gap", json_number(spectral_gap(chain))},
                  {"row_sum_error", check.row_sum_error},
                  {"stationarity_error", check.stationarity_error},
                  {"reversibility_error", check.reversibility_error},
                  {"tv_from_null", vector_json(tv)},
                  {"steps_to_quarter", steps_to_tv(tv, 0.5)},
                  {"posterior", posterior_json(post)}};
      if (chain.size() <= 16) {
        out["bounds"] = bounds_json(verify_bounds(chain, star, {0.02, 0.05}));
      } else {
        out["bounds"] = nullptr;
        out["bounds_note"] = "bound verification needs p <= 4";
      }
      emit(out, sp_out);
    } else if (*c_bm) {
      ExperimentConfig cfg = load_experiment_config(bm_config);
      if (bm_threads) cfg.threads = *bm_threads;
      const ExperimentReport rep = run_experiment(cfg);
      if (!bm_csv.empty()) write_experiment_csv(bm_csv, rep);
      emit(experiment_report_json(rep), bm_out);
      if (!rep.complete) std::cerr << "warning: some replications failed; see incomplete_replications\n";
    } else if (*c_pr) {
      std::ifstream in(pr_fit);
      json fj;
      try {
        fj = json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError(pr_fit + ": " + e.what());
      }
      const auto p = fj.at("p").get<std::size_t>();
      const Family fam = family_from_string(fj.at("family").get<std::string>());
      const auto models = models_from_json(fj.at("models"), p);
      const Eigen::MatrixXd X = load_matrix(pr_data, pr_drop);
      const Prediction pred = predict_from_models(fam, models, X);
      std::ofstream out(pr_out);
      if (!out) throw ValidationError("cannot write " + pr_out);
      out << "row,prediction,overflow\n";
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
        const bool bad = k < pred.overflow_rows.size() && pred.overflow_rows[k] == static_cast<std::size_t>(i);
        if (bad) ++k;
        out << i + 1 << ',' << format_double(pred.mean(i)) << ',' << (bad ? 1 : 0) << '\n';
      }
      if (!pred.overflow_rows.empty()) {
        std::cerr << "warning: " << pred.overflow_rows.size() << " rows overflowed\n";
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
