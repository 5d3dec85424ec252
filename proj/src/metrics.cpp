#include "olap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "olap/error.hpp"

namespace olap {

double f1_score(const Support& estimate, const Support& truth) {
  if (estimate.size() != truth.size()) throw DimensionError("f1_score: length mismatch");
  const double tp = static_cast<double>(meet(estimate, truth).weight());
  const double fp = static_cast<double>(estimate.weight()) - tp;
  const double fn = static_cast<double>(truth.weight()) - tp;
  if (tp + fp + fn == 0.0) return 1.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

Support median_model(const Trace& trace, std::uint64_t burnin) {
  const Eigen::VectorXd inc = inclusion_probs(trace, burnin);
  Support s(trace.p);
  for (Eigen::Index j = 0; j < inc.size(); ++j) {
    if (inc(j) > 0.5) s.set(static_cast<std::size_t>(j), true);
  }
  return s;
}

Support modal_model(const Trace& trace, std::uint64_t burnin) {
  const auto counts = visit_counts(trace, burnin);
  if (counts.empty()) throw ValidationError("modal_model: no entries after burn-in");
  const Support* best = nullptr;
  std::size_t best_count = 0;
  for (const auto& [s, c] : counts) {
    if (c > best_count || (c == best_count && s < *best)) {
      best = &s;
      best_count = c;
    }
  }
  return *best;
}

std::vector<WeightedModel> posterior_models(const OlapModel& model, const Trace& trace,
                                            std::uint64_t burnin) {
  const auto counts = visit_counts(trace, burnin);
  if (counts.empty()) throw ValidationError("posterior_models: no entries after burn-in");
  std::map<Support, std::size_t> ordered(counts.begin(), counts.end());
  std::size_t total = 0;
  for (const auto& [s, c] : ordered) total += c;
  std::vector<WeightedModel> out;
  out.reserve(ordered.size());
  for (const auto& [s, c] : ordered) {
    out.push_back({s, static_cast<double>(c) / static_cast<double>(total), model.score(s)->theta_check});
  }
  return out;
}

Prediction predict_from_models(Family family, const std::vector<WeightedModel>& models,
                               const Eigen::MatrixXd& X_new) {
  if (models.empty()) throw ValidationError("predict: no models");
  const std::size_t p = models.front().delta.size();
  if (static_cast<std::size_t>(X_new.cols()) != p) {
    throw DimensionError("predict: X_new has " + std::to_string(X_new.cols()) + " columns, expected " +
                         std::to_string(p));
  }
  const Eigen::Index n = X_new.rows();
  Prediction out;
  out.mean = Eigen::VectorXd::Zero(n);
  std::vector<char> bad(static_cast<std::size_t>(n), 0);
  double wsum = 0.0;
  for (const auto& m : models) {
    if (m.delta.size() != p) throw DimensionError("predict: models disagree on p");
    wsum += m.weight;
    const Eigen::VectorXd eta = X_new * embed(m.theta_check, m.delta);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (bad[static_cast<std::size_t>(i)]) continue;
      try {
        if (!std::isfinite(eta(i))) throw OverflowError("non-finite linear predictor");
        out.mean(i) += m.weight * link_eval(family, eta(i), 1);
      } catch (const OverflowError&) {
        bad[static_cast<std::size_t>(i)] = 1;
      }
    }
  }
  if (!(wsum > 0.0)) throw ValidationError("predict: weights sum to zero");
  out.mean /= wsum;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (bad[static_cast<std::size_t>(i)]) {
      out.overflow_rows.push_back(static_cast<std::size_t>(i));
      out.mean(i) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

Prediction predict(const OlapModel& model, const Trace& trace, std::uint64_t burnin,
                   const Eigen::MatrixXd& X_new) {
  return predict_from_models(model.family(), posterior_models(model, trace, burnin), X_new);
}

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction) {
  if (y.size() != prediction.size() || y.size() == 0) throw DimensionError("rmse: size mismatch");
  return std::sqrt((y - prediction).squaredNorm() / static_cast<double>(y.size()));
}

Summary summarize(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  Summary s;
  s.count = v.size();
  if (v.empty()) {
    s.median = s.mean = s.std_error = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace olap
