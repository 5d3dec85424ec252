#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "olap/glm.hpp"
#include "olap/olap.hpp"
#include "olap/sampler.hpp"
#include "olap/support.hpp"

namespace olap {

/// 2 TP / (2 TP + FP + FN); 1 when TP = FP = FN = 0.
double f1_score(const Support& estimate, const Support& truth);

/// Coordinates with inclusion frequency strictly above 1/2.
Support median_model(const Trace& trace, std::uint64_t burnin);

/// Most visited model after burn-in; ties go to the smaller Support.
Support modal_model(const Trace& trace, std::uint64_t burnin);

/// One model of a posterior average with its weight and one-step estimate.
struct WeightedModel {
  Support delta;
  double weight = 0.0;
  Eigen::VectorXd theta_check;
};

/// Distinct models after burn-in with visit frequencies, in Support order.
std::vector<WeightedModel> posterior_models(const OlapModel& model, const Trace& trace,
                                            std::uint64_t burnin);

struct Prediction {
  Eigen::VectorXd mean;
  /// Rows whose linear predictor overflowed (poisson); their mean is NaN.
  std::vector<std::size_t> overflow_rows;
};

/// sum_m w_m psi'(X_new (theta_check_m, 0)_delta_m) / sum_m w_m.
Prediction predict_from_models(Family family, const std::vector<WeightedModel>& models,
                               const Eigen::MatrixXd& X_new);

Prediction predict(const OlapModel& model, const Trace& trace, std::uint64_t burnin,
                   const Eigen::MatrixXd& X_new);

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction);

struct Summary {
  double median = 0.0;
  double mean = 0.0;
  /// Sample standard deviation across replications (0 for a single value).
  double std_error = 0.0;
  std::size_t count = 0;
};

/// NaN entries are skipped.
Summary summarize(const std::vector<double>& values);

}  // namespace olap
