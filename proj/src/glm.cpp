#include "olap/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "olap/error.hpp"

namespace olap {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow for large x.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

void check_poisson(double x, double clamp) {
  if (!(std::abs(x) <= clamp)) {
    throw OverflowError("poisson linear predictor " + std::to_string(x) + " exceeds clamp " +
                        std::to_string(clamp));
  }
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::logistic:
      return "logistic";
    case Family::poisson:
      return "poisson";
    case Family::gaussian:
      return "gaussian";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "logistic" || name == "binomial") return Family::logistic;
  if (name == "poisson") return Family::poisson;
  if (name == "gaussian" || name == "linear") return Family::gaussian;
  throw ValidationError("unknown GLM family '" + std::string(name) + "'");
}

double self_concordance_constant(Family f) { return f == Family::gaussian ? 0.0 : 1.0; }

double link_eval(Family f, double x, int order, double clamp) {
  if (order < 0 || order > 3) throw ValidationError("link_eval: order must be in 0..3");
  if (!std::isfinite(x)) throw ValidationError("link_eval: x must be finite");
  switch (f) {
    case Family::logistic: {
      if (order == 0) return softplus(x);
      const double s = sigmoid(x);
      if (order == 1) return s;
      const double v = s * (1.0 - s);
      if (order == 2) return v;
      // e^x (1 - e^x) / (1 + e^x)^3
      return v * (1.0 - 2.0 * s);
    }
    case Family::poisson:
      check_poisson(x, clamp);
      return std::exp(x);
    case Family::gaussian:
      switch (order) {
        case 0:
          return 0.5 * x * x;
        case 1:
          return x;
        case 2:
          return 1.0;
        default:
          return 0.0;
      }
  }
  return 0.0;
}

LinkValues link_values(Family f, const Eigen::ArrayXd& eta, double clamp) {
  const Eigen::Index n = eta.size();
  LinkValues out{Eigen::ArrayXd(n), Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
  switch (f) {
    case Family::logistic:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = sigmoid(eta(i));
        out.psi(i) = softplus(eta(i));
        out.mean(i) = s;
        out.variance(i) = s * (1.0 - s);
      }
      break;
    case Family::poisson:
      for (Eigen::Index i = 0; i < n; ++i) {
        check_poisson(eta(i), clamp);
        const double e = std::exp(eta(i));
        out.psi(i) = e;
        out.mean(i) = e;
        out.variance(i) = e;
      }
      break;
    case Family::gaussian:
      out.psi = 0.5 * eta.square();
      out.mean = eta;
      out.variance.setOnes();
      break;
  }
  return out;
}

double sum_psi(Family f, const Eigen::ArrayXd& eta, double clamp) {
  double s = 0.0;
  switch (f) {
    case Family::logistic:
      for (Eigen::Index i = 0; i < eta.size(); ++i) s += softplus(eta(i));
      break;
    case Family::poisson:
      for (Eigen::Index i = 0; i < eta.size(); ++i) {
        check_poisson(eta(i), clamp);
        s += std::exp(eta(i));
      }
      break;
    case Family::gaussian:
      s = 0.5 * eta.square().sum();
      break;
  }
  return s;
}

double Dataset::max_abs_x() const { return X.size() == 0 ? 0.0 : X.cwiseAbs().maxCoeff(); }

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw ValidationError("dataset needs n >= 1 and p >= 1");
  if (y.size() != X.rows()) {
    throw ValidationError("response length " + std::to_string(y.size()) + " != n = " +
                          std::to_string(X.rows()));
  }
  if (!X.allFinite()) throw ValidationError("design matrix has non-finite entries");
  if (!y.allFinite()) throw ValidationError("response has non-finite entries");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    if (family == Family::logistic && v != 0.0 && v != 1.0) {
      throw ValidationError("logistic response must be 0/1; row " + std::to_string(i + 1) +
                            " has " + std::to_string(v));
    }
    if (family == Family::poisson && (v < 0.0 || v != std::floor(v))) {
      throw ValidationError("poisson response must be a nonnegative integer; row " +
                            std::to_string(i + 1) + " has " + std::to_string(v));
    }
  }
}

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y, Family family) {
  Dataset d{std::move(X), std::move(y), family};
  d.validate();
  return d;
}

Eigen::MatrixXd active_columns(const Dataset& data, const Support& delta) {
  if (delta.size() != data.p()) {
    throw DimensionError("support length " + std::to_string(delta.size()) + " != p = " +
                         std::to_string(data.p()));
  }
  Eigen::MatrixXd Xd(data.X.rows(), static_cast<Eigen::Index>(delta.weight()));
  Eigen::Index k = 0;
  for (auto j : delta.indices()) Xd.col(k++) = data.X.col(static_cast<Eigen::Index>(j));
  return Xd;
}

double log_lik(const Dataset& data, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != data.p()) {
    throw DimensionError("theta length " + std::to_string(theta.size()) + " != p");
  }
  if (!theta.allFinite()) throw ValidationError("theta must be finite");
  const Eigen::VectorXd eta = data.X * theta;
  return data.y.dot(eta) - sum_psi(data.family, eta.array());
}

RestrictedProblem::RestrictedProblem(const Dataset& data, const Support& delta)
    : data_(&data), Xd_(active_columns(data, delta)) {}

void RestrictedProblem::check(const Eigen::VectorXd& w) const {
  if (w.size() != Xd_.cols()) {
    throw DimensionError("restricted problem: |w| = " + std::to_string(w.size()) +
                         " but |delta|_0 = " + std::to_string(Xd_.cols()));
  }
}

double RestrictedProblem::value(const Eigen::VectorXd& w) const {
  check(w);
  if (w.size() == 0) return -sum_psi(data_->family, Eigen::ArrayXd::Zero(Xd_.rows()));
  const Eigen::VectorXd eta = Xd_ * w;
  return data_->y.dot(eta) - sum_psi(data_->family, eta.array()) - 0.5 * w.squaredNorm();
}

Eigen::VectorXd RestrictedProblem::gradient(const Eigen::VectorXd& w) const {
  return evaluate(w, false).gradient;
}

Eigen::MatrixXd RestrictedProblem::neg_hessian(const Eigen::VectorXd& w) const {
  return evaluate(w, true).neg_hessian;
}

RestrictedProblem::Eval RestrictedProblem::evaluate(const Eigen::VectorXd& w, bool with_hessian) const {
  check(w);
  Eval out;
  const Eigen::Index k = Xd_.cols();
  if (k == 0) {
    out.value = value(w);
    out.gradient = Eigen::VectorXd(0);
    out.neg_hessian = Eigen::MatrixXd(0, 0);
    return out;
  }
  const Eigen::VectorXd eta = Xd_ * w;
  const LinkValues lv = link_values(data_->family, eta.array());
  out.value = data_->y.dot(eta) - lv.psi.sum() - 0.5 * w.squaredNorm();
  out.gradient = Xd_.transpose() * (data_->y.array() - lv.mean).matrix() - w;
  if (with_hessian) {
    const Eigen::MatrixXd weighted = Xd_.array().colwise() * lv.variance;
    out.neg_hessian = Eigen::MatrixXd::Identity(k, k);
    out.neg_hessian.noalias() += Xd_.transpose() * weighted;
  }
  return out;
}

double restricted_objective(const Dataset& data, const Support& delta, const Eigen::VectorXd& w) {
  return RestrictedProblem(data, delta).value(w);
}

Eigen::VectorXd restricted_grad(const Dataset& data, const Support& delta, const Eigen::VectorXd& w) {
  return RestrictedProblem(data, delta).gradient(w);
}

Eigen::MatrixXd restricted_hess(const Dataset& data, const Support& delta, const Eigen::VectorXd& w) {
  return RestrictedProblem(data, delta).neg_hessian(w);
}

SelfConcordanceReport self_concordance_check(Family f, const Eigen::VectorXd& grid, double c3) {
  if (grid.size() == 0) throw ValidationError("self_concordance_check: empty grid");
  SelfConcordanceReport r;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double d2 = link_eval(f, grid(i), 2);
    const double d3 = link_eval(f, grid(i), 3);
    r.max_ratio = std::max(r.max_ratio, std::abs(d3) / d2);
  }
  r.pass = r.max_ratio <= c3;
  return r;
}

RemainderReport remainder_bound_check(Family f, double u, double h, double c3) {
  RemainderReport r;
  const double taylor = link_eval(f, u, 0) + link_eval(f, u, 1) * h + 0.5 * h * h * link_eval(f, u, 2);
  const double exact = link_eval(f, u + h, 0);
  r.lhs = std::abs(exact - taylor);
  const double ah = std::abs(h);
  r.rhs = c3 / 6.0 * ah * ah * ah * std::exp(c3 * ah) * link_eval(f, u, 2);
  // lhs is a difference of O(|psi|) terms, so its rounding error scales with them.
  const double slack = 1e-12 * std::max({1.0, std::abs(exact), std::abs(taylor)});
  r.pass = r.lhs <= r.rhs + slack;
  return r;
}

}  // namespace olap
