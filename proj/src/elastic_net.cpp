#include "olap/elastic_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "olap/error.hpp"
#include "olap/parallel.hpp"
#include "olap/rng.hpp"

namespace olap {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktrack = 60;
constexpr int kMaxInnerPasses = 2000;

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double penalty(const Eigen::VectorXd& theta, const NetConfig& cfg) {
  return cfg.lambda1 * theta.lpNorm<1>() + 0.5 * cfg.lambda2 * theta.squaredNorm();
}

// KKT residual from the gradient of the smooth loss (theta coordinates).
double kkt_from_gradient(const Eigen::VectorXd& loss_grad, double intercept_grad,
                         const Eigen::VectorXd& theta, const NetConfig& cfg) {
  double worst = cfg.intercept ? std::abs(intercept_grad) : 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double g = loss_grad(j) + cfg.lambda2 * theta(j);
    double v;
    if (theta(j) != 0.0) {
      v = std::abs(g + cfg.lambda1 * (theta(j) > 0 ? 1.0 : -1.0));
    } else {
      v = std::max(0.0, std::abs(g) - cfg.lambda1);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

// Smooth part sum psi(eta) - y eta, +inf on poisson overflow.
double loss_or_inf(Family f, const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  try {
    return sum_psi(f, eta.array()) - y.dot(eta);
  } catch (const OverflowError&) {
    return std::numeric_limits<double>::infinity();
  }
}

Dataset subset_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.family = data.family;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(rows[i]);
    out.y(static_cast<Eigen::Index>(i)) = data.y(rows[i]);
  }
  return out;
}

}  // namespace

void NetConfig::validate() const {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ValidationError("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ValidationError("lambda2 must be >= 0");
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (!(support_tol > 0.0)) throw ValidationError("support_tol must be > 0");
}

double net_objective(const Dataset& data, const Eigen::VectorXd& theta, double intercept,
                     const NetConfig& cfg) {
  if (static_cast<std::size_t>(theta.size()) != data.p()) {
    throw DimensionError("net_objective: theta has wrong length");
  }
  const Eigen::VectorXd eta = (data.X * theta).array() + intercept;
  return sum_psi(data.family, eta.array()) - data.y.dot(eta) + penalty(theta, cfg);
}

double net_kkt_violation(const Dataset& data, const Eigen::VectorXd& theta, double intercept,
                         const NetConfig& cfg) {
  if (static_cast<std::size_t>(theta.size()) != data.p()) {
    throw DimensionError("net_kkt_violation: theta has wrong length");
  }
  const Eigen::VectorXd eta = (data.X * theta).array() + intercept;
  const LinkValues lv = link_values(data.family, eta.array());
  const Eigen::VectorXd resid = lv.mean.matrix() - data.y;
  return kkt_from_gradient(data.X.transpose() * resid, resid.sum(), theta, cfg);
}

NetResult fit_elastic_net(const Dataset& data, const NetConfig& cfg, const NetResult* warm_start) {
  cfg.validate();
  data.validate();
  const Eigen::Index n = data.X.rows();
  const Eigen::Index p = data.X.cols();
  const Family fam = data.family;

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
  if (cfg.standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = std::sqrt(data.X.col(j).squaredNorm() / static_cast<double>(n));
      scale(j) = s > 0.0 ? s : 1.0;
    }
  }
  const Eigen::MatrixXd Z = data.X * scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd l1 = cfg.lambda1 * scale.cwiseInverse();
  const Eigen::VectorXd l2 = cfg.lambda2 * scale.cwiseInverse().cwiseAbs2();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double b0 = 0.0;
  if (warm_start != nullptr) {
    if (warm_start->theta_tilde.size() != p) throw DimensionError("warm start has wrong length");
    beta = warm_start->theta_tilde.cwiseProduct(scale);
    if (cfg.intercept) b0 = warm_start->intercept;
  }

  auto pen_beta = [&](const Eigen::VectorXd& b) {
    return l1.dot(b.cwiseAbs()) + 0.5 * l2.dot(b.cwiseAbs2());
  };

  Eigen::VectorXd eta = (Z * beta).array() + b0;
  double F = loss_or_inf(fam, data.y, eta) + pen_beta(beta);
  if (!std::isfinite(F)) {
    beta.setZero();
    b0 = 0.0;
    eta.setZero();
    F = loss_or_inf(fam, data.y, eta);
  }

  NetResult res;
  res.objective_trace.push_back(F);
  double kkt = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const LinkValues lv = link_values(fam, eta.array());
    const Eigen::VectorXd resid = lv.mean.matrix() - data.y;
    const Eigen::VectorXd g = Z.transpose() * resid;
    const double g0 = resid.sum();
    const Eigen::VectorXd theta = beta.cwiseQuotient(scale);
    kkt = kkt_from_gradient(g.cwiseProduct(scale), g0, theta, cfg);
    if (kkt <= cfg.tol) {
      res.converged = true;
      break;
    }
    res.iterations = iter + 1;

    const Eigen::VectorXd& w = lv.variance.matrix();
    const Eigen::VectorXd hdiag = Z.array().square().matrix().transpose() * w;
    const double h0 = w.sum();
    const double tiny = 1e-12 * std::max(1.0, hdiag.size() > 0 ? hdiag.maxCoeff() : 1.0);
    const double inner_tol = std::max(0.1 * cfg.tol, 1e-3 * kkt);

    Eigen::VectorXd b = beta;
    double c0 = b0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);  // Z (b - beta) + (c0 - b0)

    auto update = [&](Eigen::Index j) {
      const double wu = Z.col(j).cwiseProduct(w).dot(u);
      const double denom = std::max(hdiag(j) + l2(j), tiny);
      const double lin = g(j) + wu - hdiag(j) * b(j);
      const double next = soft_threshold(-lin, l1(j)) / denom;
      const double delta = next - b(j);
      if (delta == 0.0) return 0.0;
      u.noalias() += delta * Z.col(j);
      b(j) = next;
      return std::abs(delta) * denom * scale(j);
    };
    auto update_intercept = [&]() {
      if (!cfg.intercept || h0 <= tiny) return 0.0;
      const double lin = g0 + w.dot(u) - h0 * c0;
      const double next = -lin / h0;
      const double delta = next - c0;
      u.array() += delta;
      c0 = next;
      return std::abs(delta) * h0;
    };

    int passes = 0;
    while (passes < kMaxInnerPasses) {
      double change = update_intercept();
      for (Eigen::Index j = 0; j < p; ++j) change = std::max(change, update(j));
      ++passes;
      if (change <= inner_tol) break;
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (b(j) != 0.0) active.push_back(j);
      }
      while (passes < kMaxInnerPasses) {
        double ac = update_intercept();
        for (auto j : active) ac = std::max(ac, update(j));
        ++passes;
        if (ac <= inner_tol) break;
      }
    }

    const Eigen::VectorXd d = b - beta;
    const double dc = c0 - b0;
    // Summed per coordinate: differencing the two penalty totals cancels badly near the optimum.
    double decrease = g0 * dc;
    for (Eigen::Index j = 0; j < p; ++j) {
      decrease += g(j) * d(j) + l1(j) * (std::abs(b(j)) - std::abs(beta(j))) + 0.5 * l2(j) * d(j) * (b(j) + beta(j));
    }
    if (!(decrease < 0.0)) break;

    // Near the optimum the predicted decrease drops below the rounding error of F.
    const double fuzz = 1e-13 * std::max(1.0, std::abs(F));
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktrack; ++k) {
      const Eigen::VectorXd trial = beta + t * d;
      const Eigen::VectorXd eta_t = eta + t * u;
      const double Ft = loss_or_inf(fam, data.y, eta_t) + pen_beta(trial);
      if (Ft <= F + kArmijo * t * decrease + fuzz) {
        beta = trial;
        b0 += t * dc;
        eta = eta_t;
        F = Ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    res.objective_trace.push_back(F);
  }

  res.theta_tilde = beta.cwiseQuotient(scale);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(res.theta_tilde(j)) == 0.0) res.theta_tilde(j) = 0.0;
  }
  res.intercept = cfg.intercept ? b0 : 0.0;
  if (!res.converged) {
    kkt = net_kkt_violation(data, res.theta_tilde, res.intercept, cfg);
    res.converged = kkt <= cfg.tol;
  }
  res.kkt_violation = kkt;
  res.objective = F;
  return res;
}

double lambda_max(const Dataset& data) {
  const double mean0 = link_eval(data.family, 0.0, 1);
  const Eigen::VectorXd r = data.y.array() - mean0;
  return (data.X.transpose() * r).cwiseAbs().maxCoeff();
}

std::vector<double> lambda_grid(const Dataset& data, std::size_t count, double ratio) {
  if (count == 0) throw ValidationError("lambda_grid: count must be >= 1");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError("lambda_grid: ratio must be in (0, 1]");
  const double top = lambda_max(data);
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    grid[k] = top * std::pow(ratio, frac);
  }
  return grid;
}

double deviance(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  if (y.size() != eta.size()) throw DimensionError("deviance: size mismatch");
  double dev = 0.0;
  switch (family) {
    case Family::gaussian:
      dev = (y - eta).squaredNorm();
      break;
    case Family::logistic:
      dev = 2.0 * (sum_psi(family, eta.array()) - y.dot(eta));
      break;
    case Family::poisson:
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double mu = link_eval(family, eta(i), 1);
        const double term = y(i) > 0 ? y(i) * (std::log(y(i)) - eta(i)) : 0.0;
        dev += 2.0 * (term - (y(i) - mu));
      }
      break;
  }
  return dev;
}

CvResult cv_select(const Dataset& data, Family family, int folds,
                   const std::vector<double>& lambda1_grid, double lambda2, std::uint64_t seed,
                   const NetConfig& base) {
  if (family != data.family) throw ValidationError("cv_select: family does not match dataset");
  if (folds < 2) throw ValidationError("cv_select: folds must be >= 2");
  if (static_cast<std::size_t>(folds) > data.n()) throw ValidationError("cv_select: more folds than rows");
  if (lambda1_grid.empty()) throw ValidationError("cv_select: empty lambda grid");
  for (std::size_t k = 0; k < lambda1_grid.size(); ++k) {
    if (!(lambda1_grid[k] >= 0.0)) throw ValidationError("cv_select: lambda values must be >= 0");
    if (k > 0 && lambda1_grid[k] > lambda1_grid[k - 1]) {
      throw ValidationError("cv_select: lambda grid must be sorted in descending order");
    }
  }

  CvResult out;
  out.config = base;
  out.config.lambda2 = lambda2;
  for (double l : lambda1_grid) {
    if (out.lambdas.empty() || out.lambdas.back() != l) out.lambdas.push_back(l);
  }
  const std::size_t L = out.lambdas.size();

  // Fold assignment: shuffle (within class for logistic), then deal round-robin.
  Rng rng = Rng::derive(seed, 0x43560000u);
  auto shuffle = [&](std::vector<Eigen::Index>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
  };
  std::vector<Eigen::Index> order;
  if (family == Family::logistic) {
    std::vector<Eigen::Index> zeros, ones;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) (data.y(i) > 0.5 ? ones : zeros).push_back(i);
    shuffle(zeros);
    shuffle(ones);
    order = zeros;
    order.insert(order.end(), ones.begin(), ones.end());
  } else {
    order.resize(data.n());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    shuffle(order);
  }
  std::vector<int> fold_of(data.n());
  for (std::size_t k = 0; k < order.size(); ++k) fold_of[order[k]] = static_cast<int>(k % folds);

  std::vector<std::vector<double>> dev(folds, std::vector<double>(L, 0.0));
  std::vector<std::string> fold_warning(folds);
  std::vector<char> kept(folds, 1);

  parallel_for(static_cast<std::size_t>(folds), base.threads == 0 ? default_threads() : base.threads,
               [&](std::size_t k) {
                 std::vector<Eigen::Index> train, test;
                 for (std::size_t i = 0; i < fold_of.size(); ++i) {
                   (fold_of[i] == static_cast<int>(k) ? test : train).push_back(static_cast<Eigen::Index>(i));
                 }
                 const Dataset tr = subset_rows(data, train);
                 const Dataset te = subset_rows(data, test);
                 if (family == Family::logistic) {
                   const bool const_test = (te.y.array() == te.y(0)).all();
                   const bool const_train = (tr.y.array() == tr.y(0)).all();
                   if (const_test || const_train) {
                     kept[k] = 0;
                     fold_warning[k] = "fold " + std::to_string(k + 1) +
                                       " has a constant response; its deviance is excluded";
                     return;
                   }
                 }
                 NetConfig cfg = out.config;
                 NetResult prev;
                 bool have_prev = false;
                 for (std::size_t l = 0; l < L; ++l) {
                   cfg.lambda1 = out.lambdas[l];
                   try {
                     NetResult r = fit_elastic_net(tr, cfg, have_prev ? &prev : nullptr);
                     const Eigen::VectorXd eta = (te.X * r.theta_tilde).array() + r.intercept;
                     dev[k][l] = deviance(family, te.y, eta) / static_cast<double>(te.y.size());
                     prev = std::move(r);
                     have_prev = true;
                   } catch (const OverflowError&) {
                     dev[k][l] = std::numeric_limits<double>::infinity();
                   }
                 }
               });

  out.mean_deviance.assign(L, 0.0);
  std::size_t used = 0;
  for (int k = 0; k < folds; ++k) {
    if (!kept[k]) {
      out.warnings.push_back(fold_warning[k]);
      continue;
    }
    ++used;
    for (std::size_t l = 0; l < L; ++l) out.mean_deviance[l] += dev[k][l];
  }
  out.folds_used.assign(L, used);
  if (used == 0) {
    out.warnings.push_back("no usable folds; falling back to the largest lambda");
    out.config.lambda1 = out.lambdas.front();
    return out;
  }
  std::size_t best = 0;
  for (std::size_t l = 0; l < L; ++l) {
    out.mean_deviance[l] /= static_cast<double>(used);
    if (out.mean_deviance[l] < out.mean_deviance[best]) best = l;
  }
  out.config.lambda1 = out.lambdas[best];
  return out;
}

Support support_of(const NetResult& result, double support_tol) {
  Support s(static_cast<std::size_t>(result.theta_tilde.size()));
  for (Eigen::Index j = 0; j < result.theta_tilde.size(); ++j) {
    if (std::abs(result.theta_tilde(j)) > support_tol) s.set(static_cast<std::size_t>(j), true);
  }
  return s;
}

}  // namespace olap
