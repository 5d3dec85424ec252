#include "olap/olap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "olap/error.hpp"
#include "olap/parallel.hpp"
#include "olap/rng.hpp"

namespace olap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& H, const Support& delta,
                                            const char* where) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    throw DiagnosticsError(std::string(where) + ": Cholesky factorisation failed for delta = " +
                               delta.to_string(),
                           delta.indices());
  }
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_support(const OlapModel& model, const Support& delta) {
  if (delta.size() != model.p()) {
    throw DimensionError("support length " + std::to_string(delta.size()) + " != p = " +
                         std::to_string(model.p()));
  }
}

}  // namespace

ScoreCache::ScoreCache(std::optional<std::size_t> cap) : cap_(cap) {
  if (cap_ && *cap_ == 0) throw ValidationError("cache cap must be >= 1");
}

std::shared_ptr<const ModelScore> ScoreCache::find(const Support& delta) {
  if (!cap_) {
    std::shared_lock lock(mutex_);
    auto it = map_.find(delta);
    if (it == map_.end()) {
      ++misses_;
      return nullptr;
    }
    ++hits_;
    return it->second.score;
  }
  std::unique_lock lock(mutex_);
  auto it = map_.find(delta);
  if (it == map_.end()) {
    ++misses_;
    return nullptr;
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second.pos);
  return it->second.score;
}

void ScoreCache::insert(std::shared_ptr<const ModelScore> score) {
  std::unique_lock lock(mutex_);
  auto it = map_.find(score->delta);
  if (it != map_.end()) {
    it->second.score = std::move(score);
    if (cap_) lru_.splice(lru_.begin(), lru_, it->second.pos);
    return;
  }
  Support key = score->delta;
  Lru::iterator pos{};
  if (cap_) {
    lru_.push_front(key);
    pos = lru_.begin();
  }
  map_.emplace(std::move(key), Entry{std::move(score), pos});
  if (cap_ && map_.size() > *cap_) {
    map_.erase(lru_.back());
    lru_.pop_back();
  }
}

void ScoreCache::clear() {
  std::unique_lock lock(mutex_);
  map_.clear();
  lru_.clear();
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

OlapModel::OlapModel(Dataset data, Eigen::VectorXd theta_tilde, double u,
                     std::optional<std::size_t> cache_cap)
    : data_(std::make_shared<const Dataset>(std::move(data))),
      theta_tilde_(std::move(theta_tilde)),
      u_(u),
      cache_(std::make_shared<ScoreCache>(cache_cap)) {
  data_->validate();
  if (!(u_ > 0.0) || !std::isfinite(u_)) throw ValidationError("u must be a positive finite number");
  if (static_cast<std::size_t>(theta_tilde_.size()) != data_->p()) {
    throw DimensionError("theta_tilde length " + std::to_string(theta_tilde_.size()) +
                         " != p = " + std::to_string(data_->p()));
  }
  if (!theta_tilde_.allFinite()) throw ValidationError("theta_tilde must be finite");
}

std::shared_ptr<const ModelScore> OlapModel::score(const Support& delta) const {
  if (auto hit = cache_->find(delta)) return hit;
  auto fresh = std::make_shared<const ModelScore>(compute_score(delta));
  cache_->insert(fresh);
  return fresh;
}

ModelScore OlapModel::compute_score(const Support& delta) const {
  check_support(*this, delta);
  ModelScore s;
  s.delta = delta;
  const double prior = -u_ * static_cast<double>(delta.weight()) * log_p();
  try {
    const RestrictedProblem prob(*data_, delta);
    if (delta.empty()) {
      s.theta_check = Eigen::VectorXd(0);
      s.bar_ell = prob.value(s.theta_check);
    } else {
      const Eigen::VectorXd start = extract(theta_tilde_, delta);
      const auto ev = prob.evaluate(start, true);
      const auto llt = factor_or_throw(ev.neg_hessian, delta, "one_step");
      s.theta_check = start + llt.solve(ev.gradient);
      s.bar_ell = prob.value(s.theta_check);
    }
    s.log_score = prior + s.bar_ell;
  } catch (const OverflowError&) {
    s.theta_check = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(delta.weight()),
                                              std::numeric_limits<double>::quiet_NaN());
    s.bar_ell = kNegInf;
    s.log_score = kNegInf;
  }
  return s;
}

OlapModel OlapModel::with_u(double u) const {
  OlapModel m(*this);
  if (!(u > 0.0) || !std::isfinite(u)) throw ValidationError("u must be a positive finite number");
  m.u_ = u;
  m.cache_ = std::make_shared<ScoreCache>(cache_->cap());
  return m;
}

Eigen::VectorXd one_step(const OlapModel& model, const Support& delta) {
  check_support(model, delta);
  if (delta.empty()) return Eigen::VectorXd(0);
  const RestrictedProblem prob(model.data(), delta);
  const Eigen::VectorXd start = extract(model.theta_tilde(), delta);
  const auto ev = prob.evaluate(start, true);
  const auto llt = factor_or_throw(ev.neg_hessian, delta, "one_step");
  return start + llt.solve(ev.gradient);
}

ModelScore olap_log_score(const OlapModel& model, const Support& delta) {
  return *model.score(delta);
}

double bernoulli_from_scores(double s1, double s0) {
  if (s1 == kNegInf) return 0.0;
  if (s0 == kNegInf) return 1.0;
  const double d = s0 - s1;
  if (d > 0.0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

double cond_prob(const OlapModel& model, const Support& delta, std::size_t j) {
  check_support(model, delta);
  if (j >= model.p()) throw ValidationError("cond_prob: index out of range");
  const double s1 = model.score(flip(delta, j, true))->log_score;
  const double s0 = model.score(flip(delta, j, false))->log_score;
  return bernoulli_from_scores(s1, s0);
}

MleResult mle_restricted(const OlapModel& model, const Support& delta, double tol, int max_iter) {
  check_support(model, delta);
  if (!(tol > 0.0)) throw ValidationError("mle_restricted: tol must be > 0");
  MleResult r;
  if (delta.empty()) {
    r.theta = Eigen::VectorXd(0);
    r.converged = true;
    return r;
  }
  const RestrictedProblem prob(model.data(), delta);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(delta.weight()));
  auto ev = prob.evaluate(w, true);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    r.grad_norm = ev.gradient.lpNorm<Eigen::Infinity>();
    if (r.grad_norm <= tol) break;
    const auto llt = factor_or_throw(ev.neg_hessian, delta, "mle_restricted");
    const Eigen::VectorXd step = llt.solve(ev.gradient);
    // Damped Newton: halve until the concave objective does not decrease.
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 50; ++k) {
      const Eigen::VectorXd trial = w + t * step;
      try {
        auto tev = prob.evaluate(trial, true);
        if (tev.value >= ev.value - 1e-12 * std::abs(ev.value)) {
          w = trial;
          ev = std::move(tev);
          moved = true;
          break;
        }
      } catch (const OverflowError&) {
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  r.grad_norm = ev.gradient.lpNorm<Eigen::Infinity>();
  r.converged = r.grad_norm <= tol;
  r.theta = w;
  return r;
}

double full_laplace_log_score(const OlapModel& model, const Support& delta) {
  check_support(model, delta);
  const double prior = -model.u() * static_cast<double>(delta.weight()) * model.log_p();
  const RestrictedProblem prob(model.data(), delta);
  if (delta.empty()) return prior + prob.value(Eigen::VectorXd(0));
  const MleResult mle = mle_restricted(model, delta);
  const auto ev = prob.evaluate(mle.theta, true);
  const auto llt = factor_or_throw(ev.neg_hessian, delta, "full_laplace_log_score");
  return prior + ev.value - 0.5 * log_det(llt);
}

double exact_gaussian_log_marginal(const OlapModel& model, const Support& delta) {
  check_support(model, delta);
  if (model.family() != Family::gaussian) {
    throw ValidationError("exact_gaussian_log_marginal requires the gaussian family");
  }
  const double prior = -model.u() * static_cast<double>(delta.weight()) * model.log_p();
  if (delta.empty()) return prior;
  const Eigen::MatrixXd Xd = active_columns(model.data(), delta);
  const Eigen::Index k = Xd.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(k, k);
  A.selfadjointView<Eigen::Lower>().rankUpdate(Xd.transpose());
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
  const Eigen::VectorXd b = Xd.transpose() * model.data().y;
  const auto llt = factor_or_throw(A, delta, "exact_gaussian_log_marginal");
  // b^T A^{-1} b = |L^{-1} b|^2
  const Eigen::VectorXd z = llt.matrixL().solve(b);
  return prior - 0.5 * log_det(llt) + 0.5 * z.squaredNorm();
}

Eigen::VectorXd PosteriorTable::inclusion() const {
  Eigen::VectorXd inc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t s = 0; s < prob.size(); ++s) {
    for (std::size_t j = 0; j < p; ++j) {
      if ((s >> j) & 1u) inc(static_cast<Eigen::Index>(j)) += prob[s];
    }
  }
  return inc;
}

std::size_t PosteriorTable::mode() const {
  return static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
}

PosteriorTable enumerate_scores(std::size_t p, const ScoreFn& log_score, std::size_t max_p,
                                std::size_t threads) {
  if (p > max_p || p > 30) {
    throw ValidationError("enumeration needs p <= " + std::to_string(std::min<std::size_t>(max_p, 30)) +
                          ", got p = " + std::to_string(p));
  }
  PosteriorTable t;
  t.p = p;
  const std::size_t N = std::size_t{1} << p;
  t.log_score.assign(N, 0.0);
  t.prob.assign(N, 0.0);
  parallel_for(N, threads == 0 ? default_threads() : threads,
               [&](std::size_t s) { t.log_score[s] = log_score(Support::from_mask(p, s)); });
  const double top = *std::max_element(t.log_score.begin(), t.log_score.end());
  if (!std::isfinite(top)) throw DiagnosticsError("every model has a non-finite score", {});
  double z = 0.0;
  for (double v : t.log_score) z += std::exp(v - top);
  t.log_normalizer = top + std::log(z);
  for (std::size_t s = 0; s < N; ++s) t.prob[s] = std::exp(t.log_score[s] - t.log_normalizer);
  return t;
}

PosteriorTable enumerate_posterior(const OlapModel& model, std::size_t max_p, std::size_t threads) {
  return enumerate_scores(
      model.p(), [&](const Support& d) { return model.compute_score(d).log_score; }, max_p, threads);
}

ConsistencyDiagnostic consistency_diagnostic(const OlapModel& model, const Support& delta_star,
                                             std::size_t sample_size, std::uint64_t seed) {
  check_support(model, delta_star);
  const std::size_t p = model.p();
  const double log_p = model.log_p();
  const double n = static_cast<double>(model.n());
  ConsistencyDiagnostic d;
  d.c1_hat = -std::numeric_limits<double>::infinity();
  d.c2_hat = std::numeric_limits<double>::infinity();
  auto bar = [&](const Support& s) { return model.score(s)->bar_ell; };

  auto irrelevant = [&](const Support& d0, const Support& dl) {
    const double k = static_cast<double>(dl.weight() - d0.weight());
    d.c1_hat = std::max(d.c1_hat, (bar(dl) - bar(d0)) / (k * log_p));
    ++d.irrelevant_pairs;
  };
  auto relevant = [&](const Support& d0, const Support& dl) {
    const double k = static_cast<double>(dl.weight() - d0.weight());
    const double gain = bar(dl) - bar(d0);
    d.c2_hat = std::min(d.c2_hat, gain / (k * n));
    if (!(gain > 0.0)) d.violations.emplace_back(d0, dl);
    ++d.relevant_pairs;
  };

  const auto star_idx = delta_star.indices();
  std::vector<std::size_t> off_idx;
  for (std::size_t j = 0; j < p; ++j) {
    if (!delta_star.test(j)) off_idx.push_back(j);
  }

  if (p <= 12) {
    d.exhaustive = true;
    const std::uint64_t star = delta_star.mask();
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << p); ++s) {
      if ((s & ~star) != 0) irrelevant(Support::from_mask(p, s & star), Support::from_mask(p, s));
    }
    // Relevant pairs: d0 strict subset of dl, dl subset of delta_star.
    for (std::uint64_t dl = star;; dl = (dl - 1) & star) {
      for (std::uint64_t d0 = dl;; d0 = (d0 - 1) & dl) {
        if (d0 != dl) relevant(Support::from_mask(p, d0), Support::from_mask(p, dl));
        if (d0 == 0) break;
      }
      if (dl == 0) break;
    }
  } else {
    Rng rng = Rng::derive(seed, 0xC0DE0000u);
    for (std::size_t r = 0; r < sample_size && !off_idx.empty(); ++r) {
      Support d0(p);
      for (auto j : star_idx) d0.set(j, rng.bernoulli(0.5));
      Support dl = d0;
      const std::size_t extra = 1 + rng.index(std::min<std::size_t>(5, off_idx.size()));
      std::vector<std::size_t> pool = off_idx;
      for (std::size_t i = 0; i < extra; ++i) {
        const std::size_t k = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[k]);
        dl.set(pool[i], true);
      }
      irrelevant(d0, dl);
    }
    for (std::size_t r = 0; r < sample_size && !star_idx.empty(); ++r) {
      Support dl(p);
      while (dl.empty()) {
        for (auto j : star_idx) dl.set(j, rng.bernoulli(0.5));
      }
      const auto act = dl.indices();
      Support d0 = dl;
      // Drop a nonempty random subset of dl.
      const std::size_t drop = 1 + rng.index(act.size());
      std::vector<std::size_t> pool = act;
      for (std::size_t i = 0; i < drop; ++i) {
        const std::size_t k = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[k]);
        d0.set(pool[i], false);
      }
      relevant(d0, dl);
    }
  }

  if (d.irrelevant_pairs == 0) {
    d.c1_hat = 0.0;
    d.warnings.push_back("no irrelevant-addition pairs (delta_star is the full model)");
  }
  if (d.relevant_pairs == 0) {
    d.c2_hat = 0.0;
    d.warnings.push_back("no relevant-addition pairs (delta_star is empty)");
  }
  d.pairs_checked = d.irrelevant_pairs + d.relevant_pairs;
  d.u_condition = model.u() >= 2.0 * (1.0 + d.c1_hat);
  if (!d.u_condition) {
    d.warnings.push_back("u = " + std::to_string(model.u()) + " is below 2(1 + c1_hat) = " +
                         std::to_string(2.0 * (1.0 + d.c1_hat)));
  }
  if (!d.violations.empty()) {
    d.warnings.push_back(std::to_string(d.violations.size()) +
                         " relevant additions did not increase bar_ell");
  }
  return d;
}

}  // namespace olap
