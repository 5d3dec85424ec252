#include "olap/coupling.hpp"

#include <cmath>
#include <numeric>

#include "olap/error.hpp"
#include "olap/parallel.hpp"
#include "olap/sampler.hpp"

namespace olap {

std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::null_model:
      return "null";
    case InitKind::lasso:
      return "lasso";
    case InitKind::truth_plus:
      return "truth_plus";
    case InitKind::posterior:
      return "posterior";
    case InitKind::fixed:
      return "fixed";
  }
  return "unknown";
}

InitKind init_kind_from_string(const std::string& s) {
  if (s == "null") return InitKind::null_model;
  if (s == "lasso") return InitKind::lasso;
  if (s == "truth_plus") return InitKind::truth_plus;
  if (s == "posterior") return InitKind::posterior;
  if (s == "fixed") return InitKind::fixed;
  throw ValidationError("unknown init kind '" + s + "'");
}

InitSampler InitSampler::null_model(std::size_t p) {
  InitSampler s;
  s.kind = InitKind::null_model;
  s.p = p;
  s.base = Support(p);
  return s;
}

InitSampler InitSampler::lasso(Support support) {
  InitSampler s;
  s.kind = InitKind::lasso;
  s.p = support.size();
  s.base = std::move(support);
  return s;
}

InitSampler InitSampler::fixed(Support support) {
  InitSampler s = lasso(std::move(support));
  s.kind = InitKind::fixed;
  return s;
}

InitSampler InitSampler::truth_plus(Support truth, std::size_t false_positives) {
  if (truth.weight() + false_positives > truth.size()) {
    throw ValidationError("truth_plus: not enough coordinates for the false positives");
  }
  InitSampler s;
  s.kind = InitKind::truth_plus;
  s.p = truth.size();
  s.base = std::move(truth);
  s.false_positives = false_positives;
  return s;
}

InitSampler InitSampler::posterior(const PosteriorTable& table) {
  InitSampler s;
  s.kind = InitKind::posterior;
  s.p = table.p;
  s.base = Support(table.p);
  s.table = table.prob;
  return s;
}

Support InitSampler::draw(Rng& rng) const {
  switch (kind) {
    case InitKind::null_model:
    case InitKind::lasso:
    case InitKind::fixed:
      return base;
    case InitKind::truth_plus: {
      Support s = base;
      std::vector<std::size_t> off;
      for (std::size_t j = 0; j < p; ++j) {
        if (!base.test(j)) off.push_back(j);
      }
      for (std::size_t i = 0; i < false_positives; ++i) {
        const std::size_t k = i + static_cast<std::size_t>(rng.index(off.size() - i));
        std::swap(off[i], off[k]);
        s.set(off[i], true);
      }
      return s;
    }
    case InitKind::posterior: {
      const double u = rng.uniform();
      double acc = 0.0;
      for (std::size_t i = 0; i < table.size(); ++i) {
        acc += table[i];
        if (u < acc) return Support::from_mask(p, i);
      }
      return Support::from_mask(p, table.size() - 1);
    }
  }
  return base;
}

void coupled_gibbs_step(const OlapModel& model, Support& x, Support& y, std::size_t J, Rng& rng,
                        std::vector<std::size_t>& perm) {
  const std::size_t p = model.p();
  if (J < 1 || J > p) throw ValidationError("coupled_gibbs_step: J must be in [1, p]");
  if (x.size() != p || y.size() != p) throw DimensionError("coupled_gibbs_step: wrong length");
  if (perm.size() != p) {
    perm.resize(p);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
  }
  for (std::size_t i = 0; i < J; ++i) {
    const std::size_t k = i + static_cast<std::size_t>(rng.index(p - i));
    std::swap(perm[i], perm[k]);
  }
  for (std::size_t i = 0; i < J; ++i) {
    const std::size_t j = perm[i];
    const double u = rng.uniform();
    const double qx = cond_prob(model, x, j);
    const double qy = x == y ? qx : cond_prob(model, y, j);
    x.set(j, u < qx);
    y.set(j, u < qy);
  }
}

MeetingRecord l_lag_meeting_time(const OlapModel& model, const InitSampler& init,
                                 const CouplingOptions& opts, std::uint64_t seed) {
  if (opts.L < 1) throw ValidationError("L must be >= 1");
  if (opts.J < 1 || opts.J > model.p()) throw ValidationError("J must be in [1, p]");
  if (init.p != model.p()) throw DimensionError("init sampler has the wrong dimension");
  Rng rng(seed);
  MeetingRecord rec;
  rec.L = opts.L;
  rec.seed = seed;
  rec.init_kind = init.kind;
  rec.delta0_x = init.draw(rng);
  rec.delta0_y = init.draw(rng);

  // X advances alone for L steps with the same draw pattern as gibbs_step.
  ChainState xs(rec.delta0_x, 0);
  xs.rng = rng;
  for (std::uint64_t t = 0; t < opts.L; ++t) gibbs_step(model, xs, opts.J);
  Support x = xs.delta;
  Support y = rec.delta0_y;
  rng = xs.rng;
  std::vector<std::size_t> perm = xs.perm;

  std::uint64_t t = opts.L;
  bool met = x == y;
  while (!met && t < opts.max_steps) {
    coupled_gibbs_step(model, x, y, opts.J, rng, perm);
    ++t;
    met = x == y;
  }
  rec.tau = t;
  rec.censored = !met;
  if (met) {
    for (std::uint64_t k = 0; k < opts.faithfulness_steps; ++k) {
      coupled_gibbs_step(model, x, y, opts.J, rng, perm);
      if (!(x == y)) {
        throw DiagnosticsError("coupled chains separated after meeting", x.indices());
      }
    }
  }
  return rec;
}

std::vector<MeetingRecord> meeting_records(const OlapModel& model, const InitSampler& init,
                                           const CouplingOptions& opts, std::size_t count,
                                           std::uint64_t master_seed, std::size_t threads) {
  std::vector<MeetingRecord> out(count);
  parallel_for(count, threads == 0 ? default_threads() : threads, [&](std::size_t i) {
    out[i] = l_lag_meeting_time(model, init, opts, Rng::split_seed(master_seed, i));
  });
  return out;
}

TvBound tv_bound_curve(const std::vector<MeetingRecord>& records, std::size_t t_max) {
  if (records.empty()) throw ValidationError("tv_bound_curve: no meeting records");
  const std::uint64_t L = records.front().L;
  TvBound out;
  out.d_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t_max + 1));
  for (const auto& r : records) {
    if (r.L != L) throw ValidationError("tv_bound_curve: records use different lags");
    if (r.censored) {
      ++out.censored;
      continue;
    }
    ++out.used;
    const double lag = static_cast<double>(L);
    const double excess = static_cast<double>(r.tau) - lag;
    for (std::size_t t = 0; t <= t_max; ++t) {
      const double v = std::ceil((excess - static_cast<double>(t)) / lag);
      if (v <= 0.0) break;
      out.d_hat(static_cast<Eigen::Index>(t)) += v;
    }
  }
  if (out.censored > 0) {
    out.warnings.push_back(std::to_string(out.censored) + " censored records excluded");
  }
  if (out.used == 0) throw ValidationError("tv_bound_curve: every record is censored");
  out.d_hat /= static_cast<double>(out.used);
  return out;
}

MixingEstimate mixing_time_estimate(const Eigen::VectorXd& curve, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must be in (0, 1)");
  for (Eigen::Index t = 0; t < curve.size(); ++t) {
    if (curve(t) <= threshold) return {static_cast<std::size_t>(t), true};
  }
  return {static_cast<std::size_t>(curve.size()), false};
}

}  // namespace olap
