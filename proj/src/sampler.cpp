#include "olap/sampler.hpp"

#include <chrono>
#include <numeric>

#include "olap/error.hpp"

namespace olap {

ChainState::ChainState(Support start, std::uint64_t seed)
    : delta(std::move(start)), rng(seed), perm(delta.size()) {
  std::iota(perm.begin(), perm.end(), std::size_t{0});
}

Trace::Trace(std::size_t p_) : p(p_), stride((p_ + 63) / 64) {}

Support Trace::at(std::size_t i) const {
  return Support::from_words(p, std::span<const std::uint64_t>(bits.data() + i * stride, stride));
}

void Trace::push(std::uint64_t at_step, const Support& delta, double score) {
  step.push_back(at_step);
  bits.insert(bits.end(), delta.words().begin(), delta.words().end());
  log_score.push_back(score);
}

std::unordered_map<Support, std::size_t, SupportHash> visit_counts(const Trace& trace,
                                                                   std::uint64_t burnin) {
  std::unordered_map<Support, std::size_t, SupportHash> counts;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.step[i] >= burnin) ++counts[trace.at(i)];
  }
  return counts;
}

void gibbs_step(const OlapModel& model, ChainState& state, std::size_t J) {
  const std::size_t p = model.p();
  if (J < 1 || J > p) throw ValidationError("gibbs_step: J must be in [1, p]");
  if (state.delta.size() != p) throw DimensionError("gibbs_step: state has wrong length");
  if (state.perm.size() != p) {
    state.perm.resize(p);
    std::iota(state.perm.begin(), state.perm.end(), std::size_t{0});
  }
  auto& perm = state.perm;
  for (std::size_t i = 0; i < J; ++i) {
    const std::size_t k = i + static_cast<std::size_t>(state.rng.index(p - i));
    std::swap(perm[i], perm[k]);
  }
  for (std::size_t i = 0; i < J; ++i) {
    const std::size_t j = perm[i];
    const double q = cond_prob(model, state.delta, j);
    state.delta.set(j, state.rng.uniform() < q);
  }
  ++state.step;
}

Trace run_chain(const OlapModel& model, const Support& delta0, std::uint64_t steps,
                std::uint64_t seed, const ChainOptions& opts) {
  if (delta0.size() != model.p()) throw DimensionError("run_chain: delta0 has wrong length");
  if (opts.J < 1 || opts.J > model.p()) throw ValidationError("run_chain: J must be in [1, p]");
  if (opts.thin < 1) throw ValidationError("run_chain: thin must be >= 1");
  ChainState st(delta0, seed);
  Trace tr(model.p());
  tr.push(0, st.delta, model.score(st.delta)->log_score);
  if (opts.record_timing) tr.seconds.push_back(0.0);
  using clock = std::chrono::steady_clock;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const auto t0 = clock::now();
    gibbs_step(model, st, opts.J);
    if (t % opts.thin == 0) {
      tr.push(t, st.delta, model.score(st.delta)->log_score);
      if (opts.record_timing) {
        tr.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      }
    }
  }
  tr.steps_run = steps;
  return tr;
}

Eigen::VectorXd inclusion_probs(const Trace& trace, std::uint64_t burnin) {
  if (trace.size() == 0) throw ValidationError("inclusion_probs: empty trace");
  if (burnin > trace.steps_run) throw ValidationError("inclusion_probs: burnin exceeds the chain length");
  Eigen::VectorXd inc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(trace.p));
  std::size_t kept = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.step[i] < burnin) continue;
    ++kept;
    const std::uint64_t* w = trace.bits.data() + i * trace.stride;
    for (std::size_t k = 0; k < trace.stride; ++k) {
      std::uint64_t word = w[k];
      while (word) {
        const int b = __builtin_ctzll(word);
        inc(static_cast<Eigen::Index>(k * 64 + static_cast<std::size_t>(b))) += 1.0;
        word &= word - 1;
      }
    }
  }
  if (kept == 0) throw ValidationError("inclusion_probs: no entries after burn-in");
  return inc / static_cast<double>(kept);
}

}  // namespace olap
