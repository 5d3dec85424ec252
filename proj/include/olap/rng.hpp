#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace olap {

/// Seedable generator with exact stream control.
///
/// Every chain, coupled pair and replication owns one of these. Uniform and
/// index draws consume exactly one 64-bit engine output each, so the number
/// of engine calls made by a Gibbs step depends only on J. The full state
/// (engine plus the cached normal deviate) round-trips through state()/
/// set_state().
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream for (master, stream). Used for replication seeds,
  /// coupling records and CV fold assignment.
  static Rng derive(std::uint64_t master, std::uint64_t stream);

  /// Counter-mode seed split: the seed handed to replication `stream` of a
  /// run with `master`. Stable across releases.
  static std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }

  // UniformRandomBitGenerator, so standard distributions can draw from it.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Multiply-shift, single draw; bias is
  /// below n / 2^64.
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  bool bernoulli(double q) { return uniform() < q; }

  double normal() { return normal_(engine_); }

  std::string state() const;
  void set_state(const std::string& s);

  friend bool operator==(const Rng& a, const Rng& b) { return a.state() == b.state(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace olap
