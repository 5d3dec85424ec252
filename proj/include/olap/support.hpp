#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace olap {

/// A model delta in {0,1}^p stored as packed 64-bit words.
///
/// Indices are 0-based in the C++ API; serialized forms (reports, CLI) use
/// 1-based index lists. The cached weight always equals the popcount.
/// Ordering is lexicographic on (bit 0, bit 1, ...) with 0 < 1.
class Support {
 public:
  Support() = default;
  explicit Support(std::size_t p);

  static Support from_indices(std::size_t p, std::span<const std::size_t> active);
  static Support from_one_based(std::size_t p, std::span<const std::size_t> active);
  /// Bit j of `mask` becomes coordinate j. Requires p <= 64.
  static Support from_mask(std::size_t p, std::uint64_t mask);
  static Support full(std::size_t p);
  /// Inverse of words(); bits beyond p must be zero.
  static Support from_words(std::size_t p, std::span<const std::uint64_t> words);

  std::size_t size() const { return p_; }
  std::size_t weight() const { return weight_; }
  bool empty() const { return weight_ == 0; }
  bool test(std::size_t j) const;
  void set(std::size_t j, bool value);

  std::vector<std::size_t> indices() const;
  std::vector<std::size_t> one_based() const;
  /// Integer value sum_j bit_j 2^j. Requires p <= 64.
  std::uint64_t mask() const;
  const std::vector<std::uint64_t>& words() const { return words_; }
  std::size_t hash() const;
  std::string to_string() const;

  friend bool operator==(const Support& a, const Support& b) {
    return a.p_ == b.p_ && a.words_ == b.words_;
  }
  friend std::strong_ordering operator<=>(const Support& a, const Support& b);

 private:
  std::size_t p_ = 0;
  std::size_t weight_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Component-wise minimum.
Support meet(const Support& a, const Support& b);
/// a ⊆ b, i.e. meet(a, b) == a.
bool is_subset(const Support& a, const Support& b);
/// Copy of delta with coordinate j (0-based) set to value.
Support flip(const Support& delta, std::size_t j, bool value);

/// (w, 0)_delta: places w_i at the i-th active coordinate, zeros elsewhere.
Eigen::VectorXd embed(const Eigen::VectorXd& w, const Support& delta);
/// [theta]_delta: the active coordinates of theta in increasing index order.
Eigen::VectorXd extract(const Eigen::VectorXd& theta, const Support& delta);

struct SupportHash {
  std::size_t operator()(const Support& s) const { return s.hash(); }
};

}  // namespace olap

template <>
struct std::hash<olap::Support> {
  std::size_t operator()(const olap::Support& s) const { return s.hash(); }
};
