#include "olap/support.hpp"

#include <bit>
#include <sstream>

#include "olap/error.hpp"

namespace olap {

namespace {
constexpr std::size_t kWordBits = 64;

std::size_t word_count(std::size_t p) { return (p + kWordBits - 1) / kWordBits; }

void require_same_length(const Support& a, const Support& b) {
  if (a.size() != b.size()) {
    throw DimensionError("support length mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}
}  // namespace

Support::Support(std::size_t p) : p_(p), weight_(0), words_(word_count(p), 0) {}

Support Support::from_indices(std::size_t p, std::span<const std::size_t> active) {
  Support s(p);
  for (auto j : active) s.set(j, true);
  return s;
}

Support Support::from_one_based(std::size_t p, std::span<const std::size_t> active) {
  Support s(p);
  for (auto j : active) {
    if (j == 0 || j > p) throw DimensionError("1-based index out of range: " + std::to_string(j));
    s.set(j - 1, true);
  }
  return s;
}

Support Support::from_mask(std::size_t p, std::uint64_t mask) {
  if (p > kWordBits) throw DimensionError("from_mask requires p <= 64");
  Support s(p);
  if (p < kWordBits) mask &= (std::uint64_t{1} << p) - 1;
  if (p > 0) s.words_[0] = mask;
  s.weight_ = static_cast<std::size_t>(std::popcount(mask));
  return s;
}

Support Support::full(std::size_t p) {
  Support s(p);
  for (std::size_t j = 0; j < p; ++j) s.set(j, true);
  return s;
}

Support Support::from_words(std::size_t p, std::span<const std::uint64_t> words) {
  Support s(p);
  if (words.size() != s.words_.size()) throw DimensionError("from_words: wrong word count");
  std::size_t weight = 0;
  for (std::size_t k = 0; k < words.size(); ++k) {
    s.words_[k] = words[k];
    weight += static_cast<std::size_t>(std::popcount(words[k]));
  }
  if (p % kWordBits != 0 && !words.empty() && (words.back() >> (p % kWordBits)) != 0) {
    throw DimensionError("from_words: bits set beyond p");
  }
  s.weight_ = weight;
  return s;
}

bool Support::test(std::size_t j) const {
  if (j >= p_) throw DimensionError("index " + std::to_string(j) + " out of range for p=" + std::to_string(p_));
  return (words_[j / kWordBits] >> (j % kWordBits)) & 1U;
}

void Support::set(std::size_t j, bool value) {
  if (j >= p_) throw DimensionError("index " + std::to_string(j) + " out of range for p=" + std::to_string(p_));
  auto& w = words_[j / kWordBits];
  const std::uint64_t bit = std::uint64_t{1} << (j % kWordBits);
  const bool old = w & bit;
  if (old == value) return;
  if (value) {
    w |= bit;
    ++weight_;
  } else {
    w &= ~bit;
    --weight_;
  }
}

std::vector<std::size_t> Support::indices() const {
  std::vector<std::size_t> out;
  out.reserve(weight_);
  for (std::size_t k = 0; k < words_.size(); ++k) {
    std::uint64_t w = words_[k];
    while (w) {
      out.push_back(k * kWordBits + static_cast<std::size_t>(std::countr_zero(w)));
      w &= w - 1;
    }
  }
  return out;
}

std::vector<std::size_t> Support::one_based() const {
  auto idx = indices();
  for (auto& j : idx) ++j;
  return idx;
}

std::uint64_t Support::mask() const {
  if (p_ > kWordBits) throw DimensionError("mask() requires p <= 64");
  return words_.empty() ? 0 : words_[0];
}

std::size_t Support::hash() const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ p_;
  for (auto w : words_) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ULL;
  }
  return static_cast<std::size_t>(h ^ (h >> 31));
}

std::string Support::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (auto j : one_based()) {
    if (!first) os << ',';
    os << j;
    first = false;
  }
  os << '}';
  return os.str();
}

std::strong_ordering operator<=>(const Support& a, const Support& b) {
  if (a.p_ != b.p_) return a.p_ <=> b.p_;
  for (std::size_t k = 0; k < a.words_.size(); ++k) {
    const std::uint64_t diff = a.words_[k] ^ b.words_[k];
    if (diff == 0) continue;
    const std::uint64_t lowest = diff & (~diff + 1);
    return (a.words_[k] & lowest) ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

Support meet(const Support& a, const Support& b) {
  require_same_length(a, b);
  Support out(a.size());
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < a.words().size(); ++k) {
    std::uint64_t w = a.words()[k] & b.words()[k];
    while (w) {
      active.push_back(k * kWordBits + static_cast<std::size_t>(std::countr_zero(w)));
      w &= w - 1;
    }
  }
  for (auto j : active) out.set(j, true);
  return out;
}

bool is_subset(const Support& a, const Support& b) {
  require_same_length(a, b);
  for (std::size_t k = 0; k < a.words().size(); ++k) {
    if (a.words()[k] & ~b.words()[k]) return false;
  }
  return true;
}

Support flip(const Support& delta, std::size_t j, bool value) {
  Support out = delta;
  out.set(j, value);
  return out;
}

Eigen::VectorXd embed(const Eigen::VectorXd& w, const Support& delta) {
  if (static_cast<std::size_t>(w.size()) != delta.weight()) {
    throw DimensionError("embed: |w| = " + std::to_string(w.size()) + " but |delta|_0 = " +
                         std::to_string(delta.weight()));
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(delta.size()));
  Eigen::Index i = 0;
  for (auto j : delta.indices()) theta(static_cast<Eigen::Index>(j)) = w(i++);
  return theta;
}

Eigen::VectorXd extract(const Eigen::VectorXd& theta, const Support& delta) {
  if (static_cast<std::size_t>(theta.size()) != delta.size()) {
    throw DimensionError("extract: theta has length " + std::to_string(theta.size()) +
                         " but p = " + std::to_string(delta.size()));
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(delta.weight()));
  Eigen::Index i = 0;
  for (auto j : delta.indices()) w(i++) = theta(static_cast<Eigen::Index>(j));
  return w;
}

}  // namespace olap
