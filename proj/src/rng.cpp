#include "olap/rng.hpp"

#include <sstream>

namespace olap {

namespace {
// Domain-separation constant for derived streams.
constexpr std::uint64_t kStreamTag = 0x6f6c6170'76730001ULL;

std::seed_seq make_seq(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto v : parts) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  return std::seed_seq(words.begin(), words.end());
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
  auto seq = make_seq({seed});
  engine_.seed(seq);
}

Rng Rng::derive(std::uint64_t master, std::uint64_t stream) {
  Rng r;
  auto seq = make_seq({master, stream, kStreamTag});
  r.engine_.seed(seq);
  return r;
}

std::uint64_t Rng::split_seed(std::uint64_t master, std::uint64_t stream) {
  return derive(master, stream).next();
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_ << ' ' << normal_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> engine_ >> normal_;
}

}  // namespace olap
