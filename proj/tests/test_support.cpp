#include "doctest.h"

#include <set>
#include <unordered_set>
#include <vector>

#include "helpers.hpp"
#include "olap/error.hpp"
#include "olap/rng.hpp"
#include "olap/support.hpp"

using namespace olap;

namespace {
Support bits(std::initializer_list<int> b) {
  Support s(b.size());
  std::size_t j = 0;
  for (int v : b) s.set(j++, v != 0);
  return s;
}
}  // namespace

TEST_SUITE("support") {
  TEST_CASE("meet examples") {
    CHECK(meet(bits({1, 0, 1}), bits({1, 1, 0})) == bits({1, 0, 0}));
    const Support d = bits({1, 1, 0, 1});
    CHECK(meet(d, d) == d);
    CHECK(meet(d, Support(4)) == Support(4));
    CHECK_THROWS_AS(meet(Support(3), Support(4)), DimensionError);
  }

  TEST_CASE("is_subset examples") {
    CHECK(is_subset(bits({1, 0, 0}), bits({1, 1, 0})));
    CHECK_FALSE(is_subset(bits({0, 1}), bits({1, 0})));
    Rng rng(3);
    for (int t = 0; t < 50; ++t) CHECK(is_subset(Support(7), testing::random_support(7, rng, 7)));
    CHECK_THROWS_AS(is_subset(Support(2), Support(5)), DimensionError);
  }

  TEST_CASE("flip examples") {
    CHECK(flip(Support(2), 0, true) == bits({1, 0}));
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      const Support d = testing::random_support(9, rng, 9);
      const std::size_t j = rng.index(9);
      CHECK(flip(d, j, d.test(j)) == d);
      const auto dw = flip(d, j, true).weight() - d.weight();
      CHECK((dw == 0 || dw == 1));
      CHECK(flip(flip(d, j, !d.test(j)), j, d.test(j)) == d);
    }
    CHECK_THROWS(flip(Support(3), 3, true));
  }

  TEST_CASE("embed and extract") {
    Eigen::VectorXd w(2);
    w << 5, 7;
    Eigen::VectorXd e(4);
    e << 0, 5, 0, 7;
    CHECK(embed(w, bits({0, 1, 0, 1})) == e);
    Eigen::VectorXd th(3);
    th << 3, 1, 4;
    Eigen::VectorXd x(2);
    x << 3, 4;
    CHECK(extract(th, bits({1, 0, 1})) == x);
    CHECK_THROWS_AS(embed(Eigen::VectorXd::Ones(3), bits({1, 0, 1})), DimensionError);
    CHECK_THROWS_AS(extract(Eigen::VectorXd::Ones(2), bits({1, 0, 1})), DimensionError);

    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
      const std::size_t p = 1 + rng.index(150);
      const Support d = testing::random_support(p, rng, p);
      const Eigen::VectorXd v = testing::random_vector(static_cast<Eigen::Index>(d.weight()), rng);
      CHECK(extract(embed(v, d), d) == v);
    }
  }

  TEST_CASE("weight cache tracks set bits") {
    Rng rng(17);
    Support s(130);
    std::set<std::size_t> ref;
    for (int t = 0; t < 2000; ++t) {
      const std::size_t j = rng.index(130);
      const bool v = rng.bernoulli(0.5);
      s.set(j, v);
      if (v) ref.insert(j); else ref.erase(j);
      REQUIRE(s.weight() == ref.size());
    }
    CHECK(std::vector<std::size_t>(ref.begin(), ref.end()) == s.indices());
  }

  TEST_CASE("meet algebra and subset order") {
    Rng rng(23);
    for (int t = 0; t < 200; ++t) {
      const std::size_t p = 1 + rng.index(70);
      const Support a = testing::random_support(p, rng, p), b = testing::random_support(p, rng, p),
                    c = testing::random_support(p, rng, p);
      CHECK(meet(a, b) == meet(b, a));
      CHECK(meet(meet(a, b), c) == meet(a, meet(b, c)));
      CHECK(is_subset(a, b) == (meet(a, b) == a));
      CHECK(is_subset(meet(a, b), a));
      if (is_subset(a, b) && is_subset(b, c)) CHECK(is_subset(a, c));
      if (is_subset(a, b) && is_subset(b, a)) CHECK(a == b);
    }
  }

  TEST_CASE("external indices are 1-based and sorted") {
    const std::vector<std::size_t> idx{4, 1};
    const Support s = Support::from_one_based(5, idx);
    CHECK(s.one_based() == std::vector<std::size_t>{1, 4});
    CHECK(s.to_string() == "{1,4}");
    CHECK_THROWS(Support::from_one_based(5, std::vector<std::size_t>{0}));
    CHECK_THROWS(Support::from_one_based(5, std::vector<std::size_t>{6}));
  }

  TEST_CASE("hash and order are consistent with equality") {
    Rng rng(29);
    std::unordered_set<Support> hs;
    std::set<Support> os;
    for (int t = 0; t < 500; ++t) {
      const Support s = testing::random_support(6, rng, 6);
      hs.insert(s);
      os.insert(s);
    }
    CHECK(hs.size() == os.size());
    CHECK(Support::from_mask(6, 5) == Support::from_mask(6, 5));
    CHECK(Support::from_mask(6, 5).hash() == Support::from_mask(6, 5).hash());
    CHECK(Support::from_mask(6, 5).mask() == 5u);
  }

  TEST_CASE("from_words rejects stray bits") {
    const std::vector<std::uint64_t> ok{0b101};
    CHECK(Support::from_words(3, ok) == Support::from_mask(3, 5));
    const std::vector<std::uint64_t> bad{0b1000};
    CHECK_THROWS(Support::from_words(3, bad));
  }
}
