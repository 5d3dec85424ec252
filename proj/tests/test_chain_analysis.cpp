#include "doctest.h"

#include <bit>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "olap/chain_analysis.hpp"
#include "olap/error.hpp"

using namespace olap;
using doctest::Approx;

namespace {

FiniteChain two_state(double a) {
  Eigen::MatrixXd K(2, 2);
  K << 1 - a, a, a, 1 - a;
  return make_chain(K, Eigen::Vector2d(0.5, 0.5));
}

std::uint64_t bits1(std::initializer_list<int> one_based) {
  std::uint64_t m = 0;
  for (int j : one_based) m |= std::uint64_t{1} << (j - 1);
  return m;
}

}  // namespace

TEST_SUITE("chain_analysis") {
  TEST_CASE("two-state hand instance") {
    const FiniteChain c = two_state(0.2);
    CHECK(c.p == 1);
    CHECK(spectral_gap(c) == Approx(0.4).epsilon(1e-12));
    CHECK(conductance(c, 0.0) == Approx(0.4).epsilon(1e-12));
    const PathBound pb = canonical_path_bound(c, Support::full(1), {Support(1), Support::full(1)});
    CHECK(pb.m == Approx(2.5).epsilon(1e-12));
    CHECK(pb.max_path_length == 1);
    const BoundsReport rep = verify_bounds(c, Support::full(1), {0.02, 0.05});
    CHECK(rep.all_pass());
    for (const auto& ch : rep.checks) {
      if (ch.name == "path_bound_gap") CHECK(ch.lhs == Approx(ch.rhs).epsilon(1e-12));
    }
    CHECK_THROWS_AS(verify_bounds(c, Support::full(1), {0.5}), ValidationError);
  }

  TEST_CASE("spectral gap extremes") {
    const Eigen::Vector4d pi(0.1, 0.2, 0.3, 0.4);
    CHECK(spectral_gap(make_chain(Eigen::MatrixXd::Identity(4, 4), pi)) == Approx(0.0).epsilon(1e-12));
    const Eigen::MatrixXd perfect = Eigen::VectorXd::Ones(4) * pi.transpose();
    CHECK(spectral_gap(make_chain(perfect, pi)) == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(make_chain(Eigen::MatrixXd::Identity(3, 3), pi), DimensionError);
  }

  TEST_CASE("conductance properties") {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(4, 4);
    K.block(0, 0, 2, 2).setConstant(0.5);
    K.block(2, 2, 2, 2).setConstant(0.5);
    CHECK(conductance(make_chain(K, Eigen::Vector4d::Constant(0.25)), 0.0) == 0.0);

    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
      const FiniteChain c = random_reversible_chain(3, rng);
      const auto prof = conductance_profile(c, {0.0, 0.05, 0.1, 0.2, 0.4});
      for (std::size_t k = 1; k < prof.size(); ++k) CHECK(prof[k].phi >= prof[k - 1].phi - 1e-15);
    }
    CHECK_THROWS_AS(conductance(two_state(0.2), 0.5), ValidationError);
    CHECK_THROWS_AS(conductance(random_reversible_chain(5, rng)), ValidationError);
  }

  TEST_CASE("canonical paths") {
    const std::uint64_t star = bits1({1, 2});
    const auto pth = path_to_target(bits1({2, 3, 4}), star);
    // drop 4, drop 3, add 1
    REQUIRE(pth.size() == 4);
    CHECK(pth[1] == bits1({2, 3}));
    CHECK(pth[2] == bits1({2}));
    CHECK(pth[3] == star);

    for (std::uint64_t x = 0; x < 64; ++x) {
      for (std::uint64_t y = 0; y < 64; ++y) {
        const auto path = canonical_path(x, y, star);
        CHECK(path.front() == x);
        CHECK(path.back() == y);
        std::set<std::uint64_t> seen(path.begin(), path.end());
        CHECK(seen.size() == path.size());
        for (std::size_t k = 1; k < path.size(); ++k) CHECK(std::popcount(path[k] ^ path[k - 1]) == 1);
      }
    }
  }

  TEST_CASE("path length: 2(2 s_star + J0) holds, 2(s_star + J0) does not") {
    const std::uint64_t star = bits1({1, 2});
    const std::size_t s_star = 2, J0 = 0;
    std::size_t worst = 0;
    for (std::uint64_t x = 0; x < 32; ++x) {
      for (std::uint64_t y = 0; y < 32; ++y) {
        if (std::popcount(x) > 2 || std::popcount(y) > 2) continue;
        worst = std::max(worst, canonical_path(x, y, star).size() - 1);
      }
    }
    CHECK(worst <= 2 * (2 * s_star + J0));
    const auto gamma = canonical_path(bits1({3, 4}), bits1({2, 5}), star);
    CHECK(gamma.size() - 1 == 6);
    CHECK(gamma.size() - 1 > 2 * (s_star + J0));
  }

  TEST_CASE("OLAP transition matrix") {
    for (auto f : {Family::logistic, Family::poisson, Family::gaussian}) {
      for (std::size_t p : {1u, 3u, 6u}) {
        const Dataset d = testing::random_dataset(f, 40, static_cast<Eigen::Index>(p), 3 + p, nullptr, 0.5);
        const OlapModel m(d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)), 0.8);
        const FiniteChain c = build_transition_matrix(m);
        const ChainCheck chk = check_chain(c);
        CHECK(chk.row_sum_error <= 1e-12);
        CHECK(chk.stationarity_error <= 1e-10);
        CHECK(chk.reversibility_error <= 1e-12);
        CHECK(chk.min_eigenvalue >= -1e-10);
        const PosteriorTable post = enumerate_posterior(m);
        for (std::size_t i = 0; i < post.size(); ++i) CHECK(c.pi(static_cast<Eigen::Index>(i)) == Approx(post.prob[i]).epsilon(1e-12));
        if (p == 1) {
          const double q = cond_prob(m, Support(1), 0);
          CHECK(c.K.coeff(0, 1) == Approx(q).epsilon(1e-15));
          CHECK(c.K.coeff(1, 0) == Approx(1 - q).epsilon(1e-15));
        }
      }
    }
    const OlapModel big(testing::random_dataset(Family::gaussian, 20, 13, 1), Eigen::VectorXd::Zero(13));
    CHECK_THROWS_AS(build_transition_matrix(big), ValidationError);
  }

  TEST_CASE("tv_curve examples") {
    Rng rng(5);
    const FiniteChain c = random_reversible_chain(3, rng);
    CHECK(tv_curve(c, c.pi, 20).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index x = 0; x < 8; ++x) {
      Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(8);
      pi0(x) = 1.0;
      const Eigen::VectorXd tv = tv_curve(c, pi0, 60);
      CHECK(tv(0) == Approx(2 * (1 - c.pi(x))).epsilon(1e-14));
      for (Eigen::Index t = 1; t < tv.size(); ++t) CHECK(tv(t) <= tv(t - 1) + 1e-14);
    }
    CHECK_THROWS(tv_curve(c, Eigen::VectorXd::Ones(8), 3));
    Eigen::VectorXd cur(4);
    cur << 1.0, 0.6, 0.3, 0.1;
    CHECK(steps_to_tv(cur, 0.5) == 2);
    CHECK(steps_to_tv(cur, 0.01) == 4);
  }

  TEST_CASE("Dirichlet ratios bound the gap from above") {
    Rng rng(8);
    for (int t = 0; t < 20; ++t) {
      const FiniteChain c = random_reversible_chain(3, rng);
      const double lam = spectral_gap(c);
      for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd f = testing::random_vector(8, rng);
        CHECK(dirichlet_form(c, f) / variance_pi(c, f) >= lam - 1e-12);
      }
      CHECK(zeta_gap_upper_bound(c, 0.0, 200, rng) >= lam - 1e-12);
    }
  }

  TEST_CASE("bounds on random reversible chains") {
    Rng rng(11);
    for (int t = 0; t < 100; ++t) {
      const std::size_t p = 1 + static_cast<std::size_t>(t % 4);
      const FiniteChain c = random_reversible_chain(p, rng);
      REQUIRE(check_chain(c).reversibility_error < 1e-15);
      const Support star = Support::from_mask(p, rng.index(std::size_t{1} << p));
      const BoundsReport rep = verify_bounds(c, star, {0.02, 0.05});
      CHECK(rep.violations() == 0);
    }
  }

  TEST_CASE("bounds on a p = 3 OLAP chain") {
    const Dataset d = testing::random_dataset(Family::gaussian, 30, 3, 4);
    const OlapModel m(d, Eigen::VectorXd::Zero(3));
    const FiniteChain c = build_transition_matrix(m);
    const PosteriorTable post = enumerate_posterior(m);
    const BoundsReport rep = verify_bounds(c, post.state(post.mode()), {0.02, 0.05});
    CHECK(rep.all_pass());
  }
}
