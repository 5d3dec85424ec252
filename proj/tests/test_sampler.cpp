#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "olap/error.hpp"
#include "olap/sampler.hpp"

using namespace olap;
using doctest::Approx;

namespace {

/// Gaussian data where each of the first `strong` columns carries a huge signal.
Dataset strong_gaussian(std::size_t p, std::size_t strong, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X = testing::random_matrix(200, static_cast<Eigen::Index>(p), rng);
  Eigen::VectorXd y = testing::random_vector(200, rng, 0.1);
  for (std::size_t j = 0; j < strong; ++j) y += 10.0 * X.col(static_cast<Eigen::Index>(j));
  return make_dataset(X, y, Family::gaussian);
}

double tv_half_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("certain inclusion is forced") {
    const OlapModel m(strong_gaussian(5, 1, 1), Eigen::VectorXd::Zero(5));
    REQUIRE(cond_prob(m, Support(5), 0) == 1.0);
    const Trace tr = run_chain(m, Support(5), 300, 3, {.J = 2});
    for (std::size_t i = 1; i < tr.size(); ++i) {
      if (tr.step[i] >= 20) CHECK(tr.at(i).test(0));
    }
  }

  TEST_CASE("J = p visits every coordinate once per step") {
    const std::size_t p = 7;
    const OlapModel m(strong_gaussian(p, p, 2), Eigen::VectorXd::Zero(p));
    ChainState st(Support(p), 4);
    gibbs_step(m, st, p);
    CHECK(st.delta == Support::full(p));
    std::vector<std::size_t> perm = st.perm;
    std::sort(perm.begin(), perm.end());
    for (std::size_t j = 0; j < p; ++j) CHECK(perm[j] == j);
  }

  TEST_CASE("each step consumes exactly 2J draws") {
    const OlapModel m(testing::random_dataset(Family::logistic, 50, 9, 2), Eigen::VectorXd::Zero(9));
    for (std::size_t J : {1, 4, 9}) {
      ChainState st(Support(9), 77);
      Rng ref(77);
      gibbs_step(m, st, J);
      gibbs_step(m, st, J);
      for (std::size_t k = 0; k < 4 * J; ++k) ref.next();
      CHECK(st.rng == ref);
    }
  }

  TEST_CASE("run_chain edge cases and determinism") {
    const OlapModel m(testing::random_dataset(Family::logistic, 60, 6, 5), Eigen::VectorXd::Zero(6));
    const Support d0 = Support::from_mask(6, 0b101);
    const Trace t0 = run_chain(m, d0, 0, 1, {.J = 1});
    REQUIRE(t0.size() == 1);
    CHECK(t0.at(0) == d0);
    CHECK(t0.log_score[0] == m.score(d0)->log_score);

    const Trace a = run_chain(m, d0, 500, 9, {.J = 3});
    const Trace b = run_chain(m, d0, 500, 9, {.J = 3});
    CHECK(a.bits == b.bits);
    CHECK(a.step == b.step);
    CHECK(a.log_score == b.log_score);
    const Trace c = run_chain(m, d0, 500, 10, {.J = 3});
    CHECK(a.bits != c.bits);

    const Trace thin = run_chain(m, d0, 500, 9, {.J = 3, .thin = 7});
    for (std::size_t i = 1; i < thin.size(); ++i) {
      CHECK(thin.step[i] % 7 == 0);
      CHECK(thin.at(i) == a.at(thin.step[i]));
    }
    CHECK_THROWS_AS(run_chain(m, d0, 10, 1, {.J = 7}), ValidationError);
    CHECK_THROWS_AS(run_chain(m, Support(5), 10, 1, {.J = 1}), DimensionError);
  }

  TEST_CASE("inclusion_probs examples") {
    Trace t(4);
    const Support d = Support::from_mask(4, 0b1010);
    for (int i = 0; i <= 10; ++i) t.push(static_cast<std::uint64_t>(i), d, 0.0);
    t.steps_run = 10;
    const Eigen::VectorXd inc = inclusion_probs(t, 3);
    CHECK(inc(0) == 0.0);
    CHECK(inc(1) == 1.0);
    CHECK(inc(2) == 0.0);
    CHECK(inc(3) == 1.0);
    CHECK_THROWS(inclusion_probs(t, 11));

    const OlapModel m(testing::random_dataset(Family::poisson, 40, 5, 8, nullptr, 0.4), Eigen::VectorXd::Zero(5));
    const Eigen::VectorXd q = inclusion_probs(run_chain(m, Support(5), 2000, 1, {.J = 2}), 100);
    CHECK(q.minCoeff() >= 0.0);
    CHECK(q.maxCoeff() <= 1.0);
  }

  TEST_CASE("p = 1 chain matches the two-state law") {
    const Dataset d = testing::random_dataset(Family::logistic, 30, 1, 6);
    const OlapModel m(d, Eigen::VectorXd::Zero(1), 0.3);
    const PosteriorTable post = enumerate_posterior(m);
    const Trace tr = run_chain(m, Support(1), 1000000, 5, {.J = 1});
    const Eigen::VectorXd inc = inclusion_probs(tr, 1000);
    CHECK(std::abs(inc(0) - post.prob[1]) <= 0.01);
  }

  TEST_CASE("stationarity is preserved by one step") {
    const std::size_t p = 4;
    const OlapModel m(testing::random_dataset(Family::logistic, 40, p, 7, nullptr, 0.6), Eigen::VectorXd::Zero(p), 0.5);
    const PosteriorTable post = enumerate_posterior(m);
    std::vector<double> cdf(post.size());
    std::partial_sum(post.prob.begin(), post.prob.end(), cdf.begin());
    std::vector<double> freq(post.size(), 0.0);
    Rng draw(99);
    const int reps = 100000;
    for (int r = 0; r < reps; ++r) {
      const double u = draw.uniform();
      std::size_t i = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      i = std::min(i, post.size() - 1);
      ChainState st(post.state(i), Rng::split_seed(5, static_cast<std::uint64_t>(r)));
      gibbs_step(m, st, 1);
      freq[st.delta.mask()] += 1.0 / reps;
    }
    CHECK(tv_half_l1(freq, post.prob) <= 0.02);
  }

  TEST_CASE("per-step cost grows no faster than J (n k^2 + k^3)") {
    const std::size_t J = 4;
    std::vector<double> ratios;
    for (auto [n, k] : std::vector<std::pair<int, int>>{{100, 4}, {400, 16}, {1600, 48}}) {
      const std::size_t p = static_cast<std::size_t>(k) + 20;
      const Dataset d = testing::random_dataset(Family::logistic, n, static_cast<Eigen::Index>(p), 3, nullptr, 0.2);
      const OlapModel m(d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)), 0.8, 1);
      Support base(p);
      for (int j = 0; j < k; ++j) base.set(static_cast<std::size_t>(j), true);
      std::vector<double> times;
      for (int rep = 0; rep < 21; ++rep) {
        ChainState st(base, static_cast<std::uint64_t>(rep));
        const auto t0 = std::chrono::steady_clock::now();
        gibbs_step(m, st, J);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
      std::nth_element(times.begin(), times.begin() + 10, times.end());
      const double cost = static_cast<double>(J) * (n * double(k) * k + double(k) * k * k);
      ratios.push_back(times[10] / cost);
    }
    MESSAGE("seconds per unit cost: " << ratios[0] << ", " << ratios[1] << ", " << ratios[2]);
    CHECK(ratios.back() <= 3.0 * ratios.front());
  }

  TEST_CASE("MaLA ratio is zero for a stay-put proposal") {
    Rng rng(1);
    const OlapModel m(testing::random_dataset(Family::logistic, 40, 5, 3), Eigen::VectorXd::Zero(5));
    const Eigen::VectorXd th = testing::random_vector(5, rng, 0.3);
    const Support d = Support::from_mask(5, 0b10011);
    CHECK(mala_log_accept_ratio(m, th, th, d, 0.01, 40.0) == Approx(0.0).epsilon(1e-14));
  }

  TEST_CASE("DA inclusion odds at theta_j = 0") {
    Rng rng(2);
    const OlapModel m(testing::random_dataset(Family::logistic, 40, 6, 3), Eigen::VectorXd::Zero(6), 0.8);
    Eigen::VectorXd th = testing::random_vector(6, rng, 0.3);
    th(2) = 0.0;
    const double rho0 = 25.0;
    const double expect = -0.8 * std::log(6.0) - 0.5 * std::log(rho0);
    for (std::uint64_t mask : {0b000000u, 0b101001u, 0b111111u}) {
      CHECK(da_inclusion_log_odds(m, th, Support::from_mask(6, mask), 2, rho0) == Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("DA log target responds to inclusion as the prior dictates") {
    Rng rng(3);
    const OlapModel m(testing::random_dataset(Family::gaussian, 30, 4, 3), Eigen::VectorXd::Zero(4), 0.8);
    const Eigen::VectorXd th = testing::random_vector(4, rng);
    const Support d = Support::from_mask(4, 0b0001);
    for (std::size_t j = 1; j < 4; ++j) {
      const double lo = da_log_target(m, th, flip(d, j, true), 9.0) - da_log_target(m, th, d, 9.0);
      CHECK(lo == Approx(da_inclusion_log_odds(m, th, d, j, 9.0)).epsilon(1e-10));
    }
  }

  TEST_CASE("DA chain determinism and adaptation") {
    const Dataset d = testing::random_dataset(Family::gaussian, 50, 5, 21);
    const OlapModel m(d, Eigen::VectorXd::Zero(5));
    DaConfig cfg;
    const Trace a = run_da_chain(m, Eigen::VectorXd::Zero(5), Support(5), 4000, cfg, 3);
    const Trace b = run_da_chain(m, Eigen::VectorXd::Zero(5), Support(5), 4000, cfg, 3);
    CHECK(a.bits == b.bits);
    CHECK(a.log_score == b.log_score);
    CHECK(a.acceptance_rate >= 0.4);
    CHECK(a.acceptance_rate <= 0.75);
    CHECK(std::isfinite(a.final_step_size));
    DaConfig bad;
    bad.adapt_target = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = DaConfig{};
    bad.rho0 = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK(cfg.rho0_for(d) == 50.0);
  }
}
