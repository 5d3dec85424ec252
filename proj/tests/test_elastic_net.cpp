#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "olap/elastic_net.hpp"
#include "olap/error.hpp"

using namespace olap;
using doctest::Approx;

namespace {

void check_kkt(const Dataset& d, const NetConfig& cfg, const NetResult& r) {
  const Eigen::VectorXd eta = d.X * r.theta_tilde;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu(i) = link_eval(d.family, eta(i), 1);
  const Eigen::VectorXd grad = d.X.transpose() * (mu - d.y);
  for (Eigen::Index j = 0; j < grad.size(); ++j) {
    const double t = r.theta_tilde(j);
    if (t != 0.0) {
      CHECK(std::abs(grad(j) + cfg.lambda2 * t + cfg.lambda1 * (t > 0 ? 1 : -1)) <= cfg.tol);
    } else {
      CHECK(std::abs(grad(j)) <= cfg.lambda1 + cfg.tol);
    }
  }
}

}  // namespace

TEST_SUITE("elastic_net") {
  TEST_CASE("large lambda gives the zero vector") {
    for (auto f : {Family::logistic, Family::poisson, Family::gaussian}) {
      const Dataset d = testing::random_dataset(f, 60, 8, 5);
      NetConfig cfg;
      cfg.lambda1 = lambda_max(d);
      const NetResult r = fit_elastic_net(d, cfg);
      CHECK(r.converged);
      CHECK(r.theta_tilde.isZero(0.0));
      cfg.lambda1 *= 1.5;
      CHECK(fit_elastic_net(d, cfg).theta_tilde.isZero(0.0));
      cfg.lambda1 = 0.9 * lambda_max(d);
      CHECK_FALSE(fit_elastic_net(d, cfg).theta_tilde.isZero(0.0));
    }
  }

  TEST_CASE("soft-threshold closed form") {
    Eigen::MatrixXd X(1, 1);
    X << 1;
    Eigen::VectorXd y(1);
    y << 2;
    const Dataset d = make_dataset(X, y, Family::gaussian);
    NetConfig cfg;
    cfg.lambda1 = 1.0;
    for (bool standardize : {true, false}) {
      cfg.standardize = standardize;
      const NetResult r = fit_elastic_net(d, cfg);
      CHECK(r.theta_tilde(0) == Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("unpenalised gaussian fit is least squares") {
    const Dataset d = testing::random_dataset(Family::gaussian, 50, 5, 19);
    NetConfig cfg;
    cfg.tol = 1e-10;
    const NetResult r = fit_elastic_net(d, cfg);
    const Eigen::VectorXd ls = (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
    CHECK(testing::max_abs_diff(r.theta_tilde, ls) < 1e-8);
  }

  TEST_CASE("ridge matches a direct Newton solve") {
    for (auto f : {Family::logistic, Family::poisson}) {
      const Dataset d = testing::random_dataset(f, 80, 6, 23, nullptr, 0.5);
      NetConfig cfg;
      cfg.lambda2 = 2.0;
      cfg.tol = 1e-10;
      const NetResult r = fit_elastic_net(d, cfg);
      Eigen::VectorXd th = Eigen::VectorXd::Zero(6);
      for (int it = 0; it < 50; ++it) {
        const Eigen::VectorXd eta = d.X * th;
        Eigen::VectorXd mu(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
          mu(i) = link_eval(f, eta(i), 1);
          w(i) = link_eval(f, eta(i), 2);
        }
        const Eigen::VectorXd g = d.X.transpose() * (mu - d.y) + cfg.lambda2 * th;
        const Eigen::MatrixXd H =
            d.X.transpose() * w.asDiagonal() * d.X + cfg.lambda2 * Eigen::MatrixXd::Identity(6, 6);
        th -= H.llt().solve(g);
      }
      CHECK(testing::max_abs_diff(r.theta_tilde, th) < 1e-6);
    }
  }

  TEST_CASE("KKT certificate and monotone objective") {
    Rng rng(31);
    for (auto f : {Family::logistic, Family::poisson, Family::gaussian}) {
      for (int t = 0; t < 6; ++t) {
        const Dataset d = testing::random_dataset(f, 70, 25, 400 + t, nullptr, 0.5);
        NetConfig cfg;
        cfg.lambda1 = lambda_max(d) * (0.05 + 0.5 * rng.uniform());
        cfg.lambda2 = t % 2 ? 0.5 : 0.0;
        cfg.standardize = t % 3 != 0;
        const NetResult r = fit_elastic_net(d, cfg);
        INFO("family " << to_string(f) << " t " << t << " iters " << r.iterations << " kkt " << r.kkt_violation);
        REQUIRE(r.converged);
        CHECK(r.kkt_violation <= cfg.tol);
        CHECK(net_kkt_violation(d, r.theta_tilde, 0.0, cfg) <= cfg.tol);
        check_kkt(d, cfg, r);
        for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
          CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-12 * std::max(1.0, std::abs(r.objective_trace[k - 1])));
        }
        CHECK(r.objective == Approx(net_objective(d, r.theta_tilde, 0.0, cfg)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("warm start reaches the same solution") {
    const Dataset d = testing::random_dataset(Family::logistic, 90, 30, 77);
    NetConfig cfg;
    cfg.lambda1 = 0.3 * lambda_max(d);
    const NetResult a = fit_elastic_net(d, cfg);
    NetConfig c2 = cfg;
    c2.lambda1 = 0.2 * lambda_max(d);
    const NetResult b0 = fit_elastic_net(d, c2);
    const NetResult b1 = fit_elastic_net(d, c2, &a);
    CHECK(testing::max_abs_diff(b0.theta_tilde, b1.theta_tilde) < 1e-5);
  }

  TEST_CASE("intercept is unpenalised") {
    Rng rng(3);
    Eigen::MatrixXd X = testing::random_matrix(200, 3, rng);
    Eigen::VectorXd y = (X.col(0).array() + 4.0).matrix() + testing::random_vector(200, rng, 0.1);
    const Dataset d = make_dataset(X, y, Family::gaussian);
    NetConfig cfg;
    cfg.intercept = true;
    cfg.lambda1 = 1.0;
    const NetResult r = fit_elastic_net(d, cfg);
    CHECK(r.intercept == Approx(4.0).epsilon(0.05));
    CHECK(r.theta_tilde(0) == Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("config validation") {
    NetConfig cfg;
    cfg.lambda1 = -1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = NetConfig{};
    cfg.tol = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }

  TEST_CASE("non-convergence returns the best iterate flagged") {
    const Dataset d = testing::random_dataset(Family::logistic, 60, 20, 5);
    NetConfig cfg;
    cfg.lambda1 = 0.05 * lambda_max(d);
    cfg.max_iter = 1;
    cfg.tol = 1e-14;
    NetResult r;
    CHECK_NOTHROW(r = fit_elastic_net(d, cfg));
    CHECK_FALSE(r.converged);
    CHECK(r.theta_tilde.allFinite());
  }

  TEST_CASE("cv_select examples") {
    const Dataset d = testing::random_dataset(Family::logistic, 60, 5, 8);
    auto r = cv_select(d, Family::logistic, 3, {0.7}, 0.0, 1);
    CHECK(r.config.lambda1 == 0.7);
    r = cv_select(d, Family::logistic, 3, {2.0, 2.0, 1.0}, 0.0, 1);
    CHECK(r.lambdas == std::vector<double>{2.0, 1.0});
    CHECK_THROWS_AS(cv_select(d, Family::logistic, 3, {1.0, 2.0}, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(cv_select(d, Family::logistic, 1, {1.0}, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(cv_select(d, Family::logistic, 3, {}, 0.0, 1), ValidationError);

    const auto a = cv_select(d, Family::logistic, 4, lambda_grid(d, 10, 0.05), 0.0, 99);
    const auto b = cv_select(d, Family::logistic, 4, lambda_grid(d, 10, 0.05), 0.0, 99);
    CHECK(a.config.lambda1 == b.config.lambda1);
    CHECK(a.mean_deviance == b.mean_deviance);
  }

  TEST_CASE("cv prefers the null model on pure noise") {
    int wins = 0;
    for (int rep = 0; rep < 20; ++rep) {
      Rng rng(1000 + rep);
      Eigen::MatrixXd X = testing::random_matrix(40, 10, rng);
      Eigen::VectorXd y = testing::random_vector(40, rng);
      const Dataset d = make_dataset(X, y, Family::gaussian);
      const auto r = cv_select(d, Family::gaussian, 5, {10.0, 0.001}, 0.0, rep);
      if (r.config.lambda1 == 10.0) ++wins;
    }
    CHECK(wins > 10);
  }

  TEST_CASE("constant logistic fold is excluded with a warning") {
    Eigen::MatrixXd X(8, 1);
    X << 1, 2, 3, 4, 5, 6, 7, 8;
    Eigen::VectorXd y(8);
    y << 0, 0, 0, 0, 0, 0, 0, 1;
    const Dataset d = make_dataset(X, y, Family::logistic);
    const auto r = cv_select(d, Family::logistic, 4, {1.0, 0.1}, 0.0, 2);
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.folds_used.front() < 4);
  }

  TEST_CASE("support_of examples") {
    NetResult r;
    r.theta_tilde = Eigen::VectorXd::Zero(3);
    CHECK(support_of(r, 1e-8).empty());
    r.theta_tilde = Eigen::VectorXd(2);
    r.theta_tilde << 1e-12, 0.5;
    CHECK(support_of(r, 1e-8) == Support::from_mask(2, 0b10));
    Rng rng(4);
    r.theta_tilde = testing::random_vector(50, rng, 0.01);
    for (double tol : {1e-4, 1e-3, 5e-3}) CHECK(is_subset(support_of(r, tol * 2), support_of(r, tol)));
  }

  TEST_CASE("lambda grid is log-spaced and descending") {
    const Dataset d = testing::random_dataset(Family::poisson, 40, 6, 9);
    const auto g = lambda_grid(d, 5, 0.01);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == Approx(lambda_max(d)));
    CHECK(g.back() == Approx(0.01 * lambda_max(d)));
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == Approx(std::pow(0.01, 0.25)));
  }
}
