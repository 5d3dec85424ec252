#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "olap/glm.hpp"
#include "olap/rng.hpp"
#include "olap/support.hpp"

namespace testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, olap::Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = scale * rng.normal();
  return X;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, olap::Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

/// Small dataset with responses drawn from the family at theta.
inline olap::Dataset random_dataset(olap::Family f, Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                    const Eigen::VectorXd* theta = nullptr, double xscale = 1.0) {
  olap::Rng rng(seed);
  Eigen::MatrixXd X = random_matrix(n, p, rng, xscale);
  Eigen::VectorXd th = theta ? *theta : random_vector(p, rng, 0.5);
  Eigen::VectorXd eta = X * th;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (f) {
      case olap::Family::logistic:
        y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-eta(i))) ? 1.0 : 0.0;
        break;
      case olap::Family::poisson: {
        const double lam = std::exp(std::min(eta(i), 5.0));
        double k = 0.0, prod = rng.uniform();
        const double lim = std::exp(-lam);
        while (prod > lim) {
          prod *= rng.uniform();
          k += 1.0;
        }
        y(i) = k;
        break;
      }
      case olap::Family::gaussian:
        y(i) = eta(i) + rng.normal();
        break;
    }
  }
  return olap::make_dataset(std::move(X), std::move(y), f);
}

inline olap::Support random_support(std::size_t p, olap::Rng& rng, std::size_t max_weight) {
  olap::Support s(p);
  const std::size_t k = static_cast<std::size_t>(rng.index(std::min(max_weight, p) + 1));
  while (s.weight() < k) s.set(static_cast<std::size_t>(rng.index(p)), true);
  return s;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.size() == 0 && b.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
