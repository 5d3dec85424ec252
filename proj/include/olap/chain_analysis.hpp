#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "olap/olap.hpp"
#include "olap/rng.hpp"
#include "olap/support.hpp"

namespace olap {

using SparseKernel = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Explicit chain on N states with stationary law pi. When N = 2^p the
/// states are the supports of length p, indexed by the integer value of
/// the bit vector (bit j = coordinate j); otherwise p = 0.
struct FiniteChain {
  std::size_t p = 0;
  SparseKernel K;
  Eigen::VectorXd pi;

  std::size_t size() const { return static_cast<std::size_t>(pi.size()); }
  Support state(std::size_t i) const { return Support::from_mask(p, i); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(K); }
};

/// J = 1 random-scan Gibbs kernel of the OLAP posterior:
/// K(d, d^(j,b)) = P(b) / p, with the same-value mass on the diagonal.
FiniteChain build_transition_matrix(const OlapModel& model, std::size_t max_p = 12,
                                    std::size_t threads = 1);

/// Wraps an explicit kernel. Throws DimensionError if sizes disagree.
FiniteChain make_chain(const Eigen::MatrixXd& K, const Eigen::VectorXd& pi);

/// Lazy Metropolis chain on {0,1}^p with single-flip proposals and a random
/// stationary law; reversible and positive by construction.
FiniteChain random_reversible_chain(std::size_t p, Rng& rng, double spread = 1.5);

struct ChainCheck {
  double row_sum_error = 0.0;     // max_x |sum_y K(x,y) - 1|
  double stationarity_error = 0.0;  // |pi K - pi|_1
  double reversibility_error = 0.0;  // max |pi(x)K(x,y) - pi(y)K(y,x)|
  double min_eigenvalue = 0.0;       // of D^{1/2} K D^{-1/2} (N <= 4096)
};
ChainCheck check_chain(const FiniteChain& chain, bool with_spectrum = true);

/// Eigenvalues of the pi-symmetrised kernel, ascending. Assumes reversibility. N <= 4096.
Eigen::VectorXd symmetrized_spectrum(const FiniteChain& chain);

/// 1 - second largest eigenvalue of D^{1/2} K D^{-1/2}.
double spectral_gap(const FiniteChain& chain);

/// E_K(f, f) = 1/2 sum_{x,y} (f(y) - f(x))^2 pi(x) K(x, y).
double dirichlet_form(const FiniteChain& chain, const Eigen::VectorXd& f);
double variance_pi(const FiniteChain& chain, const Eigen::VectorXd& f);

struct ConductanceResult {
  double zeta = 0.0;
  double phi = std::numeric_limits<double>::infinity();  // +inf if no admissible set
  std::uint64_t best_set = 0;                              // bitmask over states
};

inline constexpr std::size_t kMaxConductanceStates = 16;

/// Exact zeta-conductance by enumerating every subset of states, for each
/// zeta in one pass. Requires N <= 16.
std::vector<ConductanceResult> conductance_profile(const FiniteChain& chain,
                                                   const std::vector<double>& zetas);
double conductance(const FiniteChain& chain, double zeta = 0.0);

/// Canonical path toward delta_star: drop the largest-index false positive,
/// otherwise add the smallest-index missing relevant coordinate. Returns the
/// node sequence from `from` to delta_star (state indices).
std::vector<std::uint64_t> path_to_target(std::uint64_t from, std::uint64_t delta_star);

/// Path from x to y through the first node their target paths share.
std::vector<std::uint64_t> canonical_path(std::uint64_t x, std::uint64_t y, std::uint64_t delta_star);

struct PathBound {
  double m = 0.0;
  std::uint64_t edge_from = 0;
  std::uint64_t edge_to = 0;
  std::size_t max_path_length = 0;
  double mass = 0.0;  // pi(X0)
};

/// m(X0) = max over directed edges e of
///   sum over ordered pairs (x, y) in X0 whose path uses e of |gamma_xy| pi(x) pi(y) / (pi(e-) K(e-, e+)).
/// Throws DiagnosticsError if a path leaves X0. m is +inf when an edge's flow
/// rounds to zero while carrying positive load.
PathBound canonical_path_bound(const FiniteChain& chain, std::uint64_t delta_star,
                               const std::vector<char>& in_x0);
PathBound canonical_path_bound(const FiniteChain& chain, const Support& delta_star,
                               const std::vector<Support>& X0);

/// |pi0 K^t - pi|_1 for t = 0..N (the factor-2 total variation).
Eigen::VectorXd tv_curve(const FiniteChain& chain, const Eigen::VectorXd& pi0, std::size_t N);

/// Smallest t with curve(t) <= threshold, or curve.size().
std::size_t steps_to_tv(const Eigen::VectorXd& curve, double threshold);

/// Best (smallest) Dirichlet ratio E(f,f) / (Var(f) - zeta/2) found over
/// random f with |f|_inf <= 1 and Var(f) > zeta. Each value is a certified
/// upper bound on lambda_zeta. +inf if no admissible f was drawn.
double zeta_gap_upper_bound(const FiniteChain& chain, double zeta, std::size_t trials, Rng& rng);

struct BoundCheck {
  std::string name;
  bool pass = true;
  bool skipped = false;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string witness;
};

struct BoundsReport {
  double lambda = 0.0;
  std::vector<ConductanceResult> phi_by_zeta;
  double m_all = 0.0;
  double m_x0 = 0.0;
  double x0_mass = 0.0;
  std::vector<BoundCheck> checks;

  std::size_t violations() const;
  bool all_pass() const { return violations() == 0; }
};

struct BoundsOptions {
  std::size_t J0 = 0;
  std::size_t max_N = 200;
  double slack = 1e-10;
};

/// Cheeger sandwich, the canonical-path bound on lambda, the composite
/// 1/m(X0) <= Phi_{2 eps} when pi(X0) >= 1 - eps/8, and the point-mass TV
/// decay bound for N <= max_N. Needs N <= 16 states and N = 2^p.
BoundsReport verify_bounds(const FiniteChain& chain, const Support& delta_star,
                           const std::vector<double>& epsilons, const BoundsOptions& opts = {});

}  // namespace olap
