#include "olap/chain_analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "olap/error.hpp"
#include "olap/parallel.hpp"

namespace olap {

namespace {

std::size_t hypercube_dim(std::size_t N) {
  if (N == 0 || !std::has_single_bit(N)) return 0;
  return static_cast<std::size_t>(std::countr_zero(N));
}

std::string describe_set(std::uint64_t mask, std::size_t p, std::size_t N) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < N; ++i) {
    if (!((mask >> i) & 1u)) continue;
    if (!first) out += ", ";
    out += p > 0 ? Support::from_mask(p, i).to_string() : std::to_string(i);
    first = false;
  }
  return out + "}";
}

std::string describe_state(std::uint64_t s, std::size_t p) {
  return p > 0 ? Support::from_mask(p, s).to_string() : std::to_string(s);
}

}  // namespace

FiniteChain build_transition_matrix(const OlapModel& model, std::size_t max_p, std::size_t threads) {
  const std::size_t p = model.p();
  if (p > max_p || p > 20) {
    throw ValidationError("build_transition_matrix: p = " + std::to_string(p) + " exceeds max_p = " +
                          std::to_string(std::min<std::size_t>(max_p, 20)));
  }
  const std::size_t N = std::size_t{1} << p;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(N);
  const double inv_p = 1.0 / static_cast<double>(p);
  parallel_for(N, threads == 0 ? default_threads() : threads, [&](std::size_t s) {
    const Support d = Support::from_mask(p, s);
    double stay = 0.0;
    auto& row = rows[s];
    for (std::size_t j = 0; j < p; ++j) {
      const double s1 = model.score(flip(d, j, true))->log_score;
      const double s0 = model.score(flip(d, j, false))->log_score;
      // Both directions straight from the scores: 1 - q would round tiny moves to zero.
      const double q1 = bernoulli_from_scores(s1, s0);
      const double q0 = bernoulli_from_scores(s0, s1);
      const bool on = (s >> j) & 1u;
      const double move = on ? q0 : q1;
      stay += (on ? q1 : q0) * inv_p;
      if (move > 0.0) row.emplace_back(s ^ (std::size_t{1} << j), move * inv_p);
    }
    row.emplace_back(s, stay);
    std::sort(row.begin(), row.end());
  });
  FiniteChain c;
  c.p = p;
  c.K.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t s = 0; s < N; ++s) {
    for (auto [t, v] : rows[s]) {
      trip.emplace_back(static_cast<int>(s), static_cast<int>(t), v);
    }
  }
  c.K.setFromTriplets(trip.begin(), trip.end());
  const PosteriorTable table = enumerate_scores(
      p, [&](const Support& d) { return model.score(d)->log_score; }, max_p, threads);
  c.pi = Eigen::Map<const Eigen::VectorXd>(table.prob.data(), static_cast<Eigen::Index>(N));
  return c;
}

FiniteChain make_chain(const Eigen::MatrixXd& K, const Eigen::VectorXd& pi) {
  if (K.rows() != K.cols() || K.rows() != pi.size() || pi.size() == 0) {
    throw DimensionError("make_chain: K must be N x N with pi of length N");
  }
  FiniteChain c;
  c.p = hypercube_dim(static_cast<std::size_t>(pi.size()));
  c.K = K.sparseView(0.0, 0.0);
  c.K.makeCompressed();
  c.pi = pi;
  return c;
}

FiniteChain random_reversible_chain(std::size_t p, Rng& rng, double spread) {
  if (p < 1 || p > 10) throw ValidationError("random_reversible_chain: p must be in [1, 10]");
  const std::size_t N = std::size_t{1} << p;
  Eigen::VectorXd pi(static_cast<Eigen::Index>(N));
  for (std::size_t s = 0; s < N; ++s) pi(static_cast<Eigen::Index>(s)) = std::exp(spread * rng.normal());
  pi /= pi.sum();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t s = 0; s < N; ++s) {
    double stay = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t t = s ^ (std::size_t{1} << j);
      const double a = std::min(1.0, pi(static_cast<Eigen::Index>(t)) / pi(static_cast<Eigen::Index>(s)));
      const double v = 0.5 * a / static_cast<double>(p);
      K(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = v;
      stay -= v;
    }
    K(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = stay;
  }
  return make_chain(K, pi);
}

ChainCheck check_chain(const FiniteChain& chain, bool with_spectrum) {
  ChainCheck r;
  const Eigen::Index N = chain.K.rows();
  for (Eigen::Index x = 0; x < N; ++x) {
    double s = 0.0;
    for (SparseKernel::InnerIterator it(chain.K, x); it; ++it) {
      s += it.value();
      const double back = chain.K.coeff(it.col(), x);
      r.reversibility_error = std::max(
          r.reversibility_error, std::abs(chain.pi(x) * it.value() - chain.pi(it.col()) * back));
    }
    r.row_sum_error = std::max(r.row_sum_error, std::abs(s - 1.0));
  }
  const Eigen::VectorXd piK = chain.K.transpose() * chain.pi;
  r.stationarity_error = (piK - chain.pi).lpNorm<1>();
  if (with_spectrum && N <= 4096) r.min_eigenvalue = symmetrized_spectrum(chain)(0);
  return r;
}

Eigen::VectorXd symmetrized_spectrum(const FiniteChain& chain) {
  const Eigen::Index N = chain.K.rows();
  if (N > 4096) throw ValidationError("symmetrized_spectrum: more than 4096 states");
  // For a reversible kernel sqrt(pi(x)/pi(y)) K(x,y) = sqrt(K(x,y) K(y,x)); the
  // second form stays accurate when pi spans many orders of magnitude.
  const Eigen::MatrixXd K = chain.dense();
  Eigen::MatrixXd S(N, N);
  for (Eigen::Index x = 0; x < N; ++x) {
    for (Eigen::Index y = 0; y < N; ++y) S(x, y) = x == y ? K(x, x) : std::sqrt(K(x, y) * K(y, x));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double spectral_gap(const FiniteChain& chain) {
  if (chain.size() < 2) return 1.0;
  const Eigen::VectorXd ev = symmetrized_spectrum(chain);
  return 1.0 - ev(ev.size() - 2);
}

double dirichlet_form(const FiniteChain& chain, const Eigen::VectorXd& f) {
  double e = 0.0;
  for (Eigen::Index x = 0; x < chain.K.rows(); ++x) {
    for (SparseKernel::InnerIterator it(chain.K, x); it; ++it) {
      const double d = f(it.col()) - f(x);
      e += chain.pi(x) * it.value() * d * d;
    }
  }
  return 0.5 * e;
}

double variance_pi(const FiniteChain& chain, const Eigen::VectorXd& f) {
  const double mean = chain.pi.dot(f);
  return chain.pi.dot((f.array() - mean).square().matrix());
}

std::vector<ConductanceResult> conductance_profile(const FiniteChain& chain,
                                                   const std::vector<double>& zetas) {
  const std::size_t N = chain.size();
  if (N > kMaxConductanceStates) {
    throw ValidationError("conductance: " + std::to_string(N) + " states exceeds the limit of " +
                          std::to_string(kMaxConductanceStates));
  }
  for (double z : zetas) {
    if (!(z >= 0.0 && z < 0.5)) throw ValidationError("conductance: zeta must be in [0, 1/2)");
  }
  std::vector<ConductanceResult> out(zetas.size());
  for (std::size_t k = 0; k < zetas.size(); ++k) out[k].zeta = zetas[k];
  // Off-diagonal flows pi(x) K(x, y) per row.
  std::vector<std::vector<std::pair<std::size_t, double>>> flows(N);
  for (std::size_t x = 0; x < N; ++x) {
    for (SparseKernel::InnerIterator it(chain.K, static_cast<Eigen::Index>(x)); it; ++it) {
      if (static_cast<std::size_t>(it.col()) != x) {
        flows[x].emplace_back(static_cast<std::size_t>(it.col()), chain.pi(static_cast<Eigen::Index>(x)) * it.value());
      }
    }
  }
  const std::uint64_t full = (std::uint64_t{1} << N) - 1;
  for (std::uint64_t A = 1; A < full; ++A) {
    double pa = 0.0, q = 0.0;
    for (std::uint64_t m = A; m; m &= m - 1) {
      const auto x = static_cast<std::size_t>(std::countr_zero(m));
      pa += chain.pi(static_cast<Eigen::Index>(x));
      for (auto [y, v] : flows[x]) {
        if (!((A >> y) & 1u)) q += v;
      }
    }
    // Summed directly: total - pa cancels when the complement is tiny.
    double pc = 0.0;
    for (std::uint64_t m = ~A & full; m; m &= m - 1) pc += chain.pi(static_cast<Eigen::Index>(std::countr_zero(m)));
    for (auto& r : out) {
      if (!(r.zeta < pa && r.zeta < pc)) continue;
      const double ratio = q / ((pa - r.zeta) * (pc - r.zeta));
      if (ratio < r.phi) {
        r.phi = ratio;
        r.best_set = A;
      }
    }
  }
  return out;
}

double conductance(const FiniteChain& chain, double zeta) {
  return conductance_profile(chain, {zeta}).front().phi;
}

std::vector<std::uint64_t> path_to_target(std::uint64_t from, std::uint64_t delta_star) {
  std::vector<std::uint64_t> path{from};
  std::uint64_t node = from;
  while (node != delta_star) {
    const std::uint64_t extra = node & ~delta_star;
    if (extra) {
      node &= ~(std::uint64_t{1} << (63 - std::countl_zero(extra)));
    } else {
      const std::uint64_t missing = delta_star & ~node;
      node |= std::uint64_t{1} << std::countr_zero(missing);
    }
    path.push_back(node);
  }
  return path;
}

std::vector<std::uint64_t> canonical_path(std::uint64_t x, std::uint64_t y, std::uint64_t delta_star) {
  const auto px = path_to_target(x, delta_star);
  const auto py = path_to_target(y, delta_star);
  std::unordered_map<std::uint64_t, std::size_t> pos_y;
  for (std::size_t k = 0; k < py.size(); ++k) pos_y.emplace(py[k], k);
  std::size_t i = 0;
  while (!pos_y.count(px[i])) ++i;
  const std::size_t k = pos_y.at(px[i]);
  std::vector<std::uint64_t> path(px.begin(), px.begin() + static_cast<std::ptrdiff_t>(i) + 1);
  for (std::size_t r = k; r-- > 0;) path.push_back(py[r]);
  return path;
}

PathBound canonical_path_bound(const FiniteChain& chain, std::uint64_t delta_star,
                               const std::vector<char>& in_x0) {
  const std::size_t N = chain.size();
  if (chain.p == 0) throw ValidationError("canonical paths need a chain on {0,1}^p");
  if (in_x0.size() != N) throw DimensionError("canonical_path_bound: membership vector has wrong length");
  if (delta_star >= N || !in_x0[delta_star]) {
    throw ValidationError("canonical_path_bound: delta_star must belong to X0");
  }
  PathBound out;
  std::vector<std::uint64_t> members;
  for (std::size_t s = 0; s < N; ++s) {
    if (in_x0[s]) {
      members.push_back(s);
      out.mass += chain.pi(static_cast<Eigen::Index>(s));
    }
  }
  std::unordered_map<std::uint64_t, double> load;
  for (auto x : members) {
    for (auto y : members) {
      if (x == y) continue;
      const auto path = canonical_path(x, y, delta_star);
      const std::size_t len = path.size() - 1;
      out.max_path_length = std::max(out.max_path_length, len);
      std::unordered_set<std::uint64_t> seen;
      for (std::size_t k = 0; k < path.size(); ++k) {
        if (!in_x0[path[k]]) {
          throw DiagnosticsError("canonical path from " + describe_state(x, chain.p) + " to " +
                                     describe_state(y, chain.p) + " leaves X0",
                                 Support::from_mask(chain.p, path[k]).indices());
        }
        if (!seen.insert(path[k]).second) {
          throw DiagnosticsError("canonical path revisits a node", Support::from_mask(chain.p, path[k]).indices());
        }
      }
      const double w = static_cast<double>(len) * chain.pi(static_cast<Eigen::Index>(x)) *
                       chain.pi(static_cast<Eigen::Index>(y));
      for (std::size_t k = 0; k + 1 < path.size(); ++k) load[path[k] * N + path[k + 1]] += w;
    }
  }
  std::vector<std::pair<std::uint64_t, double>> edges(load.begin(), load.end());
  std::sort(edges.begin(), edges.end());
  for (auto [key, w] : edges) {
    const std::uint64_t a = key / N, b = key % N;
    const double flow = chain.pi(static_cast<Eigen::Index>(a)) *
                        chain.K.coeff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    // A saturated conditional can round an edge's flow to zero; the bound is then vacuous.
    double ratio;
    if (flow > 0.0) {
      ratio = w / flow;
    } else {
      ratio = w > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (ratio > out.m) {
      out.m = ratio;
      out.edge_from = a;
      out.edge_to = b;
    }
  }
  return out;
}

PathBound canonical_path_bound(const FiniteChain& chain, const Support& delta_star,
                               const std::vector<Support>& X0) {
  if (delta_star.size() != chain.p) throw DimensionError("delta_star has the wrong length");
  std::vector<char> in(chain.size(), 0);
  for (const auto& s : X0) {
    if (s.size() != chain.p) throw DimensionError("X0 member has the wrong length");
    in[s.mask()] = 1;
  }
  return canonical_path_bound(chain, delta_star.mask(), in);
}

Eigen::VectorXd tv_curve(const FiniteChain& chain, const Eigen::VectorXd& pi0, std::size_t N) {
  if (pi0.size() != chain.pi.size()) throw DimensionError("tv_curve: pi0 has the wrong length");
  if ((pi0.array() < 0.0).any() || std::abs(pi0.sum() - 1.0) > 1e-9) {
    throw ValidationError("tv_curve: pi0 must be a probability vector");
  }
  Eigen::VectorXd curve(static_cast<Eigen::Index>(N + 1));
  Eigen::VectorXd v = pi0;
  const SparseKernel Kt = chain.K.transpose();
  for (std::size_t t = 0; t <= N; ++t) {
    curve(static_cast<Eigen::Index>(t)) = (v - chain.pi).lpNorm<1>();
    if (t < N) v = Kt * v;
  }
  return curve;
}

std::size_t steps_to_tv(const Eigen::VectorXd& curve, double threshold) {
  for (Eigen::Index t = 0; t < curve.size(); ++t) {
    if (curve(t) <= threshold) return static_cast<std::size_t>(t);
  }
  return static_cast<std::size_t>(curve.size());
}

double zeta_gap_upper_bound(const FiniteChain& chain, double zeta, std::size_t trials, Rng& rng) {
  const Eigen::Index N = chain.pi.size();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd f(N);
  for (std::size_t t = 0; t < trials; ++t) {
    const bool signs = t % 2 == 0;
    for (Eigen::Index i = 0; i < N; ++i) {
      f(i) = signs ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : 2.0 * rng.uniform() - 1.0;
    }
    const double var = variance_pi(chain, f);
    if (!(var > zeta + 1e-12)) continue;
    best = std::min(best, dirichlet_form(chain, f) / (var - 0.5 * zeta));
  }
  return best;
}

std::size_t BoundsReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.pass && !c.skipped; }));
}

BoundsReport verify_bounds(const FiniteChain& chain, const Support& delta_star,
                           const std::vector<double>& epsilons, const BoundsOptions& opts) {
  const std::size_t N = chain.size();
  if (N > 16) throw ValidationError("verify_bounds: at most 16 states");
  if (chain.p == 0) throw ValidationError("verify_bounds: chain must live on {0,1}^p");
  if (delta_star.size() != chain.p) throw DimensionError("delta_star has the wrong length");
  for (double e : epsilons) {
    if (!(e >= 0.0 && e < 0.5)) throw ValidationError("verify_bounds: epsilon must be in [0, 1/2)");
  }
  const double slack = opts.slack;
  BoundsReport rep;
  rep.lambda = spectral_gap(chain);

  std::vector<double> zetas{0.0};
  for (double e : epsilons) {
    if (2.0 * e < 0.5) zetas.push_back(2.0 * e);
  }
  rep.phi_by_zeta = conductance_profile(chain, zetas);
  const ConductanceResult& phi0 = rep.phi_by_zeta.front();

  {
    BoundCheck c{"cheeger_lower", true, false, phi0.phi * phi0.phi / 8.0, rep.lambda, ""};
    c.pass = c.lhs <= c.rhs + slack;
    if (!c.pass) c.witness = "A = " + describe_set(phi0.best_set, chain.p, N);
    rep.checks.push_back(c);
    BoundCheck d{"cheeger_upper", true, false, rep.lambda, phi0.phi, ""};
    d.pass = d.lhs <= d.rhs + slack;
    if (!d.pass) d.witness = "A = " + describe_set(phi0.best_set, chain.p, N);
    rep.checks.push_back(d);
  }

  const std::uint64_t star = delta_star.mask();
  {
    const PathBound all = canonical_path_bound(chain, star, std::vector<char>(N, 1));
    rep.m_all = all.m;
    BoundCheck c{"path_bound_gap", true, false, all.m > 0 ? 1.0 / all.m : std::numeric_limits<double>::infinity(),
                 rep.lambda, ""};
    c.pass = c.lhs <= c.rhs + slack;
    if (!c.pass) {
      c.witness = "edge " + describe_state(all.edge_from, chain.p) + " -> " + describe_state(all.edge_to, chain.p);
    }
    rep.checks.push_back(c);
  }

  {
    std::vector<char> in(N, 0);
    const std::size_t cap = delta_star.weight() + opts.J0;
    for (std::size_t s = 0; s < N; ++s) in[s] = static_cast<std::size_t>(std::popcount(s)) <= cap;
    const PathBound x0 = canonical_path_bound(chain, star, in);
    rep.m_x0 = x0.m;
    rep.x0_mass = x0.mass;
    const double inv_m = x0.m > 0 ? 1.0 / x0.m : std::numeric_limits<double>::infinity();
    for (double e : epsilons) {
      BoundCheck c{"composite_eps_" + std::to_string(e), true, false, inv_m, 0.0, ""};
      if (2.0 * e >= 0.5) {
        c.skipped = true;
        c.witness = "2 eps >= 1/2: zeta-conductance undefined";
      } else if (x0.mass < 1.0 - e / 8.0) {
        c.skipped = true;
        c.witness = "pi(X0) = " + std::to_string(x0.mass) + " < 1 - eps/8";
      } else {
        const auto it = std::find_if(rep.phi_by_zeta.begin(), rep.phi_by_zeta.end(),
                                     [&](const ConductanceResult& r) { return r.zeta == 2.0 * e; });
        c.rhs = it->phi;
        c.pass = c.lhs <= c.rhs + slack;
        if (!c.pass) c.witness = "A = " + describe_set(it->best_set, chain.p, N);
      }
      rep.checks.push_back(c);
    }
  }

  {
    BoundCheck c{"tv_decay", true, false, 0.0, 0.0, ""};
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < N; ++x) {
      Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
      pi0(static_cast<Eigen::Index>(x)) = 1.0;
      const Eigen::VectorXd curve = tv_curve(chain, pi0, opts.max_N);
      const double var = 1.0 / chain.pi(static_cast<Eigen::Index>(x)) - 1.0;
      for (std::size_t n = 1; n <= opts.max_N; ++n) {
        const double lhs = curve(static_cast<Eigen::Index>(n)) * curve(static_cast<Eigen::Index>(n));
        const double rhs = std::pow(1.0 - rep.lambda / 2.0, static_cast<double>(n)) * var;
        if (lhs - rhs > worst) {
          worst = lhs - rhs;
          c.lhs = lhs;
          c.rhs = rhs;
        }
        if (lhs > rhs + slack && c.pass) {
          c.pass = false;
          c.witness = "start " + describe_state(x, chain.p) + ", N = " + std::to_string(n);
        }
      }
    }
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace olap
