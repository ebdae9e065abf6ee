#pragma once

// Seeded random instances and the property suites behind `clustcons props`.

#include <algorithm>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clustcons/conditions.hpp"
#include "clustcons/dynamics.hpp"
#include "clustcons/experiments.hpp"
#include "clustcons/graph.hpp"
#include "clustcons/measures.hpp"

namespace clustcons {

template <class Rng>
Matrix random_stochastic(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution sparse(0.3);
  const auto N = static_cast<Eigen::Index>(n);
  Matrix A(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) A(i, j) = sparse(rng) ? 0.0 : u(rng);
    if (A.row(i).sum() == 0.0) A(i, std::uniform_int_distribution<Eigen::Index>(0, N - 1)(rng)) = 1.0;
    A.row(i) /= A.row(i).sum();
  }
  return A;
}

template <class Rng>
Clustering random_clustering(std::size_t n, Rng& rng) {
  const std::size_t K = std::uniform_int_distribution<std::size_t>(1, n)(rng);
  std::vector<ClusterId> assignment(n);
  for (std::size_t i = 0; i < n; ++i) assignment[i] = i < K ? i : std::uniform_int_distribution<std::size_t>(0, K - 1)(rng);
  std::shuffle(assignment.begin(), assignment.end(), rng);
  return Clustering::from_assignment(std::move(assignment));
}

//! Stochastic matrix with inter-cluster common influence: every row of C_p puts
//! the same total mass on each cluster C_q, split at random within C_q.
template <class Rng>
Matrix random_common_influence_stochastic(const Clustering& c, Rng& rng) {
  const Matrix M = random_stochastic(c.K(), rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution sparse(0.3);
  const auto N = static_cast<Eigen::Index>(c.n());
  Matrix A = Matrix::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const ClusterId p = c.cluster_of(static_cast<VertexId>(i));
    for (ClusterId q = 0; q < c.K(); ++q) {
      const auto& members = c.members(q);
      std::vector<double> w(members.size());
      for (double& x : w) x = sparse(rng) ? 0.0 : u(rng);
      double total = 0.0;
      for (double x : w) total += x;
      if (total == 0.0) {
        w[std::uniform_int_distribution<std::size_t>(0, w.size() - 1)(rng)] = 1.0;
        total = 1.0;
      }
      for (std::size_t k = 0; k < members.size(); ++k)
        A(i, static_cast<Eigen::Index>(members[k])) = M(Eigen::Index(p), Eigen::Index(q)) * w[k] / total;
    }
  }
  return A;
}

struct RandomScheduleOptions {
  std::size_t max_segments = 5;
  double edge_probability = 0.4;
  double min_weight = 0.05;
  double max_weight = 2.0;
};

//! Random directed edges per interval, constant or half-sine profiles.
template <class Rng>
CouplingSchedule random_schedule(std::size_t n, double T, Rng& rng, const RandomScheduleOptions& opt = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t segs = std::uniform_int_distribution<std::size_t>(1, opt.max_segments)(rng);
  std::vector<double> cuts;
  for (std::size_t k = 1; k < segs; ++k) cuts.push_back(T * unit(rng));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> breaks{0.0};
  for (double c : cuts)
    if (c > breaks.back() + 1e-6 && c < T - 1e-6) breaks.push_back(c);
  breaks.push_back(T);

  std::vector<Segment> segments;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    Segment seg;
    for (VertexId i = 0; i < n; ++i)
      for (VertexId j = 0; j < n; ++j)
        if (i != j && unit(rng) < opt.edge_probability)
          seg.edges.push_back({i, j, opt.min_weight + (opt.max_weight - opt.min_weight) * unit(rng)});
    if (unit(rng) < 0.5)
      seg.profile = WeightProfile::constant(0.2 + unit(rng));
    else
      seg.profile = WeightProfile::half_sine(breaks[k + 1] - breaks[k], 0.5 + 1.5 * unit(rng));
    segments.push_back(std::move(seg));
  }
  return CouplingSchedule(n, std::move(breaks), std::move(segments));
}

//! Ring-lattice or bipartite switching schedule (both satisfy common influence).
template <class Rng>
std::pair<CouplingSchedule, Clustering> random_common_influence_schedule(double T, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<Adjacency> realizations;
  Clustering c;
  if (coin(rng)) {
    const std::size_t K = coin(rng) ? 2 : 4;
    const std::size_t N = K * std::uniform_int_distribution<std::size_t>(2, 4)(rng);
    const std::size_t r = std::uniform_int_distribution<std::size_t>(1, (N - 1) / 2)(rng);
    GraphModel g = make_ring_lattice(N, r, K);
    c = g.clustering;
    realizations = {g.adjacency, g.adjacency};
  } else {
    const std::size_t N = 2 * std::uniform_int_distribution<std::size_t>(3, 6)(rng);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, N / 2 - 1)(rng);
    const std::size_t m = s + std::uniform_int_distribution<std::size_t>(1, N / 2)(rng);
    GraphModel a = make_bipartite_random(N, m, s, rng);
    GraphModel b = make_bipartite_random(N, m, s, rng);
    c = a.clustering;
    realizations = {a.adjacency, b.adjacency};
  }
  return {build_switching_schedule(realizations, rng, 0.0, T), c};
}

struct PropertyResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest margin violation (or largest error for tolerance checks)

  bool passed() const { return violations == 0; }
  std::string line() const {
    std::ostringstream os;
    os << (passed() ? "PASS " : "FAIL ") << name << " cases=" << cases << " violations=" << violations
       << " worst=" << worst;
    return os.str();
  }
};

//! Which stochastic matrices the Hajnal suite draws.
enum class HajnalMatrices { any_stochastic, common_influence };

//! Delta_C(AB) <= (1 - mu_C(A)) Delta_C(B) + 1e-12. Holds for every clustering
//! when A has inter-cluster common influence; for arbitrary stochastic A it can
//! fail (see hajnal_counterexample).
inline PropertyResult hajnal_inequality_suite(std::size_t cases, std::uint64_t seed, std::size_t max_n = 8,
                                              HajnalMatrices kind = HajnalMatrices::common_influence) {
  std::mt19937_64 rng(seed);
  PropertyResult r{kind == HajnalMatrices::common_influence ? "hajnal_inequality" : "hajnal_inequality_any_stochastic"};
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, max_n)(rng);
    const std::size_t cols = std::uniform_int_distribution<std::size_t>(1, max_n)(rng);
    const Clustering cl = random_clustering(n, rng);
    const Matrix A = kind == HajnalMatrices::common_influence ? random_common_influence_stochastic(cl, rng)
                                                               : random_stochastic(n, rng);
    Matrix B(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const double lhs = cluster_hajnal_diameter(Matrix(A * B), cl);
    const double rhs = (1.0 - cluster_ergodicity(A, cl)) * cluster_hajnal_diameter(B, cl);
    ++r.cases;
    if (lhs > rhs + 1e-12) {
      ++r.violations;
      r.worst = std::max(r.worst, lhs - rhs);
    }
  }
  return r;
}

//! Smallest instance where the Hajnal inequality fails without common influence:
//! clusters {0,1},{2}; rows 0 and 1 share no support so mu_C(A) = 0, B has zero
//! cluster diameter, yet node 1 copies the other cluster and Delta_C(AB) = 1.
struct HajnalCounterexample {
  Matrix A = (Matrix(3, 3) << 1, 0, 0, 0, 0, 1, 0, 0, 1).finished();
  Matrix B = (Matrix(3, 1) << 0, 0, 1).finished();
  Clustering clustering = Clustering::from_members(3, {{0, 1}, {2}});
};

//! Every grid sample of Phi has unit row sums (1e-6) and entries >= -1e-9.
inline PropertyResult phi_stochastic_suite(std::size_t cases, std::uint64_t seed, std::size_t max_n = 10,
                                           double max_T = 5.0, double h = default_step) {
  std::mt19937_64 rng(seed);
  PropertyResult r{"phi_stochastic"};
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, max_n)(rng);
    const double T = std::uniform_real_distribution<double>(0.5, max_T)(rng);
    const CouplingSchedule s = random_schedule(n, T, rng);
    ++r.cases;
    bool bad = false;
    propagate(s, Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), 0.0, T, h,
              NoForcing{}, [&](double, const Matrix& phi) {
                const double row_err = (phi.rowwise().sum().array() - 1.0).abs().maxCoeff();
                const double neg = -phi.minCoeff();
                r.worst = std::max({r.worst, row_err, neg});
                if (row_err > integrator_tolerance || neg > 1e-9) bad = true;
              });
    if (bad) ++r.violations;
  }
  return r;
}

//! Phi_ij(T,0) >= e^{-(n-1)M1} delta on delta-edges, Phi_ii >= e^{-(n-1)M1}.
inline PropertyResult delta_edge_bound_suite(std::size_t cases, std::uint64_t seed, double h = default_step) {
  std::mt19937_64 rng(seed);
  PropertyResult r{"delta_edge_bound"};
  RandomScheduleOptions opt;
  opt.max_weight = 1.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (r.cases < cases) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    const double T = std::uniform_real_distribution<double>(0.2, 2.0)(rng);
    const CouplingSchedule s = random_schedule(n, T, rng, opt);
    const Matrix W = integrate_weights(s, 0.0, T, h);
    const double max_w = W.maxCoeff();
    if (!(max_w > 0.0)) continue;
    const double M1 = max_w * (1.0 + 1e-6);
    const double delta = max_w * unit(rng);
    const DeltaEdgeGraph g = delta_edges(W, delta, 0.0, T);
    if (g.edge_count() == 0) continue;
    ++r.cases;
    const Matrix phi = transition_matrix(s, 0.0, T, h, std::numeric_limits<std::size_t>::max()).final();
    const double factor = std::exp(-static_cast<double>(n - 1) * M1);
    bool bad = false;
    for (VertexId j = 0; j < n; ++j)
      for (VertexId i : g.out[j]) {
        const double margin = factor * delta - 1e-9 - phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (margin > 0.0) bad = true, r.worst = std::max(r.worst, margin);
      }
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      const double margin = factor - 1e-9 - phi(i, i);
      if (margin > 0.0) bad = true, r.worst = std::max(r.worst, margin);
    }
    if (bad) ++r.violations;
  }
  return r;
}

//! Runs started in S_C stay there (max Delta_C <= 1e-6).
inline PropertyResult invariance_suite(std::size_t cases, std::uint64_t seed, double T = 5.0, double h = default_step) {
  std::mt19937_64 rng(seed);
  PropertyResult r{"invariance"};
  std::uniform_real_distribution<double> alpha(0.0, 10.0), init(-1.0, 1.0);
  for (std::size_t c = 0; c < cases; ++c) {
    auto [s, cl] = random_common_influence_schedule(T, rng);
    Vector a(static_cast<Eigen::Index>(cl.K()));
    for (Eigen::Index p = 0; p < a.size(); ++p) a[p] = alpha(rng);
    Vector z(static_cast<Eigen::Index>(cl.K()));
    for (Eigen::Index p = 0; p < z.size(); ++p) z[p] = init(rng);
    Vector x0(static_cast<Eigen::Index>(cl.n()));
    for (VertexId i = 0; i < cl.n(); ++i) x0[static_cast<Eigen::Index>(i)] = z[static_cast<Eigen::Index>(cl.cluster_of(i))];
    const InputSignal input = InputSignal::factored(cl, a, [](double t) { return std::sin(t); });
    const double worst = check_invariance(s, input, x0, 0.0, T, h);
    ++r.cases;
    r.worst = std::max(r.worst, worst);
    if (worst > integrator_tolerance) ++r.violations;
  }
  return r;
}

//! Cluster values of x(t) from S_C match z' = B z + I~ (sup-norm 1e-5).
inline PropertyResult quotient_equivalence_suite(std::size_t cases, std::uint64_t seed, double T = 5.0,
                                                 double h = default_step) {
  std::mt19937_64 rng(seed);
  PropertyResult r{"quotient_equivalence"};
  std::uniform_real_distribution<double> alpha(0.0, 10.0), init(-1.0, 1.0);
  for (std::size_t c = 0; c < cases; ++c) {
    auto [s, cl] = random_common_influence_schedule(T, rng);
    const CommonInfluence ci = extract_common_influence(s, cl, h);
    ++r.cases;
    if (!ci.ok()) {
      ++r.violations;
      continue;
    }
    Vector a(static_cast<Eigen::Index>(cl.K())), z0(static_cast<Eigen::Index>(cl.K()));
    for (Eigen::Index p = 0; p < a.size(); ++p) a[p] = alpha(rng), z0[p] = init(rng);
    Vector x0(static_cast<Eigen::Index>(cl.n()));
    for (VertexId i = 0; i < cl.n(); ++i) x0[static_cast<Eigen::Index>(i)] = z0[static_cast<Eigen::Index>(cl.cluster_of(i))];
    const InputSignal input = InputSignal::factored(cl, a, [](double t) { return std::sin(t); });
    const double err = quotient_mismatch(s, *ci.B, input, x0, z0, T, h);
    r.worst = std::max(r.worst, err);
    if (err > 1e-5) ++r.violations;
  }
  return r;
}

}  // namespace clustcons
