#pragma once

// Clusterings, graph models, piecewise time-varying coupling schedules and
// the delta-edge / cluster-spanning-tree / cluster-scrambling predicates.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace clustcons {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using VertexId = std::size_t;
using ClusterId = std::size_t;

// Neighbour lists: adjacency[i] holds every j with L_ij > 0 (agent i listens to j).
using Adjacency = std::vector<std::vector<VertexId>>;

//! Disjoint division of {0,...,n-1} into K nonempty clusters.
class Clustering {
 public:
  Clustering() = default;

  //! Cluster labels must be 0..K-1 with every label used.
  static Clustering from_assignment(std::vector<ClusterId> assignment) {
    if (assignment.empty()) throw std::invalid_argument("clustering: empty vertex set");
    const ClusterId k = *std::max_element(assignment.begin(), assignment.end()) + 1;
    std::vector<std::vector<VertexId>> members(k);
    for (VertexId v = 0; v < assignment.size(); ++v) members[assignment[v]].push_back(v);
    for (ClusterId p = 0; p < k; ++p)
      if (members[p].empty())
        throw std::invalid_argument("clustering: cluster " + std::to_string(p) + " is empty");
    Clustering c;
    c.assignment_ = std::move(assignment);
    c.members_ = std::move(members);
    return c;
  }

  static Clustering from_members(std::size_t n, const std::vector<std::vector<VertexId>>& members) {
    if (n == 0) throw std::invalid_argument("clustering: empty vertex set");
    constexpr ClusterId unset = std::numeric_limits<ClusterId>::max();
    std::vector<ClusterId> assignment(n, unset);
    for (ClusterId p = 0; p < members.size(); ++p) {
      if (members[p].empty())
        throw std::invalid_argument("clustering: cluster " + std::to_string(p) + " is empty");
      for (VertexId v : members[p]) {
        if (v >= n) throw std::invalid_argument("clustering: vertex " + std::to_string(v) + " out of range");
        if (assignment[v] != unset)
          throw std::invalid_argument("clustering: vertex " + std::to_string(v) + " in two clusters");
        assignment[v] = p;
      }
    }
    for (VertexId v = 0; v < n; ++v)
      if (assignment[v] == unset)
        throw std::invalid_argument("clustering: vertex " + std::to_string(v) + " has no cluster");
    return from_assignment(std::move(assignment));
  }

  std::size_t n() const { return assignment_.size(); }
  std::size_t K() const { return members_.size(); }
  ClusterId cluster_of(VertexId v) const { return assignment_.at(v); }
  const std::vector<VertexId>& members(ClusterId p) const { return members_.at(p); }
  const std::vector<std::vector<VertexId>>& all_members() const { return members_; }
  const std::vector<ClusterId>& assignment() const { return assignment_; }

  friend bool operator==(const Clustering&, const Clustering&) = default;

 private:
  std::vector<ClusterId> assignment_;
  std::vector<std::vector<VertexId>> members_;
};

struct GraphModel {
  Adjacency adjacency;
  Clustering clustering;
};

//! Ring lattice: node i listens to (i+j) mod N for j = +-1..+-r; clusters by i mod K.
inline GraphModel make_ring_lattice(std::size_t N, std::size_t r, std::size_t K) {
  if (N == 0 || r == 0 || K == 0) throw std::invalid_argument("ring lattice: N, r, K must be positive");
  if (N % K != 0) throw std::invalid_argument("ring lattice: K must divide N");
  if (2 * r >= N) throw std::invalid_argument("ring lattice: need 2r < N");
  GraphModel g;
  g.adjacency.resize(N);
  for (VertexId i = 0; i < N; ++i) {
    for (std::size_t j = 1; j <= r; ++j) {
      g.adjacency[i].push_back((i + j) % N);
      g.adjacency[i].push_back((i + N - j) % N);
    }
    std::sort(g.adjacency[i].begin(), g.adjacency[i].end());
  }
  std::vector<ClusterId> assignment(N);
  for (VertexId i = 0; i < N; ++i) assignment[i] = i % K;
  g.clustering = Clustering::from_assignment(std::move(assignment));
  return g;
}

//! Two groups {0..N/2-1}, {N/2..N-1}; each node draws s neighbours from inside its
//! group and m-s from the other, uniformly without replacement. The relation is
//! directed, so every node has exactly s in-group and m-s cross-group neighbours.
template <std::uniform_random_bit_generator Rng>
GraphModel make_bipartite_random(std::size_t N, std::size_t m, std::size_t s, Rng& rng) {
  if (N == 0 || N % 2 != 0) throw std::invalid_argument("bipartite: N must be even and positive");
  if (s == 0 || s >= m) throw std::invalid_argument("bipartite: need 0 < s < m");
  const std::size_t half = N / 2;
  if (s > half - 1) throw std::invalid_argument("bipartite: need s <= N/2 - 1");
  if (m - s > half) throw std::invalid_argument("bipartite: need m - s <= N/2");

  GraphModel g;
  g.adjacency.resize(N);
  std::vector<ClusterId> assignment(N);
  for (VertexId i = 0; i < N; ++i) assignment[i] = i < half ? 0 : 1;

  std::vector<VertexId> pool;
  for (VertexId i = 0; i < N; ++i) {
    const VertexId own = assignment[i] == 0 ? 0 : half;
    const VertexId other = assignment[i] == 0 ? half : 0;
    pool.clear();
    for (VertexId v = own; v < own + half; ++v)
      if (v != i) pool.push_back(v);
    std::sample(pool.begin(), pool.end(), std::back_inserter(g.adjacency[i]),
                static_cast<std::ptrdiff_t>(s), rng);
    pool.clear();
    for (VertexId v = other; v < other + half; ++v) pool.push_back(v);
    std::sample(pool.begin(), pool.end(), std::back_inserter(g.adjacency[i]),
                static_cast<std::ptrdiff_t>(m - s), rng);
    std::sort(g.adjacency[i].begin(), g.adjacency[i].end());
  }
  g.clustering = Clustering::from_assignment(std::move(assignment));
  return g;
}

//! Scalar weight profile attached to one switching interval.
struct WeightProfile {
  enum class Kind { constant, half_sine };

  Kind kind = Kind::constant;
  double scale = 1.0;
  // half_sine: scale * sin(pi (t - start) / duration); duration may exceed the
  // stored segment when the last interval is truncated at the horizon.
  double duration = 1.0;

  static WeightProfile constant(double value) { return {Kind::constant, value, 1.0}; }
  static WeightProfile half_sine(double duration, double scale = 1.0) {
    return {Kind::half_sine, scale, duration};
  }

  double operator()(double t, double start) const {
    switch (kind) {
      case Kind::constant:
        return scale;
      case Kind::half_sine:
        return scale * std::sin(std::numbers::pi * (t - start) / duration);
    }
    return 0.0;
  }

  //! Exact integral over [a, b] for a piece starting at start.
  double integral(double a, double b, double start) const {
    switch (kind) {
      case Kind::constant:
        return scale * (b - a);
      case Kind::half_sine: {
        const double w = std::numbers::pi / duration;
        return scale / w * (std::cos(w * (a - start)) - std::cos(w * (b - start)));
      }
    }
    return 0.0;
  }

  friend bool operator==(const WeightProfile&, const WeightProfile&) = default;
};

// Directed coupling j -> i: contributes weight * w(t) to L_ij.
struct Edge {
  VertexId target;
  VertexId source;
  double weight = 1.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Segment {
  std::vector<Edge> edges;
  WeightProfile profile;
  friend bool operator==(const Segment&, const Segment&) = default;
};

//! Anything that can hand the integrator a coupling matrix on each of its
//! smooth pieces. breakpoints() = {t0, t1, ..., T}; segment k covers
//! [breakpoints[k], breakpoints[k+1]) and segment_matrix(k, t) must also be
//! valid at the right end (left limit).
template <class S>
concept PiecewiseCoupling = requires(const S& s, std::size_t k, double t) {
  { s.dimension() } -> std::convertible_to<std::size_t>;
  { s.breakpoints() } -> std::convertible_to<std::span<const double>>;
  { s.segment_matrix(k, t) } -> std::convertible_to<Matrix>;
};

namespace detail {

inline std::size_t locate_segment(std::span<const double> breaks, double t) {
  if (breaks.size() < 2 || t < breaks.front() || t > breaks.back()) {
    std::ostringstream os;
    os << "time " << t << " outside horizon [" << (breaks.empty() ? 0.0 : breaks.front()) << ", "
       << (breaks.empty() ? 0.0 : breaks.back()) << "]";
    throw std::out_of_range(os.str());
  }
  auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  std::size_t k = static_cast<std::size_t>(it - breaks.begin());
  k = k == 0 ? 0 : k - 1;
  return std::min(k, breaks.size() - 2);
}

}  // namespace detail

class CouplingSchedule {
 public:
  CouplingSchedule() = default;

  CouplingSchedule(std::size_t n, std::vector<double> breakpoints, std::vector<Segment> segments)
      : n_(n), breaks_(std::move(breakpoints)), segments_(std::move(segments)) {
    if (n_ == 0) throw std::invalid_argument("schedule: n must be positive");
    if (breaks_.size() < 2 || segments_.size() != breaks_.size() - 1)
      throw std::invalid_argument("schedule: need one segment per switching interval");
    for (std::size_t k = 1; k < breaks_.size(); ++k)
      if (!(breaks_[k] > breaks_[k - 1]))
        throw std::invalid_argument("schedule: switching instants must be strictly increasing");
    base_.reserve(segments_.size());
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const Segment& seg = segments_[k];
      if (!(seg.profile.scale >= 0.0) || !std::isfinite(seg.profile.scale))
        throw std::invalid_argument("schedule: profile scale must be finite and nonnegative");
      // a half sine stays nonnegative only up to its own duration
      if (seg.profile.kind == WeightProfile::Kind::half_sine &&
          !(seg.profile.duration >= (breaks_[k + 1] - breaks_[k]) * (1.0 - 1e-12)))
        throw std::invalid_argument("schedule: half-sine duration shorter than its interval");
      Matrix L = Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
      for (const Edge& e : seg.edges) {
        if (e.target >= n_ || e.source >= n_)
          throw std::invalid_argument("schedule: edge endpoint out of range");
        if (e.target == e.source) throw std::invalid_argument("schedule: self-links are not allowed");
        if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
          throw std::invalid_argument("schedule: edge weights must be finite and nonnegative");
        L(e.target, e.source) += e.weight;
      }
      for (Eigen::Index i = 0; i < L.rows(); ++i) L(i, i) = -(L.row(i).sum() - L(i, i));
      base_.push_back(std::move(L));
    }
  }

  std::size_t dimension() const { return n_; }
  std::size_t n() const { return n_; }
  double start() const { return breaks_.front(); }
  double horizon() const { return breaks_.back(); }
  std::span<const double> breakpoints() const { return breaks_; }
  std::size_t segment_count() const { return segments_.size(); }
  const Segment& segment(std::size_t k) const { return segments_.at(k); }
  const std::vector<Segment>& segments() const { return segments_; }

  //! Weighted Laplacian of segment k with unit profile.
  const Matrix& base_laplacian(std::size_t k) const { return base_.at(k); }

  double profile_value(std::size_t k, double t) const { return segments_[k].profile(t, breaks_[k]); }

  Matrix segment_matrix(std::size_t k, double t) const { return profile_value(k, t) * base_[k]; }

  std::size_t segment_index(double t) const { return detail::locate_segment(breaks_, t); }

  friend bool operator==(const CouplingSchedule& a, const CouplingSchedule& b) {
    return a.n_ == b.n_ && a.breaks_ == b.breaks_ && a.segments_ == b.segments_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> breaks_;
  std::vector<Segment> segments_;
  std::vector<Matrix> base_;
};

//! A single smooth piece given by an arbitrary matrix function; used for
//! hand-built couplings (including deliberately invalid ones).
class FunctionCoupling {
 public:
  FunctionCoupling(std::size_t n, double t0, double T, std::function<Matrix(double)> fn)
      : n_(n), breaks_{t0, T}, fn_(std::move(fn)) {
    if (!(T > t0)) throw std::invalid_argument("function coupling: need T > t0");
  }
  std::size_t dimension() const { return n_; }
  std::span<const double> breakpoints() const { return breaks_; }
  Matrix segment_matrix(std::size_t, double t) const { return fn_(t); }

 private:
  std::size_t n_;
  std::vector<double> breaks_;
  std::function<Matrix(double)> fn_;
};

//! L(t) on the half-open horizon [t0, T).
template <PiecewiseCoupling S>
Matrix laplacian_at(const S& schedule, double t) {
  auto breaks = std::span<const double>(schedule.breakpoints());
  if (t < breaks.front() || t >= breaks.back()) {
    std::ostringstream os;
    os << "laplacian_at: t=" << t << " outside [" << breaks.front() << ", " << breaks.back() << ")";
    throw std::out_of_range(os.str());
  }
  return schedule.segment_matrix(detail::locate_segment(breaks, t), t);
}

//! Every segment's edges with unit profile, one list per realization.
inline std::vector<Edge> edges_from_adjacency(const Adjacency& adjacency, double weight = 1.0) {
  std::vector<Edge> edges;
  for (VertexId i = 0; i < adjacency.size(); ++i)
    for (VertexId j : adjacency[i]) edges.push_back({i, j, weight});
  return edges;
}

//! Schedule with the same adjacency on every interval.
inline CouplingSchedule laplacian_from_adjacency(const Adjacency& adjacency, std::vector<double> breakpoints,
                                                 const std::vector<WeightProfile>& profiles) {
  std::vector<Segment> segments;
  segments.reserve(profiles.size());
  for (const WeightProfile& p : profiles) segments.push_back({edges_from_adjacency(adjacency), p});
  return CouplingSchedule(adjacency.size(), std::move(breakpoints), std::move(segments));
}

namespace detail {

// Composite Simpson on [a, b] with an even number of panels no wider than h.
template <class F>
auto simpson(F&& f, double a, double b, double h) {
  const double len = b - a;
  std::size_t panels = static_cast<std::size_t>(std::ceil(len / h - 1e-9));
  panels = std::max<std::size_t>(2, panels + (panels % 2));
  const double step = len / static_cast<double>(panels);
  auto sum = f(a) + f(b);
  for (std::size_t i = 1; i < panels; ++i)
    sum += (i % 2 == 1 ? 4.0 : 2.0) * f(a + step * static_cast<double>(i));
  return (step / 3.0) * sum;
}

}  // namespace detail

//! Entrywise integral of the off-diagonal coupling weights over [t1, t2];
//! the diagonal of the result is zero. Pieces are split at switching instants;
//! profiles integrate exactly, other sources use Simpson panels no wider than h.
template <PiecewiseCoupling S>
Matrix integrate_weights(const S& schedule, double t1, double t2, double h = 1e-3) {
  auto breaks = std::span<const double>(schedule.breakpoints());
  if (t2 < t1) throw std::invalid_argument("integrate_weights: reversed interval");
  if (t1 < breaks.front() || t2 > breaks.back())
    throw std::out_of_range("integrate_weights: interval outside horizon");
  const auto n = static_cast<Eigen::Index>(schedule.dimension());
  Matrix W = Matrix::Zero(n, n);
  if (t2 == t1) return W;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = std::max(t1, breaks[k]);
    const double b = std::min(t2, breaks[k + 1]);
    if (!(b > a)) continue;
    if constexpr (std::same_as<S, CouplingSchedule>) {
      W += schedule.segment(k).profile.integral(a, b, breaks[k]) * schedule.base_laplacian(k);
    } else {
      W += detail::simpson([&](double t) -> Matrix { return schedule.segment_matrix(k, t); }, a, b, h);
    }
  }
  W.diagonal().setZero();
  return W;
}

struct DeltaEdgeGraph {
  std::size_t n = 0;
  double threshold = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  std::vector<std::vector<VertexId>> out;  // out[j] = {i : j -> i is a delta-edge}

  bool has_edge(VertexId from, VertexId to) const {
    return std::find(out[from].begin(), out[from].end(), to) != out[from].end();
  }
  std::size_t edge_count() const {
    std::size_t c = 0;
    for (const auto& o : out) c += o.size();
    return c;
  }
};

//! Edge j -> i iff W_ij > delta (strict).
inline DeltaEdgeGraph delta_edges(const Matrix& W, double delta, double t1 = 0.0, double t2 = 0.0) {
  DeltaEdgeGraph g;
  g.n = static_cast<std::size_t>(W.rows());
  g.threshold = delta;
  g.t1 = t1;
  g.t2 = t2;
  g.out.resize(g.n);
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      if (i != j && W(i, j) > delta) g.out[static_cast<std::size_t>(j)].push_back(static_cast<std::size_t>(i));
  return g;
}

namespace detail {

inline std::vector<char> reachable_from(const DeltaEdgeGraph& g, VertexId root) {
  std::vector<char> seen(g.n, 0);
  std::queue<VertexId> q;
  seen[root] = 1;
  q.push(root);
  while (!q.empty()) {
    VertexId v = q.front();
    q.pop();
    for (VertexId w : g.out[v])
      if (!seen[w]) {
        seen[w] = 1;
        q.push(w);
      }
  }
  return seen;
}

}  // namespace detail

struct SpanningTreeResult {
  bool found = false;
  std::optional<std::vector<VertexId>> roots;  // one per cluster when found
};

//! For every cluster, look for any vertex whose delta-paths reach all members.
inline SpanningTreeResult has_cluster_spanning_tree(const DeltaEdgeGraph& g, const Clustering& c) {
  if (g.n != c.n()) throw std::invalid_argument("has_cluster_spanning_tree: size mismatch");
  std::vector<std::vector<char>> reach(g.n);
  for (VertexId v = 0; v < g.n; ++v) reach[v] = detail::reachable_from(g, v);

  std::vector<VertexId> roots;
  for (ClusterId p = 0; p < c.K(); ++p) {
    const auto& members = c.members(p);
    std::optional<VertexId> root;
    for (VertexId v = 0; v < g.n && !root; ++v)
      if (std::all_of(members.begin(), members.end(), [&](VertexId i) { return reach[v][i] != 0; }))
        root = v;
    if (!root) return {};
    roots.push_back(*root);
  }
  return {true, std::move(roots)};
}

//! Largest b such that a delta-cluster-spanning-tree exists for every delta < b
//! (infinity when all clusters are singletons, 0 when none exists for delta = 0).
inline double cluster_tree_bottleneck(const Matrix& W, const Clustering& c) {
  std::vector<double> values;
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      if (i != j && W(i, j) > 0.0) values.push_back(W(i, j));
  auto tree_with_min = [&](double v) {
    // edges with W >= v, i.e. delta just below v
    return has_cluster_spanning_tree(delta_edges(W, std::nextafter(v, -1.0)), c).found;
  };
  bool all_singletons = true;
  for (ClusterId p = 0; p < c.K(); ++p) all_singletons = all_singletons && c.members(p).size() == 1;
  if (all_singletons) return std::numeric_limits<double>::infinity();
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty() || !tree_with_min(values.front())) return 0.0;
  // Tree existence is monotone in the threshold: binary search the last feasible value.
  std::size_t lo = 0, hi = values.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (tree_with_min(values[mid]))
      lo = mid;
    else
      hi = mid - 1;
  }
  return values[lo];
}

//! Every intra-cluster pair of rows shares a positive column.
inline bool is_cluster_scrambling(const Matrix& A, const Clustering& c) {
  if (A.rows() != A.cols() || static_cast<std::size_t>(A.rows()) != c.n())
    throw std::invalid_argument("is_cluster_scrambling: size mismatch");
  for (ClusterId p = 0; p < c.K(); ++p) {
    const auto& m = c.members(p);
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        bool shared = false;
        for (Eigen::Index k = 0; k < A.cols() && !shared; ++k)
          shared = A(static_cast<Eigen::Index>(m[a]), k) > 0.0 && A(static_cast<Eigen::Index>(m[b]), k) > 0.0;
        if (!shared) return false;
      }
  }
  return true;
}

inline bool is_cluster_scrambling(const DeltaEdgeGraph& g, const Clustering& c) {
  const auto n = static_cast<Eigen::Index>(g.n);
  Matrix A = Matrix::Zero(n, n);
  // Definition uses the graph's edges k -> i; rows i, columns k.
  for (VertexId j = 0; j < g.n; ++j)
    for (VertexId i : g.out[j]) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return is_cluster_scrambling(A, c);
}

}  // namespace clustcons
