#pragma once

// Checkers for the standing assumptions on L(t) and I(t): Metzler structure
// (A1), inter-cluster common influence (A2), bounded non-vanishing inputs (A3)
// and recurring delta-cluster-spanning-trees (A4); plus the separation and rank
// conditions, the invariance check and the projection-radius estimator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "clustcons/dynamics.hpp"
#include "clustcons/graph.hpp"
#include "clustcons/measures.hpp"
#include "json.hpp"

namespace clustcons {

enum class Verdict { pass, fail, indeterminate, pass_on_horizon };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::indeterminate:
      return "indeterminate";
    case Verdict::pass_on_horizon:
      return "pass-on-horizon";
  }
  return "indeterminate";
}

struct GridSpec {
  double t0 = 0.0;
  double T = 0.0;
  double h = default_step;
};

struct ConditionReport {
  std::string assumption;
  Verdict verdict = Verdict::indeterminate;
  std::string message;
  double value = std::numeric_limits<double>::quiet_NaN();  // headline number, if any
  nlohmann::json evidence = nlohmann::json::object();
  nlohmann::json parameters = nlohmann::json::object();
  GridSpec grid;

  bool passed() const { return verdict == Verdict::pass || verdict == Verdict::pass_on_horizon; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["assumption"] = assumption;
    j["verdict"] = std::string(to_string(verdict));
    j["message"] = message;
    if (std::isfinite(value)) j["value"] = value;
    j["evidence"] = evidence;
    j["parameters"] = parameters;
    j["grid"] = {{"t0", grid.t0}, {"T", grid.T}, {"h", grid.h}};
    return j;
  }
};

struct SamplePoint {
  std::size_t segment;
  double t;
};

//! Start of every integrator step plus the final time (left limit).
template <PiecewiseCoupling S>
std::vector<SamplePoint> sample_grid(const S& source, double t0, double T, double h) {
  std::vector<SamplePoint> pts;
  const auto steps = integration_grid(source, t0, T, h);
  pts.reserve(steps.size() + 1);
  for (const GridStep& s : steps) pts.push_back({s.segment, s.from});
  if (!steps.empty()) pts.push_back({steps.back().segment, steps.back().to});
  return pts;
}

template <PiecewiseCoupling S>
ConditionReport check_A1(const S& source, double t0, double T, double h = default_step,
                         double tol = analytic_tolerance) {
  ConditionReport r;
  r.assumption = "A1";
  r.grid = {t0, T, h};
  r.parameters = {{"tol", tol}};
  double worst_row_sum = 0.0;
  double min_off_diagonal = std::numeric_limits<double>::infinity();
  std::optional<std::pair<double, Eigen::Index>> offending;
  std::string reason;
  std::size_t samples = 0;
  for (const SamplePoint& pt : sample_grid(source, t0, T, h)) {
    const Matrix L = source.segment_matrix(pt.segment, pt.t);
    ++samples;
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
      const double rs = std::abs(L.row(i).sum());
      worst_row_sum = std::max(worst_row_sum, rs);
      for (Eigen::Index j = 0; j < L.cols(); ++j)
        if (i != j) min_off_diagonal = std::min(min_off_diagonal, L(i, j));
      const bool negative = [&] {
        for (Eigen::Index j = 0; j < L.cols(); ++j)
          if (i != j && L(i, j) < -tol) return true;
        return false;
      }();
      if (!offending && (rs > tol || negative)) {
        offending = {pt.t, i};
        reason = negative ? "negative off-diagonal" : "nonzero row sum";
      }
    }
  }
  r.evidence = {{"samples", samples}, {"max_abs_row_sum", worst_row_sum}};
  if (std::isfinite(min_off_diagonal)) r.evidence["min_off_diagonal"] = min_off_diagonal;
  r.value = worst_row_sum;
  if (offending) {
    r.verdict = Verdict::fail;
    r.evidence["offending_t"] = offending->first;
    r.evidence["offending_row"] = offending->second;
    r.message = reason + " at t=" + std::to_string(offending->first) + ", row " + std::to_string(offending->second);
  } else {
    r.verdict = Verdict::pass;
    r.message = "Metzler with zero row sums on every sample";
  }
  return r;
}

struct CommonInfluence {
  std::optional<CouplingSchedule> B;  // K-vertex schedule sharing the profiles of L
  double max_deviation = 0.0;
  struct Worst {
    double t = 0.0;
    ClusterId p = 0;
    ClusterId q = 0;
    VertexId i = 0;
    VertexId i_prime = 0;
    double deviation = 0.0;
  } worst;
  ConditionReport report;

  bool ok() const { return B.has_value(); }
};

//! Per-cluster partial row sums of L(t): (i, q) -> sum_{j in C_q} L_ij.
inline Matrix cluster_partial_sums(const Matrix& L, const Clustering& c) {
  Matrix S = Matrix::Zero(L.rows(), static_cast<Eigen::Index>(c.K()));
  for (Eigen::Index i = 0; i < L.rows(); ++i)
    for (Eigen::Index j = 0; j < L.cols(); ++j) S(i, static_cast<Eigen::Index>(c.cluster_of(static_cast<VertexId>(j)))) += L(i, j);
  return S;
}

//! Checks that every agent of C_p receives the same total weight from C_q on
//! the integrator grid, and builds B(t) from the per-segment weighted adjacency.
inline CommonInfluence extract_common_influence(const CouplingSchedule& schedule, const Clustering& c,
                                                double h = default_step, double tol = analytic_tolerance) {
  if (c.n() != schedule.n()) throw std::invalid_argument("extract_common_influence: size mismatch");
  CommonInfluence out;
  auto& r = out.report;
  r.assumption = "A2";
  r.grid = {schedule.start(), schedule.horizon(), h};
  r.parameters = {{"tol", tol}, {"K", c.K()}};

  for (const SamplePoint& pt : sample_grid(schedule, schedule.start(), schedule.horizon(), h)) {
    const Matrix S = cluster_partial_sums(schedule.segment_matrix(pt.segment, pt.t), c);
    for (ClusterId p = 0; p < c.K(); ++p) {
      const auto& members = c.members(p);
      for (ClusterId q = 0; q < c.K(); ++q) {
        if (q == p) continue;  // implied by zero row sums
        const auto col = static_cast<Eigen::Index>(q);
        VertexId lo = members.front(), hi = members.front();
        for (VertexId i : members) {
          if (S(static_cast<Eigen::Index>(i), col) < S(static_cast<Eigen::Index>(lo), col)) lo = i;
          if (S(static_cast<Eigen::Index>(i), col) > S(static_cast<Eigen::Index>(hi), col)) hi = i;
        }
        const double dev = S(static_cast<Eigen::Index>(hi), col) - S(static_cast<Eigen::Index>(lo), col);
        if (dev > out.worst.deviation) out.worst = {pt.t, p, q, hi, lo, dev};
      }
    }
  }
  out.max_deviation = out.worst.deviation;
  r.value = out.max_deviation;
  r.evidence = {{"max_deviation", out.max_deviation}};
  if (out.max_deviation > tol) {
    r.verdict = Verdict::fail;
    r.evidence["worst"] = {{"t", out.worst.t},
                           {"p", out.worst.p},
                           {"q", out.worst.q},
                           {"i", out.worst.i},
                           {"i_prime", out.worst.i_prime},
                           {"deviation", out.worst.deviation}};
    r.message = "inter-cluster common influence violated: (p,q)=(" + std::to_string(out.worst.p) + "," +
                std::to_string(out.worst.q) + "), agents i=" + std::to_string(out.worst.i) + " and i'=" +
                std::to_string(out.worst.i_prime) + " differ by " + std::to_string(out.worst.deviation) +
                " at t=" + std::to_string(out.worst.t);
    return out;
  }

  std::vector<Segment> segments;
  segments.reserve(schedule.segment_count());
  for (std::size_t k = 0; k < schedule.segment_count(); ++k) {
    const Matrix S = cluster_partial_sums(schedule.base_laplacian(k), c);
    Segment seg;
    seg.profile = schedule.segment(k).profile;
    for (ClusterId p = 0; p < c.K(); ++p)
      for (ClusterId q = 0; q < c.K(); ++q) {
        if (p == q) continue;
        double mean = 0.0;
        for (VertexId i : c.members(p)) mean += S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
        mean /= static_cast<double>(c.members(p).size());
        if (mean > 0.0) seg.edges.push_back({p, q, mean});
      }
    segments.push_back(std::move(seg));
  }
  std::vector<double> breaks(schedule.breakpoints().begin(), schedule.breakpoints().end());
  out.B.emplace(c.K(), std::move(breaks), std::move(segments));
  r.verdict = Verdict::pass;
  r.message = "inter-cluster common influence holds; B(t) extracted";
  return out;
}

//! Structural intra-cluster identity, bounded input and integral on the grid,
//! and a tail sup above theta (the input does not die out).
inline ConditionReport check_A3(const InputSignal& input, double t0, double T, double h = default_step,
                                double theta = 1e-3, double tail_fraction = 0.2) {
  ConditionReport r;
  r.assumption = "A3";
  r.grid = {t0, T, h};
  r.parameters = {{"theta", theta}, {"tail_fraction", tail_fraction}};
  const InputIntegralReport ir = input_running_integral(input, t0, T, h, tail_fraction, theta);
  std::vector<double> sup_in, sup_int, tail;
  std::vector<bool> growth = ir.unbounded_growth;
  bool finite = true, alive = true, bounded = true;
  for (Eigen::Index p = 0; p < ir.sup_input.size(); ++p) {
    sup_in.push_back(ir.sup_input[p]);
    sup_int.push_back(ir.sup_integral[p]);
    tail.push_back(ir.tail_sup_input[p]);
    finite = finite && std::isfinite(ir.sup_input[p]) && std::isfinite(ir.sup_integral[p]);
    alive = alive && ir.tail_sup_input[p] > theta;
    bounded = bounded && !ir.unbounded_growth[static_cast<std::size_t>(p)];
  }
  r.evidence = {{"sup_input", sup_in},
                {"sup_integral", sup_int},
                {"tail_sup_input", tail},
                {"unbounded_growth", growth},
                {"intra_cluster_identical", true}};
  if (!finite) {
    r.verdict = Verdict::fail;
    r.message = "input or its integral is not finite on the grid";
  } else if (!bounded) {
    r.verdict = Verdict::fail;
    r.message = "running integral grows monotonically (input never changes sign)";
  } else if (!alive) {
    r.verdict = Verdict::fail;
    r.message = "input converges to zero (tail sup below theta)";
  } else {
    r.verdict = Verdict::pass;
    r.message = "inputs bounded, integrals bounded, not vanishing";
  }
  return r;
}

struct A4Options {
  enum class Policy { greedy, fixed };
  double delta = 1.0;
  double M1 = 10.0;
  double h = default_step;
  Policy policy = Policy::greedy;
  std::size_t subwindow_intervals = 3;  // fixed policy: switching intervals per sub-window
};

//! Scans the horizon for consecutive windows of n-1 sub-windows, each carrying a
//! delta-cluster-spanning-tree with every integrated weight below M1.
inline ConditionReport check_A4(const CouplingSchedule& schedule, const Clustering& c, const A4Options& opt = {}) {
  if (c.n() != schedule.n()) throw std::invalid_argument("check_A4: size mismatch");
  ConditionReport r;
  r.assumption = "A4";
  r.grid = {schedule.start(), schedule.horizon(), opt.h};
  r.parameters = {{"delta", opt.delta},
                  {"M1", opt.M1},
                  {"policy", opt.policy == A4Options::Policy::greedy ? "greedy" : "fixed"},
                  {"subwindow_intervals", opt.subwindow_intervals}};

  const auto breaks = schedule.breakpoints();
  const std::size_t intervals = schedule.segment_count();
  std::vector<Matrix> per_interval;
  per_interval.reserve(intervals);
  for (std::size_t k = 0; k < intervals; ++k)
    per_interval.push_back(integrate_weights(schedule, breaks[k], breaks[k + 1], opt.h));

  const std::size_t sub_per_window = std::max<std::size_t>(1, c.n() - 1);
  const auto n = static_cast<Eigen::Index>(c.n());
  nlohmann::json windows = nlohmann::json::array();
  std::vector<double> partial_sums;
  double partial = 0.0;
  std::size_t passing = 0, failing = 0;
  std::size_t idx = 0;
  bool exhausted = false;

  while (!exhausted) {
    nlohmann::json subs = nlohmann::json::array();
    bool window_ok = true;
    double window_delta = std::numeric_limits<double>::infinity();
    const double window_start = breaks[std::min(idx, intervals)];
    for (std::size_t m = 0; m < sub_per_window && !exhausted; ++m) {
      const std::size_t first = idx;
      Matrix acc = Matrix::Zero(n, n);
      bool done = false;
      while (!done) {
        if (idx == intervals) {
          exhausted = true;
          break;
        }
        acc += per_interval[idx++];
        const double max_w = acc.maxCoeff();
        const bool fixed = opt.policy == A4Options::Policy::fixed;
        if (fixed && idx - first < opt.subwindow_intervals) continue;
        const double bottleneck = cluster_tree_bottleneck(acc, c);
        const bool tree = bottleneck > opt.delta;
        const bool bounded = max_w < opt.M1;
        if (fixed || tree || !bounded) {
          done = true;
          const bool ok = tree && bounded;
          window_ok = window_ok && ok;
          const double achieved = std::isfinite(bottleneck) ? bottleneck : opt.delta;
          window_delta = std::min(window_delta, achieved);
          subs.push_back({{"t_start", breaks[first]},
                          {"t_end", breaks[idx]},
                          {"intervals", idx - first},
                          {"bottleneck", achieved},
                          {"max_integral", max_w},
                          {"tree", tree},
                          {"below_M1", bounded}});
          if (!ok) {
            // restart the search after a failed sub-window
            break;
          }
        }
      }
      if (!window_ok) break;
    }
    if (exhausted && (subs.size() < sub_per_window || !window_ok)) break;
    const bool complete = subs.size() == sub_per_window;
    if (complete && window_ok) {
      ++passing;
      partial += std::pow(window_delta, static_cast<double>(c.n() - 1));
      partial_sums.push_back(partial);
    } else {
      ++failing;
    }
    windows.push_back({{"t_start", window_start},
                       {"t_end", breaks[idx]},
                       {"pass", complete && window_ok},
                       {"delta_k", std::isfinite(window_delta) ? window_delta : opt.delta},
                       {"subwindows", subs}});
    if (idx == intervals) break;
  }

  r.evidence = {{"windows", windows},
                {"passing_windows", passing},
                {"failing_windows", failing},
                {"partial_sums", partial_sums}};
  r.value = partial;
  if (passing >= 1 && failing == 0) {
    r.verdict = Verdict::pass_on_horizon;
    r.message = std::to_string(passing) + " complete window(s) with delta-cluster-spanning-trees";
  } else {
    r.verdict = Verdict::fail;
    r.message = passing == 0 ? "no complete window carries delta-cluster-spanning-trees"
                             : std::to_string(failing) + " window(s) without delta-cluster-spanning-trees";
  }
  return r;
}

//! min{1, delta} e^{-(n-1) M1}.
inline double delta_edge_bound(double delta, std::size_t n, double M1) {
  if (!(delta >= 0.0) || n < 2 || !(M1 > 0.0)) throw std::invalid_argument("delta_edge_bound: need delta >= 0, n >= 2, M1 > 0");
  return std::min(1.0, delta) * std::exp(-static_cast<double>(n - 1) * M1);
}

namespace detail {

inline std::size_t tail_begin(const std::vector<double>& times, double tail_fraction) {
  if (times.empty()) return 0;
  const double cut = times.back() - tail_fraction * (times.back() - times.front());
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), cut) - times.begin());
}

}  // namespace detail

//! limsup of eta(Z2(t)) estimated by its max over the tail window.
inline ConditionReport separation_condition(const Sampled<Vector>& z2, double tail_fraction = 0.5,
                                            double delta_prime = 0.05) {
  ConditionReport r;
  r.assumption = "separation";
  r.parameters = {{"tail_fraction", tail_fraction}, {"delta_prime", delta_prime}};
  if (!z2.times.empty()) r.grid = {z2.times.front(), z2.times.back(), 0.0};
  double best = 0.0;
  for (std::size_t i = detail::tail_begin(z2.times, tail_fraction); i < z2.size(); ++i)
    best = std::max(best, eta(z2.values[i]));
  r.value = best;
  r.evidence = {{"limsup_estimate", best}};
  r.verdict = best >= delta_prime ? Verdict::pass : Verdict::fail;
  r.message = "tail max of eta(Z2) = " + std::to_string(best);
  return r;
}

inline ConditionReport rank_condition(const Sampled<Matrix>& w, std::size_t K, double tol = 1e-9,
                                                 double tail_fraction = 0.5) {
  ConditionReport r;
  r.assumption = "rank_condition";
  r.parameters = {{"tol", tol}, {"tail_fraction", tail_fraction}, {"K", K}};
  if (!w.times.empty()) r.grid = {w.times.front(), w.times.back(), 0.0};
  std::size_t best = 0;
  for (std::size_t i = detail::tail_begin(w.times, tail_fraction); i < w.size() && best < K; ++i)
    best = std::max(best, numerical_rank(w.values[i], tol));
  r.value = static_cast<double>(best);
  r.evidence = {{"max_tail_rank", best}};
  r.verdict = best == K ? Verdict::pass : Verdict::fail;
  r.message = "max rank over tail = " + std::to_string(best);
  return r;
}

//! max_t Delta_C(x(t)) for a run started on the consensus subspace.
template <PiecewiseCoupling S>
double check_invariance(const S& schedule, const InputSignal& input, const Vector& x0, double t0, double T,
                        double h = default_step) {
  const Clustering& c = input.clustering();
  if (cluster_hajnal_diameter(x0, c) > 1e-12)
    throw std::invalid_argument("check_invariance: initial state is not in the consensus subspace");
  double worst = 0.0;
  auto forcing = [&](double t) -> Matrix { return input.agent_values(t); };
  propagate(schedule, Matrix(x0), t0, T, h, forcing,
            [&](double, const Matrix& y) { worst = std::max(worst, cluster_hajnal_diameter(Vector(y.col(0)), c)); });
  return worst;
}

//! Sup-norm gap between the cluster means of x(t) (full system from x0) and the
//! quotient solution z' = B z + I~, z(t0) = z0, over the shared grid.
template <PiecewiseCoupling S, PiecewiseCoupling Q>
double quotient_mismatch(const S& full, const Q& quotient, const InputSignal& input, const Vector& x0,
                         const Vector& z0, double T, double h = default_step) {
  const double t0 = std::span<const double>(full.breakpoints()).front();
  const Trajectory x = integrate_state(full, input, x0, t0, T, h);
  std::vector<Vector> z;
  auto forcing = [&](double t) -> Matrix { return input.cluster_values(t); };
  propagate(quotient, Matrix(z0), t0, T, h, forcing, [&](double, const Matrix& y) { z.emplace_back(y.col(0)); });
  if (z.size() != x.size()) throw std::invalid_argument("quotient_mismatch: grids differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    worst = std::max(worst, (cluster_means(x.states[i], input.clustering()) - z[i]).cwiseAbs().maxCoeff());
  return worst;
}

//! Columns: K cluster indicators, then e_i - e_{first member} for the remaining
//! members of every cluster.
inline Matrix consensus_basis(const Clustering& c) {
  const auto n = static_cast<Eigen::Index>(c.n());
  Matrix P = Matrix::Zero(n, n);
  Eigen::Index col = 0;
  for (ClusterId p = 0; p < c.K(); ++p, ++col)
    for (VertexId v : c.members(p)) P(static_cast<Eigen::Index>(v), col) = 1.0;
  for (ClusterId p = 0; p < c.K(); ++p) {
    const auto& m = c.members(p);
    for (std::size_t a = 1; a < m.size(); ++a, ++col) {
      P(static_cast<Eigen::Index>(m[a]), col) = 1.0;
      P(static_cast<Eigen::Index>(m[0]), col) = -1.0;
    }
  }
  return P;
}

struct ProjectionRadius {
  double rho = 0.0;
  double lower_left = 0.0;  // sup over samples of ||lower-left block of P^-1 Phi P||_inf
  Sampled<double> decay;     // ||Phi^_22(t, t0)||_inf
  ConditionReport report;
};

inline double infinity_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

template <PiecewiseCoupling S>
ProjectionRadius projection_radius_estimate(const S& schedule, const Clustering& c, double t0, double T,
                                            double h = default_step, double block_tol = 1e-8,
                                            std::size_t samples = 500) {
  if (c.n() != schedule.dimension()) throw std::invalid_argument("projection_radius: size mismatch");
  if (!(T > t0)) throw std::invalid_argument("projection_radius: need T > t0");
  ProjectionRadius out;
  auto& r = out.report;
  r.assumption = "projection_radius";
  r.grid = {t0, T, h};
  r.parameters = {{"block_tol", block_tol}};

  const auto n = static_cast<Eigen::Index>(c.n());
  const auto K = static_cast<Eigen::Index>(c.K());
  const Matrix P = consensus_basis(c);
  const Eigen::PartialPivLU<Matrix> lu(P);
  const std::size_t total = integration_grid(schedule, t0, T, h).size();
  const std::size_t stride = std::max<std::size_t>(1, total / std::max<std::size_t>(1, samples));

  std::size_t count = 0;
  Matrix last_hat;
  auto inspect = [&](double t, const Matrix& Y) {
    const Matrix hat = lu.solve(Y);
    out.lower_left = std::max(out.lower_left, infinity_norm(hat.bottomLeftCorner(n - K, K)));
    out.decay.times.push_back(t);
    out.decay.values.push_back(infinity_norm(hat.bottomRightCorner(n - K, n - K)));
  };
  Matrix Y = propagate(schedule, P, t0, T, h, NoForcing{}, [&](double t, const Matrix& y) {
    if (count++ % stride == 0) inspect(t, y);
  });
  if (out.decay.times.back() != T) inspect(T, Y);

  const double block = out.decay.values.back();
  out.rho = n == K ? 0.0 : std::pow(block, 1.0 / (T - t0));
  r.value = out.rho;
  r.evidence = {{"rho", out.rho}, {"lower_left_sup", out.lower_left}, {"final_block_norm", block}};
  if (out.lower_left > block_tol) {
    r.verdict = Verdict::fail;
    r.message = "lower-left block not negligible: consensus subspace is not invariant";
  } else {
    r.verdict = out.rho < 1.0 ? Verdict::pass : Verdict::fail;
    r.message = "projection radius estimate " + std::to_string(out.rho);
  }
  return out;
}

}  // namespace clustcons
