#pragma once

// Fixed-step fourth-order Runge-Kutta integration of x' = L(t) x + I(t), the
// fundamental matrix of the homogeneous part and the K-dimensional quotient
// system z' = B(t) z + I~(t).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <utility>
#include <vector>

#include "clustcons/graph.hpp"
#include "clustcons/measures.hpp"

namespace clustcons {

inline constexpr double default_step = 1e-3;

//! Inputs that are identical inside each cluster: I_i(t) = I~_{p(i)}(t).
class InputSignal {
 public:
  using Function = std::function<double(double)>;

  static InputSignal per_cluster(Clustering c, std::vector<Function> functions) {
    if (functions.size() != c.K()) throw std::invalid_argument("input: need one function per cluster");
    InputSignal s;
    s.clustering_ = std::move(c);
    s.functions_ = std::move(functions);
    return s;
  }

  //! I~_p(t) = alpha_p u(t).
  static InputSignal factored(Clustering c, Vector alpha, Function u) {
    if (static_cast<std::size_t>(alpha.size()) != c.K())
      throw std::invalid_argument("input: alpha must have one entry per cluster");
    InputSignal s;
    s.functions_.reserve(c.K());
    for (Eigen::Index p = 0; p < alpha.size(); ++p) {
      const double a = alpha[p];
      s.functions_.push_back([a, u](double t) { return a * u(t); });
    }
    s.clustering_ = std::move(c);
    s.alpha_ = std::move(alpha);
    s.u_ = std::move(u);
    return s;
  }

  static InputSignal zero(Clustering c) {
    const auto K = static_cast<Eigen::Index>(c.K());
    return factored(std::move(c), Vector::Zero(K), [](double) { return 0.0; });
  }

  const Clustering& clustering() const { return clustering_; }
  std::size_t K() const { return functions_.size(); }
  bool is_factored() const { return static_cast<bool>(u_); }
  const Vector& alpha() const { return alpha_; }
  const Function& u() const { return u_; }

  double cluster_value(ClusterId p, double t) const { return functions_.at(p)(t); }

  Vector cluster_values(double t) const {
    Vector v(static_cast<Eigen::Index>(K()));
    for (ClusterId p = 0; p < K(); ++p) v[static_cast<Eigen::Index>(p)] = functions_[p](t);
    return v;
  }

  Vector agent_values(double t) const {
    const Vector per = cluster_values(t);
    Vector v(static_cast<Eigen::Index>(clustering_.n()));
    for (VertexId i = 0; i < clustering_.n(); ++i)
      v[static_cast<Eigen::Index>(i)] = per[static_cast<Eigen::Index>(clustering_.cluster_of(i))];
    return v;
  }

 private:
  Clustering clustering_;
  std::vector<Function> functions_;
  Vector alpha_;
  Function u_;
};

template <class T>
struct Sampled {
  std::vector<double> times;
  std::vector<T> values;

  const T& back() const { return values.back(); }
  std::size_t size() const { return times.size(); }
};

struct Trajectory {
  double t0 = 0.0;
  double h = default_step;
  std::vector<double> times;
  std::vector<Vector> states;

  std::size_t size() const { return times.size(); }

  //! Header t,x_0,...,x_{n-1}; shortest round-trip decimal for every value.
  void write_csv(std::ostream& os) const;
};

struct TransitionMatrix {
  std::vector<double> times;
  std::vector<Matrix> samples;

  const Matrix& final() const { return samples.back(); }
};

struct GridStep {
  std::size_t segment;
  double from;
  double to;
};

//! Integration steps covering [t0, t1]: each switching interval is cut into
//! equal steps no longer than h, so every switching instant is a grid point.
template <PiecewiseCoupling S>
std::vector<GridStep> integration_grid(const S& source, double t0, double t1, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("integration step must be positive");
  auto breaks = std::span<const double>(source.breakpoints());
  if (t0 < breaks.front() || t1 > breaks.back() || t1 < t0) {
    std::ostringstream os;
    os << "integration interval [" << t0 << ", " << t1 << "] not covered by [" << breaks.front() << ", "
       << breaks.back() << "]";
    throw std::out_of_range(os.str());
  }
  std::vector<GridStep> steps;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = std::max(t0, breaks[k]);
    const double b = std::min(t1, breaks[k + 1]);
    if (!(b > a)) continue;
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / h - 1e-9)));
    const double dt = (b - a) / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double from = a + dt * static_cast<double>(i);
      const double to = i + 1 == m ? b : a + dt * static_cast<double>(i + 1);
      steps.push_back({k, from, to});
    }
  }
  return steps;
}

struct NoForcing {};

//! Advances y' = L(t) y + f(t) across [t0, t1]. observe(t, y) sees the initial
//! value and the value after every step.
template <PiecewiseCoupling S, class Forcing, class Observer>
Matrix propagate(const S& source, Matrix y, double t0, double t1, double h, const Forcing& forcing,
                 Observer&& observe) {
  auto rhs = [&](std::size_t k, double t, const Matrix& state) -> Matrix {
    Matrix d = source.segment_matrix(k, t) * state;
    if constexpr (!std::same_as<Forcing, NoForcing>) d += forcing(t);
    return d;
  };
  observe(t0, std::as_const(y));
  for (const GridStep& s : integration_grid(source, t0, t1, h)) {
    const double dt = s.to - s.from;
    const double mid = s.from + 0.5 * dt;
    const Matrix k1 = rhs(s.segment, s.from, y);
    const Matrix k2 = rhs(s.segment, mid, y + (0.5 * dt) * k1);
    const Matrix k3 = rhs(s.segment, mid, y + (0.5 * dt) * k2);
    const Matrix k4 = rhs(s.segment, s.to, y + dt * k3);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "integration diverged: non-finite state at t=" << s.to;
      throw std::runtime_error(os.str());
    }
    observe(s.to, std::as_const(y));
  }
  return y;
}

template <PiecewiseCoupling S>
Trajectory integrate_state(const S& schedule, const InputSignal& input, const Vector& x0, double t0, double T,
                           double h = default_step) {
  if (static_cast<std::size_t>(x0.size()) != schedule.dimension() ||
      input.clustering().n() != schedule.dimension())
    throw std::invalid_argument("integrate_state: dimension mismatch");
  Trajectory traj;
  traj.t0 = t0;
  traj.h = h;
  auto forcing = [&](double t) -> Matrix { return input.agent_values(t); };
  propagate(schedule, Matrix(x0), t0, T, h, forcing, [&](double t, const Matrix& y) {
    traj.times.push_back(t);
    traj.states.emplace_back(y.col(0));
  });
  return traj;
}

//! Homogeneous solution x' = L(t) x (no input).
template <PiecewiseCoupling S>
Trajectory integrate_homogeneous(const S& schedule, const Vector& x0, double t0, double T, double h = default_step) {
  Trajectory traj;
  traj.t0 = t0;
  traj.h = h;
  propagate(schedule, Matrix(x0), t0, T, h, NoForcing{}, [&](double t, const Matrix& y) {
    traj.times.push_back(t);
    traj.states.emplace_back(y.col(0));
  });
  return traj;
}

//! Phi(t, t0) from Phi' = L(t) Phi, Phi(t0, t0) = I. Keeps every stride-th
//! grid sample plus the last one.
template <PiecewiseCoupling S>
TransitionMatrix transition_matrix(const S& schedule, double t0, double t1, double h = default_step,
                                   std::size_t stride = 1) {
  const auto n = static_cast<Eigen::Index>(schedule.dimension());
  TransitionMatrix tm;
  std::size_t count = 0;
  double last_t = t0;
  Matrix last;
  propagate(schedule, Matrix::Identity(n, n), t0, t1, h, NoForcing{}, [&](double t, const Matrix& y) {
    if (stride <= 1 || count % stride == 0) {
      tm.times.push_back(t);
      tm.samples.push_back(y);
    }
    ++count;
    last_t = t;
    last = y;
  });
  if (tm.times.back() != last_t) {
    tm.times.push_back(last_t);
    tm.samples.push_back(std::move(last));
  }
  return tm;
}

//! Psi(t, t0) of z' = B(t) z; the B schedule comes from extract_common_influence.
template <PiecewiseCoupling S>
TransitionMatrix quotient_transition(const S& b_schedule, double t0, double t1, double h = default_step,
                                     std::size_t stride = 1) {
  return transition_matrix(b_schedule, t0, t1, h, stride);
}

//! Z2(t) = int_{t0}^{t} Psi(t,s) I~(s) ds for every grid time, via z' = B z + I~, z(t0) = 0.
template <PiecewiseCoupling S>
Sampled<Vector> quotient_forced_series(const S& b_schedule, const InputSignal& input, double t0, double T,
                                       double h = default_step) {
  if (input.K() != b_schedule.dimension()) throw std::invalid_argument("quotient: K mismatch");
  Sampled<Vector> out;
  auto forcing = [&](double t) -> Matrix { return input.cluster_values(t); };
  const auto K = static_cast<Eigen::Index>(input.K());
  propagate(b_schedule, Matrix::Zero(K, 1), t0, T, h, forcing, [&](double t, const Matrix& y) {
    out.times.push_back(t);
    out.values.emplace_back(y.col(0));
  });
  return out;
}

template <PiecewiseCoupling S>
Vector quotient_forced_response(const S& b_schedule, const InputSignal& input, double t0, double t,
                                double h = default_step) {
  if (input.K() != b_schedule.dimension()) throw std::invalid_argument("quotient: K mismatch");
  auto forcing = [&](double s) -> Matrix { return input.cluster_values(s); };
  const auto K = static_cast<Eigen::Index>(input.K());
  return propagate(b_schedule, Matrix::Zero(K, 1), t0, t, h, forcing, [](double, const Matrix&) {}).col(0);
}

//! W(t) = int_{t0}^{t} Psi(t,s) u(s) ds via W' = B W + u I, W(t0) = 0.
template <PiecewiseCoupling S>
Sampled<Matrix> forced_response_series(const S& b_schedule, const std::function<double(double)>& u, double t0,
                                       double T, double h = default_step) {
  const auto K = static_cast<Eigen::Index>(b_schedule.dimension());
  const Matrix eye = Matrix::Identity(K, K);
  auto forcing = [&](double t) -> Matrix { return u(t) * eye; };
  Sampled<Matrix> out;
  propagate(b_schedule, Matrix::Zero(K, K), t0, T, h, forcing, [&](double t, const Matrix& y) {
    out.times.push_back(t);
    out.values.push_back(y);
  });
  return out;
}

template <PiecewiseCoupling S>
Matrix forced_response_matrix(const S& b_schedule, const std::function<double(double)>& u, double t0, double t,
                              double h = default_step) {
  const auto K = static_cast<Eigen::Index>(b_schedule.dimension());
  const Matrix eye = Matrix::Identity(K, K);
  auto forcing = [&](double s) -> Matrix { return u(s) * eye; };
  return propagate(b_schedule, Matrix::Zero(K, K), t0, t, h, forcing, [](double, const Matrix&) {});
}

//! x'(t) = L(t) x + I(t) with L taken from the interval starting at t.
inline Vector state_derivative(const CouplingSchedule& schedule, const InputSignal& input, double t, const Vector& x) {
  const std::size_t k = schedule.segment_index(t);
  return schedule.segment_matrix(k, t) * x + input.agent_values(t);
}

struct InputIntegralReport {
  std::vector<double> times;
  std::vector<Vector> integrals;  // per-cluster running integral at each time
  Vector sup_input;
  Vector sup_integral;
  Vector tail_sup_input;             // sup |I~_p| over the last tail fraction
  std::vector<bool> unbounded_growth;  // never changes sign and does not decay
};

//! Trapezoidal running integral of each cluster input on a uniform grid.
inline InputIntegralReport input_running_integral(const InputSignal& input, double t0, double T,
                                                  double h = default_step, double tail_fraction = 0.2,
                                                  double theta = 1e-3) {
  if (!(T > t0) || !(h > 0.0)) throw std::invalid_argument("input_running_integral: bad grid");
  const auto K = static_cast<Eigen::Index>(input.K());
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((T - t0) / h - 1e-9)));
  const double dt = (T - t0) / static_cast<double>(m);
  const double tail_start = T - tail_fraction * (T - t0);

  InputIntegralReport r;
  r.sup_input = Vector::Zero(K);
  r.sup_integral = Vector::Zero(K);
  r.tail_sup_input = Vector::Zero(K);
  std::vector<bool> seen_pos(input.K(), false), seen_neg(input.K(), false);

  Vector acc = Vector::Zero(K);
  Vector prev = input.cluster_values(t0);
  auto account = [&](double t, const Vector& v) {
    for (Eigen::Index p = 0; p < K; ++p) {
      r.sup_input[p] = std::max(r.sup_input[p], std::abs(v[p]));
      if (t >= tail_start) r.tail_sup_input[p] = std::max(r.tail_sup_input[p], std::abs(v[p]));
      if (v[p] > theta) seen_pos[static_cast<std::size_t>(p)] = true;
      if (v[p] < -theta) seen_neg[static_cast<std::size_t>(p)] = true;
    }
  };
  account(t0, prev);
  r.times.push_back(t0);
  r.integrals.push_back(acc);
  for (std::size_t i = 1; i <= m; ++i) {
    const double t = i == m ? T : t0 + dt * static_cast<double>(i);
    const Vector cur = input.cluster_values(t);
    acc += 0.5 * dt * (prev + cur);
    account(t, cur);
    r.sup_integral = r.sup_integral.cwiseMax(acc.cwiseAbs());
    r.times.push_back(t);
    r.integrals.push_back(acc);
    prev = cur;
  }
  r.unbounded_growth.resize(input.K());
  for (std::size_t p = 0; p < input.K(); ++p)
    r.unbounded_growth[p] = !(seen_pos[p] && seen_neg[p]) && r.tail_sup_input[static_cast<Eigen::Index>(p)] > theta;
  return r;
}

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline void Trajectory::write_csv(std::ostream& os) const {
  const auto n = states.empty() ? 0 : states.front().size();
  std::string line = "t";
  for (Eigen::Index i = 0; i < n; ++i) line += ",x_" + std::to_string(i);
  os << line << '\n';
  for (std::size_t r = 0; r < times.size(); ++r) {
    line.clear();
    detail::append_double(line, times[r]);
    for (Eigen::Index i = 0; i < n; ++i) {
      line += ',';
      detail::append_double(line, states[r][i]);
    }
    os << line << '\n';
  }
}

}  // namespace clustcons
