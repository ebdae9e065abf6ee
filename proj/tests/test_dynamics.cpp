#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "clustcons/conditions.hpp"
#include "clustcons/dynamics.hpp"
#include "clustcons/io.hpp"
#include "clustcons/properties.hpp"

using namespace clustcons;

namespace {

CouplingSchedule pair_schedule(double T, WeightProfile p = WeightProfile::constant(1.0)) {
  return laplacian_from_adjacency({{1}, {0}}, {0.0, T}, {p});
}

CouplingSchedule empty_schedule(std::size_t n, double T) {
  return CouplingSchedule(n, {0.0, T}, {Segment{{}, WeightProfile::constant(1.0)}});
}

Matrix pair_closed_form(double s) {
  const double e = std::exp(-2.0 * s);
  Matrix M(2, 2);
  M << 1 + e, 1 - e, 1 - e, 1 + e;
  return 0.5 * M;
}

}  // namespace

TEST(IntegrationGrid, SwitchingInstantsAreGridPoints) {
  const CouplingSchedule s = laplacian_from_adjacency(
      {{1}, {0}}, {0.0, 0.3337, 1.0, 1.25},
      {WeightProfile::constant(1.0), WeightProfile::constant(2.0), WeightProfile::constant(1.0)});
  const auto grid = integration_grid(s, 0.0, 1.25, 0.1);
  std::vector<double> ends;
  for (const auto& g : grid) {
    EXPECT_LE(g.to - g.from, 0.1 + 1e-12);
    ends.push_back(g.to);
  }
  for (double b : {0.3337, 1.0, 1.25}) EXPECT_NE(std::find(ends.begin(), ends.end(), b), ends.end());
  EXPECT_EQ(grid.front().from, 0.0);
}

TEST(IntegrateState, NoCouplingNoInput) {
  const Clustering c = Clustering::from_assignment({0, 1, 1});
  Vector x0(3);
  x0 << 0.3, -2, 5;
  const Trajectory tr = integrate_state(empty_schedule(3, 2.0), InputSignal::zero(c), x0, 0.0, 2.0, 0.01);
  for (const Vector& x : tr.states) EXPECT_EQ(x, x0);
}

TEST(IntegrateState, SineInputAntiderivative) {
  const Clustering c = Clustering::from_assignment({0, 1, 1});
  const InputSignal in = InputSignal::per_cluster(c, {[](double t) { return std::sin(t); }, [](double t) { return std::sin(t); }});
  Vector x0(3);
  x0 << 1, 2, -1;
  const Trajectory tr = integrate_state(empty_schedule(3, 10.0), in, x0, 0.0, 10.0);
  for (std::size_t k = 0; k < tr.size(); ++k)
    for (Eigen::Index i = 0; i < 3; ++i)
      EXPECT_NEAR(tr.states[k][i], x0[i] + 1.0 - std::cos(tr.times[k]), 1e-8);
}

TEST(IntegrateState, PairClosedForm) {
  const Clustering c = Clustering::from_assignment({0, 0});
  Vector x0(2);
  x0 << 1, 0;
  const Trajectory tr = integrate_state(pair_schedule(5.0), InputSignal::zero(c), x0, 0.0, 5.0);
  for (std::size_t k = 0; k < tr.size(); k += 97) {
    const double e = std::exp(-2.0 * tr.times[k]);
    EXPECT_NEAR(tr.states[k][0], 0.5 + 0.5 * e, 1e-6);
    EXPECT_NEAR(tr.states[k][1], 0.5 - 0.5 * e, 1e-6);
  }
}

TEST(IntegrateState, DimensionMismatchThrows) {
  const Clustering c = Clustering::from_assignment({0, 0, 1});
  EXPECT_THROW(integrate_state(pair_schedule(1.0), InputSignal::zero(c), Vector::Zero(2), 0.0, 1.0),
               std::invalid_argument);
}

TEST(IntegrateState, ExtremesContractWithoutInput) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const CouplingSchedule s = random_schedule(6, 3.0, rng);
    Vector x0(6);
    for (Eigen::Index i = 0; i < 6; ++i) x0[i] = u(rng);
    const Trajectory tr = integrate_homogeneous(s, x0, 0.0, 3.0);
    for (std::size_t k = 1; k < tr.size(); ++k) {
      EXPECT_GE(tr.states[k].minCoeff(), tr.states[k - 1].minCoeff() - 1e-12);
      EXPECT_LE(tr.states[k].maxCoeff(), tr.states[k - 1].maxCoeff() + 1e-12);
    }
  }
}

TEST(IntegrateState, CsvRoundTripsExactly) {
  std::mt19937_64 rng(6);
  const CouplingSchedule s = random_schedule(3, 1.0, rng);
  Vector x0(3);
  x0 << 0.1, 1.0 / 3.0, -0.7;
  const Trajectory tr = integrate_homogeneous(s, x0, 0.0, 1.0, 0.01);
  std::ostringstream os;
  tr.write_csv(os);
  const CsvTable t = read_csv(os.str());
  ASSERT_EQ(t.header, (std::vector<std::string>{"t", "x_0", "x_1", "x_2"}));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(t.column("t")[k], tr.times[k]);
    EXPECT_EQ(t.column("x_1")[k], tr.states[k][1]);
  }
}

TEST(TransitionMatrix, ZeroLengthIsIdentity) {
  const TransitionMatrix tm = transition_matrix(pair_schedule(1.0), 0.4, 0.4);
  EXPECT_EQ(tm.final(), Matrix(Matrix::Identity(2, 2)));
}

TEST(TransitionMatrix, PairClosedForm) {
  const TransitionMatrix tm = transition_matrix(pair_schedule(3.0), 0.0, 3.0, default_step, 250);
  for (std::size_t k = 0; k < tm.times.size(); ++k)
    EXPECT_LT((tm.samples[k] - pair_closed_form(tm.times[k])).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TransitionMatrix, StochasticOnRandomSchedules) {
  const PropertyResult r = phi_stochastic_suite(20, 3);
  EXPECT_TRUE(r.passed()) << r.line();
}

TEST(TransitionMatrix, CocycleAcrossASwitch) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const CouplingSchedule s = random_schedule(5, 2.0, rng, {4, 0.5, 0.1, 1.5});
    const auto b = s.breakpoints();
    const double mid = b.size() > 2 ? b[1] : 1.0;
    const Matrix whole = transition_matrix(s, 0.0, 2.0).final();
    const Matrix split = transition_matrix(s, mid, 2.0).final() * transition_matrix(s, 0.0, mid).final();
    EXPECT_LT((whole - split).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TransitionMatrix, DeltaEdgeLowerBoundOnRandomSchedules) {
  const PropertyResult r = delta_edge_bound_suite(20, 11);
  EXPECT_TRUE(r.passed()) << r.line();
}

// Node 0 first leaks towards two silent nodes, then feeds node 1 through a short
// delta-edge, after which node 1 leaks towards node 2. Every pairwise integral
// stays below M1, yet Phi_10 sits below min{1,delta} e^{-(n-1) M1}; only the
// squared factor e^{-2(n-1) M1} survives.
TEST(TransitionMatrix, AdversarialScheduleNeedsSquaredFactor) {
  const double M1 = 1.0, delta = 0.5, w = M1 * (1.0 - 1e-3), tau = 0.01;
  const double impulse = delta * 1.01;
  std::vector<Segment> segs{
      {{{0, 1, w}, {0, 2, w}}, WeightProfile::constant(1.0)},
      {{{1, 0, impulse / tau}}, WeightProfile::constant(1.0)},
      {{{1, 2, w}}, WeightProfile::constant(1.0)},
  };
  const CouplingSchedule s(3, {0.0, 1.0, 1.0 + tau, 2.0 + tau}, segs);
  const double T = 2.0 + tau;
  const Matrix W = integrate_weights(s, 0.0, T);
  EXPECT_LT(W.maxCoeff(), M1);
  ASSERT_TRUE(delta_edges(W, delta).has_edge(0, 1));

  const Matrix phi = transition_matrix(s, 0.0, T, 1e-4, 1u << 30).final();
  const double expected = std::exp(-2.0 * w) * (1.0 - std::exp(-impulse)) * std::exp(-w);
  EXPECT_NEAR(phi(1, 0), expected, 1e-9);
  EXPECT_LT(phi(1, 0), delta_edge_bound(delta, 3, M1));
  EXPECT_GE(phi(1, 0), std::min(1.0, delta) * std::exp(-2.0 * 2.0 * M1));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_GE(phi(i, i), std::exp(-2.0 * M1));
}

TEST(Quotient, SingleClusterAndZeroCouplingGiveIdentity) {
  const CouplingSchedule one = empty_schedule(1, 4.0);
  EXPECT_EQ(quotient_transition(one, 0.0, 4.0).final(), Matrix(Matrix::Ones(1, 1)));
  EXPECT_EQ(quotient_transition(empty_schedule(3, 4.0), 0.0, 4.0).final(), Matrix(Matrix::Identity(3, 3)));
}

TEST(Quotient, StaticMatrixWithProfileMatchesClosedForm) {
  const double T = 2.5;
  const CouplingSchedule B = pair_schedule(T, WeightProfile::half_sine(T, 1.7));
  const Matrix psi = quotient_transition(B, 0.0, T).final();
  EXPECT_LT((psi - pair_closed_form(1.7 * 2.0 * T / std::numbers::pi)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Quotient, ForcedResponseVanishesWithoutInput) {
  const Clustering c = Clustering::from_assignment({0, 1});
  const Vector z = quotient_forced_response(pair_schedule(3.0), InputSignal::zero(c), 0.0, 3.0);
  EXPECT_TRUE(z.isZero());
}

TEST(Quotient, ForcedResponseWithZeroCoupling) {
  const Clustering c = Clustering::from_assignment({0, 1, 2});
  Vector alpha(3);
  alpha << 1.5, -2, 7;
  const InputSignal in = InputSignal::factored(c, alpha, [](double t) { return std::sin(t); });
  const Sampled<Vector> z = quotient_forced_series(empty_schedule(3, 8.0), in, 0.0, 8.0);
  for (std::size_t k = 0; k < z.size(); k += 101)
    EXPECT_LT((z.values[k] - alpha * (1.0 - std::cos(z.times[k]))).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Quotient, ForcedResponsePairClosedForm) {
  const Clustering c = Clustering::from_assignment({0, 1});
  const InputSignal in = InputSignal::per_cluster(c, {[](double) { return 1.0; }, [](double) { return 0.0; }});
  const Sampled<Vector> z = quotient_forced_series(pair_schedule(4.0), in, 0.0, 4.0);
  for (std::size_t k = 0; k < z.size(); k += 53) {
    const double t = z.times[k];
    const double d = 0.5 * (1.0 - std::exp(-2.0 * t));
    EXPECT_NEAR(z.values[k][0], 0.5 * (t + d), 1e-6);
    EXPECT_NEAR(z.values[k][1], 0.5 * (t - d), 1e-6);
  }
}

TEST(ForcedResponseMatrix, ZeroInputAndZeroCoupling) {
  EXPECT_TRUE(forced_response_matrix(pair_schedule(2.0), [](double) { return 0.0; }, 0.0, 2.0).isZero());
  const Matrix W = forced_response_matrix(empty_schedule(2, 2.0), [](double t) { return std::cos(t); }, 0.0, 2.0);
  EXPECT_LT((W - std::sin(2.0) * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ForcedResponseMatrix, TimesAlphaEqualsQuotientResponse) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    auto [s, c] = random_common_influence_schedule(6.0, rng);
    const CommonInfluence ci = extract_common_influence(s, c);
    ASSERT_TRUE(ci.ok());
    Vector alpha = Vector::Random(static_cast<Eigen::Index>(c.K())) * 5.0;
    auto u = [](double t) { return std::sin(t); };
    const InputSignal in = InputSignal::factored(c, alpha, u);
    const Matrix W = forced_response_matrix(*ci.B, u, 0.0, 6.0);
    const Vector z = quotient_forced_response(*ci.B, in, 0.0, 6.0);
    EXPECT_LT((W * alpha - z).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(InputIntegral, SineSupIsTwo) {
  const Clustering c = Clustering::from_assignment({0});
  const InputSignal in = InputSignal::factored(c, Vector::Ones(1), [](double t) { return std::sin(t); });
  const InputIntegralReport r = input_running_integral(in, 0.0, 10.0);
  EXPECT_NEAR(r.sup_integral[0], 2.0, 1e-6);
  EXPECT_NEAR(r.sup_input[0], 1.0, 1e-6);
  EXPECT_FALSE(r.unbounded_growth[0]);
}

TEST(InputIntegral, ZeroAndConstant) {
  const Clustering c = Clustering::from_assignment({0, 1});
  const InputIntegralReport z = input_running_integral(InputSignal::zero(c), 0.0, 5.0);
  EXPECT_EQ(z.sup_integral.maxCoeff(), 0.0);
  EXPECT_FALSE(z.unbounded_growth[0]);
  const InputSignal one = InputSignal::factored(c, Vector::Ones(2), [](double) { return 1.0; });
  const InputIntegralReport r = input_running_integral(one, 1.0, 5.0);
  EXPECT_NEAR(r.integrals.back()[0], 4.0, 1e-12);
  EXPECT_TRUE(r.unbounded_growth[0]);
  EXPECT_TRUE(r.unbounded_growth[1]);
}

TEST(StateDerivative, MatchesRightHandSide) {
  const Clustering c = Clustering::from_assignment({0, 1});
  const InputSignal in = InputSignal::per_cluster(c, {[](double) { return 2.0; }, [](double) { return -1.0; }});
  Vector x(2);
  x << 1, 3;
  const Vector v = state_derivative(pair_schedule(1.0), in, 0.5, x);
  EXPECT_DOUBLE_EQ(v[0], 2.0 + 2.0);
  EXPECT_DOUBLE_EQ(v[1], -2.0 - 1.0);
}
