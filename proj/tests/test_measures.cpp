#include <gtest/gtest.h>

#include <random>

#include "clustcons/measures.hpp"
#include "clustcons/properties.hpp"

using namespace clustcons;

namespace {

// Straight from the definitions, with every ordered pair and explicit loops.
double oracle_mu(const Matrix& A, const Clustering& c) {
  double mu = 1.0;
  for (VertexId i = 0; i < c.n(); ++i)
    for (VertexId j = 0; j < c.n(); ++j) {
      if (i == j || c.cluster_of(i) != c.cluster_of(j)) continue;
      double s = 0.0;
      for (Eigen::Index k = 0; k < A.cols(); ++k) s += std::min(A(Eigen::Index(i), k), A(Eigen::Index(j), k));
      mu = std::min(mu, s);
    }
  return mu;
}

double oracle_delta(const Matrix& M, const Clustering& c) {
  double d = 0.0;
  for (VertexId i = 0; i < c.n(); ++i)
    for (VertexId j = 0; j < c.n(); ++j) {
      if (c.cluster_of(i) != c.cluster_of(j)) continue;
      double row = 0.0;
      for (Eigen::Index k = 0; k < M.cols(); ++k)
        row = std::max(row, std::abs(M(Eigen::Index(i), k) - M(Eigen::Index(j), k)));
      d = std::max(d, row);
    }
  return d;
}

}  // namespace

TEST(Ergodicity, IdentityWithPairedClustersIsZero) {
  EXPECT_EQ(cluster_ergodicity(Matrix::Identity(4, 4), Clustering::from_assignment({0, 0, 1, 1})), 0.0);
}

TEST(Ergodicity, IdenticalRowsGiveOne) {
  Matrix A(3, 3);
  A << 0.2, 0.3, 0.5, 0.2, 0.3, 0.5, 0.2, 0.3, 0.5;
  EXPECT_NEAR(cluster_ergodicity(A, Clustering::from_assignment({0, 0, 0})), 1.0, 1e-15);
}

TEST(Ergodicity, HandEvaluatedExampleWithSingleton) {
  Matrix A(3, 3);
  A << 0.5, 0.5, 0, 0.2, 0.3, 0.5, 0, 0, 1;
  EXPECT_NEAR(cluster_ergodicity(A, Clustering::from_members(3, {{0, 1}, {2}})), 0.5, 1e-15);
}

TEST(Ergodicity, RejectsNonStochastic) {
  Matrix A(2, 2);
  A << 0.5, 0.6, 1, 0;
  EXPECT_THROW(cluster_ergodicity(A, Clustering::from_assignment({0, 0})), std::invalid_argument);
}

TEST(Ergodicity, MatchesOracleAndStaysInUnitInterval) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const Matrix A = random_stochastic(n, rng);
    const Clustering c = random_clustering(n, rng);
    const double mu = cluster_ergodicity(A, c);
    EXPECT_NEAR(mu, oracle_mu(A, c), 1e-14);
    EXPECT_GE(mu, 0.0);
    EXPECT_LE(mu, 1.0);
  }
}

TEST(HajnalDiameter, VectorExamples) {
  Vector x(4);
  x << 1, 2, 3, 4;
  EXPECT_EQ(cluster_hajnal_diameter(x, Clustering::from_members(4, {{0, 1}, {2, 3}})), 1.0);
  Vector y(2);
  y << 0, 5;
  EXPECT_EQ(cluster_hajnal_diameter(y, Clustering::from_assignment({0, 0})), 5.0);
  EXPECT_EQ(cluster_hajnal_diameter(Matrix(Matrix::Ones(3, 4)), Clustering::from_assignment({0, 0, 0})), 0.0);
}

TEST(HajnalDiameter, MatchesOracleAndVectorOverload) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const Clustering c = random_clustering(n, rng);
    Matrix M(Eigen::Index(n), 3);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
    EXPECT_NEAR(cluster_hajnal_diameter(M, c), oracle_delta(M, c), 1e-15);
    const Vector v = M.col(0);
    EXPECT_NEAR(cluster_hajnal_diameter(v, c), oracle_delta(Matrix(v), c), 1e-15);
  }
}

TEST(HajnalDiameter, ZeroExactlyOnConsensusSubspace) {
  const Clustering c = Clustering::from_assignment({0, 1, 0, 1});
  Vector x(4);
  x << 3, -1, 3, -1;
  EXPECT_EQ(cluster_hajnal_diameter(x, c), 0.0);
  x[2] = 3.5;
  EXPECT_GT(cluster_hajnal_diameter(x, c), 0.0);
}

TEST(HajnalInequality, HoldsWithCommonInfluence) {
  const PropertyResult r = hajnal_inequality_suite(2000, 77);
  EXPECT_TRUE(r.passed()) << r.line();
}

TEST(HajnalInequality, GeneratedMatricesHaveCommonInfluence) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const Clustering c = random_clustering(7, rng);
    const Matrix A = random_common_influence_stochastic(c, rng);
    EXPECT_TRUE(is_stochastic(A));
    for (ClusterId p = 0; p < c.K(); ++p)
      for (ClusterId q = 0; q < c.K(); ++q) {
        auto mass = [&](VertexId i) {
          double s = 0.0;
          for (VertexId l : c.members(q)) s += A(Eigen::Index(i), Eigen::Index(l));
          return s;
        };
        for (VertexId i : c.members(p)) EXPECT_NEAR(mass(i), mass(c.members(p).front()), 1e-12);
      }
  }
}

TEST(HajnalInequality, FailsForArbitraryStochasticMatrices) {
  const HajnalCounterexample ce;
  EXPECT_TRUE(is_stochastic(ce.A));
  EXPECT_EQ(cluster_ergodicity(ce.A, ce.clustering), 0.0);
  EXPECT_EQ(cluster_hajnal_diameter(ce.B, ce.clustering), 0.0);
  EXPECT_EQ(cluster_hajnal_diameter(Matrix(ce.A * ce.B), ce.clustering), 1.0);
  EXPECT_FALSE(hajnal_inequality_suite(2000, 77, 8, HajnalMatrices::any_stochastic).passed());
}

TEST(Eta, Examples) {
  EXPECT_EQ(eta(Vector::LinSpaced(3, 1, 3)), 1.0);
  Vector a(3);
  a << 1, 2, 4;
  EXPECT_EQ(eta(a), 1.0);
  Vector b(3);
  b << 0, 10, 3;
  EXPECT_EQ(eta(b), 3.0);
  EXPECT_EQ(eta(Vector::Constant(2, 7.0)), 0.0);
  EXPECT_THROW(eta(Vector::Ones(1)), std::invalid_argument);
}

TEST(Eta, ClusterMeans) {
  const Clustering c = Clustering::from_members(4, {{0, 1}, {2, 3}});
  Vector x(4);
  x << 0, 2, 5, 7;
  EXPECT_EQ(eta_c_state(x, c), 5.0);
  Vector s(4);
  s << 1, 1, 2, 2;
  EXPECT_EQ(eta_c_state(s, c), 1.0);
  EXPECT_EQ(eta_c_state(Vector::Constant(4, 0.3), c), 0.0);
}

TEST(Predicates, StochasticAndMetzler) {
  EXPECT_TRUE(is_stochastic(Matrix::Identity(3, 3)));
  Matrix L(2, 2);
  L << -1, 1, 1, -1;
  EXPECT_TRUE(is_metzler_zero_row_sum(L));
  Matrix A(2, 2);
  A << 0.5, 0.6, 1, 0;
  EXPECT_FALSE(is_stochastic(A));
  Matrix bad(2, 2);
  bad << 1, -1, 0, 0;
  EXPECT_FALSE(is_metzler_zero_row_sum(bad));
}

TEST(Rank, Examples) {
  EXPECT_EQ(numerical_rank(Matrix::Identity(3, 3)), 3u);
  Vector u(3), v(3);
  u << 1, 2, 3;
  v << -1, 0.5, 4;
  EXPECT_EQ(numerical_rank(u * v.transpose()), 1u);
  EXPECT_EQ(numerical_rank(Matrix::Zero(3, 3)), 0u);
}

TEST(Rank, InvariantUnderRotation) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 50; ++rep) {
    Matrix X(4, 2), Y(2, 4), R(4, 4);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng), Y.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = g(rng);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(R).householderQ();
    const Matrix A = X * Y;
    EXPECT_EQ(numerical_rank(A), 2u);
    EXPECT_EQ(numerical_rank(Matrix(Q * A)), 2u);
  }
}
