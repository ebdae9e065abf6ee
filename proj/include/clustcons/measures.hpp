#pragma once

// Scalar measures on matrices and state vectors relative to a clustering.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "clustcons/graph.hpp"

namespace clustcons {

inline constexpr double analytic_tolerance = 1e-9;
inline constexpr double integrator_tolerance = 1e-6;

inline bool is_stochastic(const Matrix& A, double tol = analytic_tolerance) {
  if (A.rows() != A.cols()) return false;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if ((A.row(i).array() < -tol).any()) return false;
    if (std::abs(A.row(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

inline bool is_metzler_zero_row_sum(const Matrix& L, double tol = analytic_tolerance) {
  if (L.rows() != L.cols()) return false;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    for (Eigen::Index j = 0; j < L.cols(); ++j)
      if (i != j && L(i, j) < -tol) return false;
    if (std::abs(L.row(i).sum()) > tol) return false;
  }
  return true;
}

//! min over clusters, min over intra-cluster pairs, of sum_k min(A_ik, A_jk).
//! Singleton clusters are vacuous (contribute 1).
inline double cluster_ergodicity(const Matrix& A, const Clustering& c, double tol = analytic_tolerance) {
  if (A.rows() != A.cols() || static_cast<std::size_t>(A.rows()) != c.n())
    throw std::invalid_argument("cluster_ergodicity: size mismatch");
  if (!is_stochastic(A, tol)) {
    std::ostringstream os;
    os << "cluster_ergodicity: matrix is not stochastic; row sums:";
    for (Eigen::Index i = 0; i < A.rows(); ++i) os << ' ' << A.row(i).sum();
    os << "; min entry " << A.minCoeff();
    throw std::invalid_argument(os.str());
  }
  double mu = 1.0;
  for (ClusterId p = 0; p < c.K(); ++p) {
    const auto& m = c.members(p);
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        const auto ra = A.row(static_cast<Eigen::Index>(m[a]));
        const auto rb = A.row(static_cast<Eigen::Index>(m[b]));
        mu = std::min(mu, ra.cwiseMin(rb).sum());
      }
  }
  return mu;
}

//! max over clusters of the largest infinity-norm difference between rows of
//! the same cluster. A vector is treated as an n x 1 matrix.
inline double cluster_hajnal_diameter(const Matrix& M, const Clustering& c) {
  if (static_cast<std::size_t>(M.rows()) != c.n())
    throw std::invalid_argument("cluster_hajnal_diameter: row count mismatch");
  double diameter = 0.0;
  for (ClusterId p = 0; p < c.K(); ++p) {
    const auto& m = c.members(p);
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        const double d = (M.row(static_cast<Eigen::Index>(m[a])) - M.row(static_cast<Eigen::Index>(m[b])))
                             .cwiseAbs()
                             .maxCoeff();
        diameter = std::max(diameter, d);
      }
  }
  return diameter;
}

inline double cluster_hajnal_diameter(const Vector& x, const Clustering& c) {
  if (static_cast<std::size_t>(x.size()) != c.n())
    throw std::invalid_argument("cluster_hajnal_diameter: length mismatch");
  // max - min within each cluster is the largest pairwise gap
  double diameter = 0.0;
  for (ClusterId p = 0; p < c.K(); ++p) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (VertexId v : c.members(p)) {
      lo = std::min(lo, x[static_cast<Eigen::Index>(v)]);
      hi = std::max(hi, x[static_cast<Eigen::Index>(v)]);
    }
    diameter = std::max(diameter, hi - lo);
  }
  return diameter;
}

//! Minimum pairwise absolute gap of a K-vector, K >= 2.
inline double eta(const Vector& z) {
  if (z.size() < 2) throw std::invalid_argument("eta: need at least two components");
  std::vector<double> v(z.data(), z.data() + z.size());
  std::sort(v.begin(), v.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
  return gap;
}

inline Vector cluster_means(const Vector& x, const Clustering& c) {
  if (static_cast<std::size_t>(x.size()) != c.n()) throw std::invalid_argument("cluster_means: length mismatch");
  Vector z = Vector::Zero(static_cast<Eigen::Index>(c.K()));
  for (ClusterId p = 0; p < c.K(); ++p) {
    for (VertexId v : c.members(p)) z[static_cast<Eigen::Index>(p)] += x[static_cast<Eigen::Index>(v)];
    z[static_cast<Eigen::Index>(p)] /= static_cast<double>(c.members(p).size());
  }
  return z;
}

//! eta of the cluster-mean vector.
inline double eta_c_state(const Vector& x, const Clustering& c) { return eta(cluster_means(x, c)); }

//! Singular values above tol times the largest one.
inline std::size_t numerical_rank(const Matrix& A, double tol = 1e-9) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s[0] > 0.0)) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol * s[0]) ++rank;
  return rank;
}

}  // namespace clustcons
