#pragma once

#include "infotrap/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace infotrap::detail {

/// Orthonormal basis (as columns) of the column space of `a`, using the
/// relative singular-value threshold tol::kRank.
inline Eigen::MatrixXd column_basis(const Eigen::MatrixXd& a) {
  if (a.cols() == 0 || a.rows() == 0) return Eigen::MatrixXd(a.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index r = 0;
  if (smax > 0.0) {
    while (r < s.size() && s(r) > tol::kRank * smax) ++r;
  }
  return svd.matrixU().leftCols(r);
}

inline Eigen::Index numerical_rank(const Eigen::MatrixXd& a) { return column_basis(a).cols(); }

/// Orthonormal basis of the orthogonal complement of the column space of `a`.
inline Eigen::MatrixXd complement_basis(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd q = column_basis(a);
  if (q.cols() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(n - q.cols());
}

/// True when `v` lies in the column space of `a` (relative residual test).
inline bool in_span(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (norm == 0.0) return true;
  const Eigen::MatrixXd q = column_basis(a);
  if (q.cols() == 0) return false;
  const Eigen::VectorXd residual = v - q * (q.transpose() * v);
  return residual.norm() <= tol::kRank * norm;
}

/// Matrix whose columns are the coefficient vectors c_i of `sources`.
inline Eigen::MatrixXd source_columns(const Environment& env, const IndexSet& sources) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(env.num_states()),
                    static_cast<Eigen::Index>(sources.size()));
  for (std::size_t j = 0; j < sources.size(); ++j) {
    env.check_source(sources[j]);
    a.col(static_cast<Eigen::Index>(j)) =
        env.coefficients().row(static_cast<Eigen::Index>(sources[j])).transpose();
  }
  return a;
}

/// K x R matrix of objective directions.
inline Eigen::MatrixXd objective_directions(const Environment& env) {
  const auto& obj = env.objective();
  Eigen::MatrixXd u(static_cast<Eigen::Index>(env.num_states()),
                    static_cast<Eigen::Index>(obj.size()));
  for (std::size_t r = 0; r < obj.size(); ++r) u.col(static_cast<Eigen::Index>(r)) = obj[r].direction;
  return u;
}

inline Eigen::VectorXd objective_weights(const Environment& env) {
  const auto& obj = env.objective();
  Eigen::VectorXd w(static_cast<Eigen::Index>(obj.size()));
  for (std::size_t r = 0; r < obj.size(); ++r) w(static_cast<Eigen::Index>(r)) = obj[r].weight;
  return w;
}

/// Cholesky factor of a symmetric positive-definite precision matrix.
inline Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& p) {
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("precision matrix is not positive definite");
  }
  return llt;
}

/// Sum_r w_r u_r' P^{-1} u_r for a factored precision P.
inline double weighted_quadratic(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& u,
                                 const Eigen::VectorXd& w) {
  const Eigen::MatrixXd x = llt.solve(u);
  double total = 0.0;
  for (Eigen::Index r = 0; r < u.cols(); ++r) total += w(r) * u.col(r).dot(x.col(r));
  return total;
}

/// Variance reduction from adding `a * a'` (a has one column per added
/// observation direction) to a precision whose inverse applied to the
/// objective directions is `su` and to the columns of `a` is `sa`.
/// Woodbury: reduction = sum_r w_r g_r' (I + a' S a)^{-1} g_r with g_r = a' S u_r.
inline double woodbury_reduction(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sa,
                                 const Eigen::MatrixXd& su, const Eigen::VectorXd& w) {
  const Eigen::Index m = a.cols();
  if (m == 0) return 0.0;
  Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(m, m) + a.transpose() * sa;
  inner = (0.5 * (inner + inner.transpose())).eval();
  const Eigen::MatrixXd g = a.transpose() * su;
  const Eigen::LLT<Eigen::MatrixXd> llt(inner);
  const Eigen::MatrixXd y = llt.solve(g);
  double total = 0.0;
  for (Eigen::Index r = 0; r < su.cols(); ++r) total += w(r) * g.col(r).dot(y.col(r));
  return std::max(0.0, total);
}

/// Eigenvalues d and orthonormal eigenvectors v of a PSD matrix M.
struct Spectrum {
  Eigen::VectorXd d;
  Eigen::MatrixXd v;

  [[nodiscard]] double cutoff() const { return tol::kPseudoInverse * std::max(d.size() ? d.maxCoeff() : 0.0, 1.0); }
  [[nodiscard]] bool regular() const { return d.size() > 0 && d.minCoeff() > cutoff(); }
};

inline Spectrum spectrum_of(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((0.5 * (m + m.transpose())).eval());
  return {eig.eigenvalues(), eig.eigenvectors()};
}

/// Spectrum of M = A'A from the factor A, via the SVD of A.
inline Spectrum spectrum_of_factor(const Eigen::MatrixXd& a) {
  const Eigen::Index k = a.cols();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(k);
  const auto& s = svd.singularValues();
  for (Eigen::Index j = 0; j < s.size(); ++j) d(j) = s(j) * s(j);
  return {d, svd.matrixV()};
}

/// sum_r w_r u_r' M^+ u_r; +inf when some u_r leaves the range of M.
inline double spectral_quadratic(const Spectrum& sp, const Eigen::MatrixXd& u, const Eigen::VectorXd& w) {
  const double cutoff = sp.cutoff();
  double total = 0.0;
  for (Eigen::Index r = 0; r < u.cols(); ++r) {
    const double unorm = u.col(r).norm();
    double term = 0.0;
    for (Eigen::Index j = 0; j < sp.d.size(); ++j) {
      const double z = sp.v.col(j).dot(u.col(r));
      if (sp.d(j) > cutoff) {
        term += z * z / sp.d(j);
      } else if (std::abs(z) > tol::kRank * unorm) {
        return std::numeric_limits<double>::infinity();
      }
    }
    total += w(r) * term;
  }
  return total;
}

inline double spectral_quadratic(const Eigen::MatrixXd& m, const Eigen::MatrixXd& u,
                                 const Eigen::VectorXd& w) {
  return spectral_quadratic(spectrum_of(m), u, w);
}

/// M^+ x with the same cutoff as spectral_quadratic.
inline Eigen::MatrixXd pseudo_solve(const Spectrum& sp, const Eigen::MatrixXd& x) {
  const double cutoff = sp.cutoff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sp.d.size());
  for (Eigen::Index j = 0; j < sp.d.size(); ++j) {
    if (sp.d(j) > cutoff) inv(j) = 1.0 / sp.d(j);
  }
  return sp.v * (inv.asDiagonal() * (sp.v.transpose() * x));
}

/// Spectral pseudo-inverse with the same cutoff as spectral_quadratic.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
  const auto sp = spectrum_of(m);
  return pseudo_solve(sp, Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

/// Binomial coefficient, saturating at +inf in double precision.
inline double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

/// Calls `fn(const std::vector<std::int64_t>&)` for every composition of
/// `total` into `parts` non-negative parts, in lexicographic order.
template <typename Fn>
void for_each_composition(std::int64_t total, std::size_t parts, Fn&& fn) {
  if (parts == 0) return;
  std::vector<std::int64_t> q(parts, 0);
  q.back() = total;
  while (true) {
    fn(static_cast<const std::vector<std::int64_t>&>(q));
    // Rightmost j < parts-1 with positive mass after it.
    std::int64_t suffix = 0;
    std::size_t j = parts - 1;
    bool found = false;
    while (j > 0) {
      suffix += q[j];
      --j;
      if (suffix > 0) {
        found = true;
        break;
      }
    }
    if (!found) return;
    ++q[j];
    for (std::size_t k = j + 1; k < parts; ++k) q[k] = 0;
    q.back() = suffix - 1;
  }
}

}  // namespace infotrap::detail
