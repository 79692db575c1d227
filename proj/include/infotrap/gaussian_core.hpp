#pragma once

// Posterior variance of the objective under Gaussian updating, the
// asymptotic variance functional V*, and the gradients of both.

#include "infotrap/linalg.hpp"
#include "infotrap/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace infotrap {

namespace detail {

inline void check_prior(const Environment& env, const GaussianPrior& prior) {
  if (prior.dimension() != env.num_states()) {
    throw DimensionError("prior has " + std::to_string(prior.dimension()) +
                         " states, environment has " + std::to_string(env.num_states()));
  }
}

inline void check_counts(const Environment& env, const Eigen::VectorXd& q) {
  if (static_cast<std::size_t>(q.size()) != env.num_sources()) {
    throw DimensionError("count vector has " + std::to_string(q.size()) +
                         " entries, environment has " + std::to_string(env.num_sources()) +
                         " sources");
  }
  if (!q.allFinite() || (q.size() > 0 && q.minCoeff() < 0.0)) {
    throw InvalidArgument("counts must be finite and non-negative");
  }
}

inline Eigen::MatrixXd weighted_gram(const Environment& env, const Eigen::VectorXd& weights) {
  const auto& c = env.coefficients();
  Eigen::MatrixXd g = c.transpose() * weights.asDiagonal() * c;
  return 0.5 * (g + g.transpose());
}

/// Spectrum of C' diag(lambda) C from the factor diag(sqrt(lambda)) C.
inline Spectrum gram_spectrum(const Environment& env, const Eigen::VectorXd& lambda) {
  return spectrum_of_factor(lambda.cwiseSqrt().asDiagonal() * env.coefficients());
}

}  // namespace detail

/// C' diag(weights) C.
inline Eigen::MatrixXd information_matrix(const Environment& env, const Eigen::VectorXd& weights) {
  detail::check_counts(env, weights);
  return detail::weighted_gram(env, weights);
}

/// Prior precision plus C' diag(q) C. Counts may be fractional.
inline Eigen::MatrixXd posterior_precision(const Environment& env, const GaussianPrior& prior,
                                           const Eigen::VectorXd& q) {
  detail::check_prior(env, prior);
  detail::check_counts(env, q);
  return prior.precision() + detail::weighted_gram(env, q);
}

/// Objective variance sum_r w_r u_r' P^{-1} u_r for a given precision P.
inline double variance_from_precision(const Environment& env, const Eigen::MatrixXd& precision) {
  const auto llt = detail::factor_spd(precision);
  return detail::weighted_quadratic(llt, detail::objective_directions(env),
                                    detail::objective_weights(env));
}

namespace detail {

/// P^{-1} = L R^{-1} R^{-T} L' with L L' = Sigma0 and R'R = I + L'C'QCL, from
/// a QR factorization of [I; Q^{1/2} C L]. Avoids inverting the prior.
struct PosteriorFactor {
  Eigen::MatrixXd l;
  Eigen::MatrixXd r;

  /// R^{-T} L' x, so that x' P^{-1} y = (R^{-T} L' x)'(R^{-T} L' y).
  [[nodiscard]] Eigen::MatrixXd half_solve(const Eigen::MatrixXd& x) const {
    return r.transpose().triangularView<Eigen::Lower>().solve(l.transpose() * x);
  }
  /// P^{-1} x.
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& x) const {
    return l * r.triangularView<Eigen::Upper>().solve(half_solve(x));
  }
};

inline PosteriorFactor posterior_factor(const Environment& env, const GaussianPrior& prior,
                                        const Eigen::VectorXd& q) {
  check_prior(env, prior);
  check_counts(env, q);
  const Eigen::LLT<Eigen::MatrixXd> chol(prior.covariance());
  if (chol.info() != Eigen::Success) throw NotPositiveDefinite("prior covariance is not positive definite");
  const Eigen::MatrixXd l = chol.matrixL();
  const Eigen::Index k = l.rows();
  Eigen::MatrixXd stacked(k + q.size(), k);
  stacked.topRows(k).setIdentity();
  stacked.bottomRows(q.size()) = q.cwiseSqrt().asDiagonal() * env.coefficients() * l;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  return {l, qr.matrixQR().topRows(k).triangularView<Eigen::Upper>()};
}

}  // namespace detail

/// Posterior variance of the objective after q_i observations of each source.
inline double posterior_variance(const Environment& env, const GaussianPrior& prior,
                                 const Eigen::VectorXd& q) {
  const auto f = detail::posterior_factor(env, prior, q);
  const Eigen::MatrixXd z = f.half_solve(detail::objective_directions(env));
  const Eigen::VectorXd w = detail::objective_weights(env);
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.cols(); ++r) total += w(r) * z.col(r).squaredNorm();
  return total;
}

inline double posterior_variance(const Environment& env, const GaussianPrior& prior,
                                 const DivisionVector& q) {
  return posterior_variance(env, prior, q.as_real());
}

/// V(q) - V(q + e_i), evaluated in rank-one form so it is never negative.
inline double variance_reduction(const Environment& env, const GaussianPrior& prior,
                                 const DivisionVector& q, std::size_t i) {
  env.check_source(i);
  const auto llt = detail::factor_spd(posterior_precision(env, prior, q.as_real()));
  const Eigen::MatrixXd a = env.source(i);
  return detail::woodbury_reduction(a, llt.solve(a), llt.solve(detail::objective_directions(env)),
                                    detail::objective_weights(env));
}

/// Limit of t * V(lambda * t): sum_r w_r u_r' (C' Lambda C)^+ u_r, infinite
/// when some objective direction leaves the span of the weighted sources.
inline double asymptotic_variance(const Environment& env, const Eigen::VectorXd& lambda) {
  detail::check_counts(env, lambda);
  const double total = lambda.sum();
  if (!(total > 0.0)) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd unit = lambda / total;
  return detail::spectral_quadratic(detail::gram_spectrum(env, unit), detail::objective_directions(env),
                                    detail::objective_weights(env)) /
         total;
}

inline double asymptotic_variance(const Environment& env, const FrequencyVector& lambda) {
  return asymptotic_variance(env, lambda.weights());
}

/// dV/dq_j = -sum_r w_r (u_r' P^{-1} c_j)^2 at real-valued counts q.
inline Eigen::VectorXd grad_posterior_variance(const Environment& env, const GaussianPrior& prior,
                                               const Eigen::VectorXd& q) {
  const Eigen::MatrixXd x = detail::posterior_factor(env, prior, q).solve(detail::objective_directions(env));
  const Eigen::VectorXd w = detail::objective_weights(env);
  const Eigen::MatrixXd proj = env.coefficients() * x;  // N x R, entry (j, r) = c_j' P^{-1} u_r
  Eigen::VectorXd g = Eigen::VectorXd::Zero(proj.rows());
  for (Eigen::Index r = 0; r < proj.cols(); ++r) g -= w(r) * proj.col(r).cwiseAbs2();
  return g;
}

inline Eigen::VectorXd grad_posterior_variance(const Environment& env, const GaussianPrior& prior,
                                               const DivisionVector& q) {
  return grad_posterior_variance(env, prior, q.as_real());
}

/// dV*/dlambda_i = -sum_r w_r (u_r' M^{-1} c_i)^2 with M = C' Lambda C.
/// Throws NonDifferentiablePoint when M is singular.
inline Eigen::VectorXd grad_asymptotic_variance(const Environment& env,
                                                const Eigen::VectorXd& lambda) {
  detail::check_counts(env, lambda);
  const auto sp = detail::gram_spectrum(env, lambda);
  if (!sp.regular()) {
    throw NonDifferentiablePoint("information matrix C'diag(lambda)C is singular; V* has no gradient here");
  }
  const Eigen::MatrixXd x = detail::pseudo_solve(sp, detail::objective_directions(env));
  const Eigen::VectorXd w = detail::objective_weights(env);
  const Eigen::MatrixXd proj = env.coefficients() * x;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(proj.rows());
  for (Eigen::Index r = 0; r < proj.cols(); ++r) g -= w(r) * proj.col(r).cwiseAbs2();
  return g;
}

inline Eigen::VectorXd grad_asymptotic_variance(const Environment& env,
                                                const FrequencyVector& lambda) {
  return grad_asymptotic_variance(env, lambda.weights());
}

/// Posterior precision and (optionally) the information vector h = P * mean.
/// Precision only ever grows by positive semidefinite increments.
class BeliefState {
 public:
  BeliefState(const Environment& env, const GaussianPrior& prior)
      : prior_precision_(prior.precision()),
        precision_(prior_precision_),
        information_(prior_precision_ * prior.mean()),
        counts_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(env.num_sources()))),
        extra_(Eigen::MatrixXd::Zero(prior_precision_.rows(), prior_precision_.cols())) {
    detail::check_prior(env, prior);
  }

  [[nodiscard]] const Eigen::MatrixXd& precision() const { return precision_; }
  [[nodiscard]] const Eigen::MatrixXd& prior_precision() const { return prior_precision_; }
  [[nodiscard]] const Eigen::VectorXd& counts() const { return counts_; }

  /// Records `times` observations of source i (precision only).
  void observe(const Environment& env, std::size_t i, double times = 1.0) {
    env.check_source(i);
    const Eigen::VectorXd c = env.source(i);
    precision_.noalias() += times * c * c.transpose();
    counts_(static_cast<Eigen::Index>(i)) += times;
  }

  /// Records one observation of source i with realized value y.
  void observe_value(const Environment& env, std::size_t i, double y) {
    observe(env, i, 1.0);
    information_ += env.source(i) * y;
  }

  /// Adds an observation <p, theta> + N(0,1) that is not one of the sources.
  /// Without a realized value the signal adds precision and leaves the mean
  /// unchanged (it is credited with its predictive mean).
  void observe_direction(const Eigen::VectorXd& p, std::optional<double> y = std::nullopt) {
    const double value = y ? *y : p.dot(mean());
    precision_.noalias() += p * p.transpose();
    extra_.noalias() += p * p.transpose();
    information_ += p * value;
  }

  [[nodiscard]] Eigen::VectorXd mean() const { return detail::factor_spd(precision_).solve(information_); }

  [[nodiscard]] double variance(const Environment& env) const {
    return variance_from_precision(env, precision_);
  }

  /// Max-norm distance between the stored precision and the one rebuilt from
  /// the prior, the counts and any extra directions.
  [[nodiscard]] double reconstruction_residual(const Environment& env) const {
    const Eigen::MatrixXd rebuilt = prior_precision_ + detail::weighted_gram(env, counts_) + extra_;
    return (rebuilt - precision_).cwiseAbs().maxCoeff();
  }

 private:
  Eigen::MatrixXd prior_precision_;
  Eigen::MatrixXd precision_;
  Eigen::VectorXd information_;
  Eigen::VectorXd counts_;
  Eigen::MatrixXd extra_;
};

}  // namespace infotrap
