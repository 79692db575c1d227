#pragma once

// Core value types shared by every infotrap module: the signal environment,
// the Gaussian prior, division (count) vectors and frequency vectors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace infotrap {

// ---- Errors ----------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Raised when a derivative is requested where the function has a kink.
class NonDifferentiablePoint : public Error {
 public:
  using Error::Error;
};

class SearchBoundExceeded : public Error {
 public:
  using Error::Error;
};

class NotSpanning : public Error {
 public:
  using Error::Error;
};

class NotMinimal : public Error {
 public:
  using Error::Error;
};

/// A structural precondition on the environment (unique minimizer,
/// subspace optimality, ...) does not hold.
class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// ---- Tolerances ------------------------------------------------------------

namespace tol {
/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRank = 1e-9;
/// Eigenvalues below kPseudoInverse * max(largest, 1) count as zero.
inline constexpr double kPseudoInverse = 1e-10;
/// Two phi values are tied when |a - b| <= kPhiTie * max(a, b).
inline constexpr double kPhiTie = 1e-9;
/// Two variance reductions are tied when within this relative distance.
inline constexpr double kChoiceTie = 1e-12;
/// Covariance asymmetry accepted (and symmetrized away) on ingest.
inline constexpr double kSymmetry = 1e-10;
/// Smallest eigenvalue must exceed this fraction of the largest.
inline constexpr double kDefinite = 1e-12;
/// Frequency vectors flagged as simplex points must sum to 1 within this.
inline constexpr double kSimplex = 1e-12;
}  // namespace tol

using IndexSet = std::vector<std::size_t>;

// ---- Environment -----------------------------------------------------------

/// One term of the payoff objective: weight * Var(<direction, theta>).
struct ObjectiveTerm {
  double weight = 1.0;
  Eigen::VectorXd direction;
};

/// N information sources over K states. Row i of `coefficients` is c_i'.
/// The objective defaults to the first state with weight one.
class Environment {
 public:
  explicit Environment(Eigen::MatrixXd coefficients)
      : coefficients_(std::move(coefficients)) {
    if (coefficients_.cols() > 0) {
      objective_.push_back({1.0, Eigen::VectorXd::Unit(coefficients_.cols(), 0)});
    }
    validate();
  }

  Environment(Eigen::MatrixXd coefficients, std::vector<ObjectiveTerm> objective)
      : coefficients_(std::move(coefficients)), objective_(std::move(objective)) {
    validate();
  }

  /// Single-objective environment with an arbitrary target direction.
  static Environment with_target(Eigen::MatrixXd coefficients, Eigen::VectorXd target) {
    std::vector<ObjectiveTerm> obj{{1.0, std::move(target)}};
    return Environment(std::move(coefficients), std::move(obj));
  }

  [[nodiscard]] std::size_t num_sources() const {
    return static_cast<std::size_t>(coefficients_.rows());
  }
  [[nodiscard]] std::size_t num_states() const {
    return static_cast<std::size_t>(coefficients_.cols());
  }
  [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  [[nodiscard]] Eigen::VectorXd source(std::size_t i) const {
    check_source(i);
    return coefficients_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  [[nodiscard]] const std::vector<ObjectiveTerm>& objective() const { return objective_; }
  [[nodiscard]] bool single_direction() const { return objective_.size() == 1; }

  /// Target direction of a single-objective environment.
  [[nodiscard]] const Eigen::VectorXd& target() const {
    if (!single_direction()) {
      throw InvalidArgument("environment has a multi-direction objective");
    }
    return objective_.front().direction;
  }

  void check_source(std::size_t i) const {
    if (i >= num_sources()) {
      throw InvalidArgument("source index " + std::to_string(i) + " out of range (N=" +
                            std::to_string(num_sources()) + ")");
    }
  }

  /// Same environment restricted to a subset of sources (in the given order).
  [[nodiscard]] Environment restricted(const IndexSet& sources) const {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(sources.size()), coefficients_.cols());
    for (std::size_t r = 0; r < sources.size(); ++r) {
      check_source(sources[r]);
      rows.row(static_cast<Eigen::Index>(r)) =
          coefficients_.row(static_cast<Eigen::Index>(sources[r]));
    }
    return Environment(std::move(rows), objective_);
  }

  /// Copy with every objective weight multiplied by `factor`.
  [[nodiscard]] Environment with_scaled_objective(double factor) const {
    auto obj = objective_;
    for (auto& term : obj) term.weight *= factor;
    return Environment(coefficients_, std::move(obj));
  }

 private:
  void validate() const {
    if (coefficients_.rows() == 0 || coefficients_.cols() == 0) {
      throw DimensionError("environment needs at least one source and one state");
    }
    if (!coefficients_.allFinite()) {
      throw InvalidArgument("coefficient matrix has non-finite entries");
    }
    if (objective_.empty()) {
      throw InvalidArgument("objective must have at least one term");
    }
    for (const auto& term : objective_) {
      if (term.direction.size() != coefficients_.cols()) {
        throw DimensionError("objective direction has " +
                             std::to_string(term.direction.size()) + " entries, expected " +
                             std::to_string(coefficients_.cols()));
      }
      if (!(term.weight > 0.0) || !std::isfinite(term.weight)) {
        throw InvalidArgument("objective weights must be positive and finite");
      }
      if (!term.direction.allFinite() || term.direction.squaredNorm() == 0.0) {
        throw InvalidArgument("objective direction must be finite and non-zero");
      }
    }
  }

  Eigen::MatrixXd coefficients_;
  std::vector<ObjectiveTerm> objective_;
};

// ---- Prior -----------------------------------------------------------------

/// Multivariate normal prior over the K states. The covariance is
/// symmetrized on construction and must be positive definite.
class GaussianPrior {
 public:
  GaussianPrior(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
      : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (covariance_.rows() != covariance_.cols()) {
      throw DimensionError("prior covariance must be square");
    }
    if (mean_.size() != covariance_.rows()) {
      throw DimensionError("prior mean has " + std::to_string(mean_.size()) +
                           " entries, covariance is " + std::to_string(covariance_.rows()) +
                           "x" + std::to_string(covariance_.cols()));
    }
    if (!covariance_.allFinite() || !mean_.allFinite()) {
      throw InvalidArgument("prior has non-finite entries");
    }
    const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
    if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > tol::kSymmetry * scale) {
      throw InvalidArgument("prior covariance is not symmetric");
    }
    covariance_ = (0.5 * (covariance_ + covariance_.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(lo > tol::kDefinite * hi)) {
      throw NotPositiveDefinite("prior covariance is not positive definite (eigenvalues in [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "])");
    }
  }

  /// Zero-mean prior.
  explicit GaussianPrior(const Eigen::MatrixXd& covariance)
      : GaussianPrior(Eigen::VectorXd::Zero(covariance.rows()), covariance) {}

  static GaussianPrior independent(const Eigen::VectorXd& variances) {
    return GaussianPrior(Eigen::MatrixXd(variances.asDiagonal()));
  }

  [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& covariance() const { return covariance_; }

  [[nodiscard]] Eigen::MatrixXd precision() const {
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
    Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(covariance_.rows(), covariance_.cols()));
    return 0.5 * (p + p.transpose());
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
};

// ---- Division and frequency vectors -----------------------------------------

/// Non-negative integer observation counts per source.
class DivisionVector {
 public:
  DivisionVector() = default;
  explicit DivisionVector(std::size_t n) : counts_(n, 0) {}
  explicit DivisionVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
    for (auto c : counts_) {
      if (c < 0) throw InvalidArgument("division vector counts must be non-negative");
      total_ += c;
    }
  }
  DivisionVector(std::initializer_list<std::int64_t> counts)
      : DivisionVector(std::vector<std::int64_t>(counts)) {}

  [[nodiscard]] std::size_t size() const { return counts_.size(); }
  [[nodiscard]] std::int64_t total() const { return total_; }
  [[nodiscard]] std::int64_t operator[](std::size_t i) const { return counts_.at(i); }
  [[nodiscard]] const std::vector<std::int64_t>& counts() const { return counts_; }

  void add(std::size_t i, std::int64_t by = 1) {
    if (i >= counts_.size()) throw InvalidArgument("division vector index out of range");
    if (counts_[i] + by < 0) throw InvalidArgument("division vector counts must be non-negative");
    counts_[i] += by;
    total_ += by;
  }

  void add(const DivisionVector& other) {
    if (other.size() != size()) throw DimensionError("division vector size mismatch");
    for (std::size_t i = 0; i < size(); ++i) add(i, other[i]);
  }

  [[nodiscard]] Eigen::VectorXd as_real() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(counts_.size()));
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = static_cast<double>(counts_[i]);
    }
    return v;
  }

  friend bool operator==(const DivisionVector& a, const DivisionVector& b) {
    return a.counts_ == b.counts_;
  }
  friend bool operator<(const DivisionVector& a, const DivisionVector& b) {
    return a.counts_ < b.counts_;
  }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

/// Non-negative real weights per source (long-run observation shares).
class FrequencyVector {
 public:
  FrequencyVector() = default;
  explicit FrequencyVector(Eigen::VectorXd weights) : weights_(std::move(weights)) {
    if (!weights_.allFinite() || (weights_.size() > 0 && weights_.minCoeff() < 0.0)) {
      throw InvalidArgument("frequency weights must be finite and non-negative");
    }
  }
  FrequencyVector(std::initializer_list<double> weights)
      : FrequencyVector(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
            weights.begin(), static_cast<Eigen::Index>(weights.size())))) {}

  /// Rescales to the simplex; throws when all weights are zero.
  static FrequencyVector normalized(const Eigen::VectorXd& weights) {
    const double s = weights.sum();
    if (!(s > 0.0)) throw InvalidArgument("cannot normalize an all-zero frequency vector");
    return FrequencyVector(weights / s);
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
  [[nodiscard]] double operator[](std::size_t i) const {
    return weights_(static_cast<Eigen::Index>(i));
  }
  [[nodiscard]] bool on_simplex() const {
    return std::abs(weights_.sum() - 1.0) <= tol::kSimplex;
  }
  [[nodiscard]] IndexSet support(double threshold = 0.0) const {
    IndexSet s;
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (weights_(i) > threshold) s.push_back(static_cast<std::size_t>(i));
    }
    return s;
  }

 private:
  Eigen::VectorXd weights_;
};

/// Largest-remainder rounding of `lambda * total` to integers summing to total.
inline DivisionVector apportion(const FrequencyVector& lambda, std::int64_t total) {
  const auto n = lambda.size();
  const double mass = lambda.weights().sum();
  if (!(mass > 0.0)) throw InvalidArgument("cannot apportion an all-zero frequency vector");
  std::vector<std::int64_t> counts(n);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = lambda[i] / mass * static_cast<double>(total);
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) {
    ++counts[remainders[r].second];
  }
  return DivisionVector(std::move(counts));
}

}  // namespace infotrap
