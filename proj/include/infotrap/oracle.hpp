#pragma once

// Brute-force benchmarks: exact t-optimal integer divisions and a numeric
// optimizer for the long-run frequency vector.

#include "infotrap/gaussian_core.hpp"
#include "infotrap/linalg.hpp"
#include "infotrap/parallel.hpp"
#include "infotrap/spanning.hpp"
#include "infotrap/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace infotrap {

inline constexpr double kOracleBound = 1e7;
inline constexpr std::size_t kMaxListedOptima = 16;

struct OptimalDivisionResult {
  DivisionVector counts;
  double value = 0.0;
  std::size_t num_optima = 0;
  std::vector<DivisionVector> all_optima;  // filled when num_optima <= 16
};

/// Number of compositions of t into n parts, C(t+n-1, n-1).
inline double composition_count(std::int64_t t, std::size_t n) {
  return detail::binomial(t + static_cast<std::int64_t>(n) - 1, static_cast<std::int64_t>(n) - 1);
}

/// Exhaustive minimization of V over all divisions of t observations.
/// The reported optimum is the lexicographically smallest minimizer.
inline OptimalDivisionResult optimal_division(const Environment& env, const GaussianPrior& prior,
                                              std::int64_t t, double bound = kOracleBound) {
  detail::check_prior(env, prior);
  if (t < 1) throw InvalidArgument("t must be positive");
  const std::size_t n = env.num_sources();
  const double space = composition_count(t, n);
  if (space > bound) {
    throw SearchBoundExceeded("oracle search space C(" + std::to_string(t + static_cast<std::int64_t>(n) - 1) +
                              "," + std::to_string(n - 1) + ") = " + std::to_string(space) +
                              " exceeds the bound " + std::to_string(bound));
  }
  const Eigen::MatrixXd p0 = prior.precision();
  const Eigen::MatrixXd u = detail::objective_directions(env);
  const Eigen::VectorXd w = detail::objective_weights(env);
  std::vector<Eigen::MatrixXd> outer(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd c = env.source(i);
    outer[i] = c * c.transpose();
  }
  auto value_of = [&](std::int64_t first, const std::vector<std::int64_t>& rest) {
    Eigen::MatrixXd p = p0 + static_cast<double>(first) * outer[0];
    for (std::size_t i = 1; i < n; ++i) {
      if (rest[i - 1] != 0) p.noalias() += static_cast<double>(rest[i - 1]) * outer[i];
    }
    return detail::weighted_quadratic(detail::factor_spd(p), u, w);
  };
  // Partition by the first coordinate; each slice enumerates the others.
  auto slice = [&](std::int64_t first, auto&& visit) {
    const std::int64_t remaining = t - first;
    if (n == 1) {
      visit(std::vector<std::int64_t>{});
      return;
    }
    detail::for_each_composition(remaining, n - 1, visit);
  };
  const auto slices = static_cast<std::size_t>(t + 1);

  std::vector<double> slice_min(slices, std::numeric_limits<double>::infinity());
  parallel_for(n == 1 ? 1 : slices, [&](std::size_t s) {
    const auto first = n == 1 ? t : static_cast<std::int64_t>(s);
    double best = std::numeric_limits<double>::infinity();
    slice(first, [&](const std::vector<std::int64_t>& rest) { best = std::min(best, value_of(first, rest)); });
    slice_min[s] = best;
  });
  const double vmin = *std::min_element(slice_min.begin(), slice_min.end());
  const double cutoff = vmin + tol::kChoiceTie * std::abs(vmin);

  struct SliceOptima {
    std::size_t count = 0;
    std::vector<DivisionVector> listed;
  };
  std::vector<SliceOptima> found(slices);
  parallel_for(n == 1 ? 1 : slices, [&](std::size_t s) {
    if (slice_min[s] > cutoff) return;
    const auto first = n == 1 ? t : static_cast<std::int64_t>(s);
    slice(first, [&](const std::vector<std::int64_t>& rest) {
      if (value_of(first, rest) <= cutoff) {
        ++found[s].count;
        if (found[s].listed.size() <= kMaxListedOptima) {
          std::vector<std::int64_t> q{first};
          q.insert(q.end(), rest.begin(), rest.end());
          found[s].listed.emplace_back(std::move(q));
        }
      }
    });
  });

  OptimalDivisionResult res;
  std::vector<DivisionVector> listed;
  for (auto& f : found) {
    res.num_optima += f.count;
    for (auto& d : f.listed) listed.push_back(std::move(d));
  }
  res.counts = listed.front();
  res.value = posterior_variance(env, prior, res.counts);
  if (res.num_optima <= kMaxListedOptima) res.all_optima = std::move(listed);
  return res;
}

struct FrequencyOptimum {
  FrequencyVector lambda;
  double value = 0.0;          // V*(lambda)
  bool unique = true;          // second start reached the same point
  bool numeric_only = false;   // no closed-form cross-check available
  std::size_t iterations = 0;
  double certificate_gap = 0.0;  // max_i d_i / V* - 1 (<= 0 at the optimum up to rounding)
};

struct FrequencyOptions {
  std::size_t max_iterations = 100000;
  double support_threshold = 1e-6;
  double certificate_tolerance = 1e-6;
  double uniqueness_tolerance = 1e-4;
};

namespace detail {

/// d_i = sum_r w_r (u_r' M^+ c_i)^2 with M = C' Lambda C.
inline Eigen::VectorXd sensitivity(const Environment& env, const Eigen::VectorXd& lambda) {
  const Eigen::MatrixXd proj = env.coefficients() * pseudo_solve(gram_spectrum(env, lambda), objective_directions(env));
  const Eigen::VectorXd w = objective_weights(env);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(proj.rows());
  for (Eigen::Index r = 0; r < proj.cols(); ++r) d += w(r) * proj.col(r).cwiseAbs2();
  return d;
}

inline double certificate_gap(const Environment& env, const Eigen::VectorXd& lambda) {
  const double v = asymptotic_variance(env, lambda);
  if (!std::isfinite(v) || !(v > 0.0)) return std::numeric_limits<double>::infinity();
  return sensitivity(env, lambda).maxCoeff() / v - 1.0;
}

/// Multiplicative fixed-point iteration lambda_i <- lambda_i sqrt(d_i) / sum_j lambda_j sqrt(d_j).
inline Eigen::VectorXd multiplicative_descent(const Environment& env, Eigen::VectorXd lambda,
                                              std::size_t max_iterations, std::size_t& used) {
  lambda /= lambda.sum();
  used = 0;
  for (; used < max_iterations; ++used) {
    const Eigen::VectorXd root = sensitivity(env, lambda).cwiseSqrt();
    Eigen::VectorXd next = lambda.cwiseProduct(root);
    const double s = next.sum();
    if (!(s > 0.0) || !next.allFinite()) break;
    next /= s;
    const double change = (next - lambda).cwiseAbs().maxCoeff();
    lambda = next;
    if (change < 1e-15) break;
  }
  return lambda;
}

/// Exact lambda* on the thresholded support when it forms a minimal spanning set.
inline std::optional<Eigen::VectorXd> exact_on_support(const Environment& env,
                                                        const Eigen::VectorXd& lambda,
                                                        double threshold) {
  if (!env.single_direction()) return std::nullopt;
  IndexSet support;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > threshold) support.push_back(static_cast<std::size_t>(i));
  }
  if (support.empty()) return std::nullopt;
  auto rep = try_minimal(env, support);
  if (!rep) return std::nullopt;
  return rep->lambda_star.weights();
}

inline Eigen::VectorXd solve_frequency(const Environment& env, const Eigen::VectorXd& start,
                                       const FrequencyOptions& opt, std::size_t& used,
                                       double& gap) {
  const Eigen::VectorXd numeric = multiplicative_descent(env, start, opt.max_iterations, used);
  if (auto exact = exact_on_support(env, numeric, opt.support_threshold)) {
    const double g = certificate_gap(env, *exact);
    if (g <= opt.certificate_tolerance) {
      gap = g;
      return *exact;
    }
  }
  gap = certificate_gap(env, numeric);
  if (!(gap <= opt.certificate_tolerance)) {
    throw NonConvergence("frequency optimizer stalled: max_i d_i exceeds V* by a relative " +
                         std::to_string(gap) + " after " + std::to_string(used) + " iterations");
  }
  Eigen::VectorXd cleaned = numeric;
  for (Eigen::Index i = 0; i < cleaned.size(); ++i) {
    if (cleaned(i) <= opt.support_threshold) cleaned(i) = 0.0;
  }
  cleaned /= cleaned.sum();
  if (certificate_gap(env, cleaned) <= opt.certificate_tolerance) return cleaned;
  return numeric;
}

}  // namespace detail

/// Minimizer of V* over the simplex. Starts from the uniform point and again
/// from lambda proportional to (1, 2, ..., N); differing minimizers with
/// equal value mark the optimum as non-unique.
inline FrequencyOptimum optimal_frequency_numeric(const Environment& env,
                                                  const FrequencyOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(env.num_sources());
  if (!detail::in_span(env.coefficients().transpose(), detail::objective_directions(env).col(0)) ||
      !std::isfinite(asymptotic_variance(env, Eigen::VectorXd::Ones(n)))) {
    throw NotSpanning("the sources jointly do not span every objective direction");
  }
  FrequencyOptimum out;
  double gap = 0.0;
  const Eigen::VectorXd first =
      detail::solve_frequency(env, Eigen::VectorXd::Ones(n), opt, out.iterations, gap);
  std::size_t used2 = 0;
  double gap2 = 0.0;
  const Eigen::VectorXd second = detail::solve_frequency(
      env, Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n)), opt, used2, gap2);
  out.lambda = FrequencyVector(first);
  out.value = asymptotic_variance(env, first);
  out.certificate_gap = gap;
  out.numeric_only = !env.single_direction();
  out.unique = (first - second).cwiseAbs().maxCoeff() <= opt.uniqueness_tolerance;
  return out;
}

/// Optimal divisions for t = 1..T with residuals n_i(t) - lambda_i t.
struct OptimalTrajectory {
  std::vector<OptimalDivisionResult> steps;  // steps[t-1] is n(t)
  FrequencyVector reference;
  std::vector<Eigen::VectorXd> deviations;  // deviations[t-1]
};

/// Reference frequency used by the trajectory: lambda* of the best minimal
/// spanning set for a single direction, the numeric optimum otherwise.
inline FrequencyVector reference_frequency(const Environment& env) {
  if (env.single_direction()) {
    const auto sets = enumerate_minimal_spanning_sets(env);
    if (sets.empty()) throw NotSpanning("no minimal spanning set exists");
    return sets.front().lambda_star;
  }
  return optimal_frequency_numeric(env).lambda;
}

inline OptimalTrajectory optimal_trajectory(const Environment& env, const GaussianPrior& prior,
                                            std::int64_t horizon,
                                            std::optional<FrequencyVector> reference = std::nullopt) {
  if (horizon < 1) throw InvalidArgument("horizon must be positive");
  OptimalTrajectory out;
  out.reference = reference ? *reference : reference_frequency(env);
  if (out.reference.size() != env.num_sources()) {
    throw DimensionError("reference frequency has the wrong number of sources");
  }
  for (std::int64_t t = 1; t <= horizon; ++t) {
    out.steps.push_back(optimal_division(env, prior, t));
    out.deviations.push_back(out.steps.back().counts.as_real() -
                             static_cast<double>(t) * out.reference.weights());
  }
  return out;
}

}  // namespace infotrap
