#pragma once

// Greedy sequential acquisition, the three interventions, long-run
// frequency estimation and trap classification.

#include "infotrap/gaussian_core.hpp"
#include "infotrap/linalg.hpp"
#include "infotrap/oracle.hpp"
#include "infotrap/spanning.hpp"
#include "infotrap/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace infotrap {

inline constexpr std::int64_t kMaxBatch = 12;
inline constexpr std::size_t kMaxBatchSources = 8;
inline constexpr double kEfficiencyDistance = 0.05;
inline constexpr int kMaxDoublings = 20;

struct TieBreakRule {
  enum class Kind { lowest_index, random };
  Kind kind = Kind::lowest_index;
  std::uint64_t seed = 0;

  static TieBreakRule lowest_index() { return {}; }
  static TieBreakRule random(std::uint64_t seed) { return {Kind::random, seed}; }
  friend bool operator==(const TieBreakRule&, const TieBreakRule&) = default;
};

/// Stateful tie breaker: lowest index, or a uniform pick from a seeded engine.
class TieBreaker {
 public:
  explicit TieBreaker(TieBreakRule rule) : rule_(rule), engine_(rule.seed) {}

  std::size_t pick(std::size_t candidates) {
    if (candidates <= 1 || rule_.kind == TieBreakRule::Kind::lowest_index) return 0;
    return static_cast<std::size_t>(engine_() % candidates);
  }

  [[nodiscard]] const TieBreakRule& rule() const { return rule_; }

 private:
  TieBreakRule rule_;
  std::mt19937_64 engine_;
};

struct InterventionSpec {
  enum class Kind { none, precision, batch, free_signals };
  Kind kind = Kind::none;
  std::int64_t b = 1;
  std::vector<Eigen::VectorXd> vectors;
  std::optional<double> gamma;  // declared norm bound for free signals

  static InterventionSpec none() { return {}; }
  static InterventionSpec precision(std::int64_t b) { return {Kind::precision, b, {}, std::nullopt}; }
  static InterventionSpec batch(std::int64_t b) { return {Kind::batch, b, {}, std::nullopt}; }
  static InterventionSpec free_signals(std::vector<Eigen::VectorXd> v,
                                       std::optional<double> gamma = std::nullopt) {
    return {Kind::free_signals, 1, std::move(v), gamma};
  }

  /// Observations produced by one period.
  [[nodiscard]] std::int64_t observations_per_period() const {
    return kind == Kind::batch ? b : 1;
  }

  void validate(std::size_t num_states) const {
    if (b < 1) throw InvalidArgument("B must be at least 1");
    if (kind == Kind::batch && b > kMaxBatch) {
      throw SearchBoundExceeded("batch size " + std::to_string(b) + " exceeds " +
                                std::to_string(kMaxBatch));
    }
    if (gamma && !(*gamma > 0.0)) throw InvalidArgument("free-signal bound must be positive");
    for (const auto& p : vectors) {
      if (static_cast<std::size_t>(p.size()) != num_states) {
        throw DimensionError("free-signal vector has " + std::to_string(p.size()) +
                             " entries, expected " + std::to_string(num_states));
      }
      if (!p.allFinite()) throw InvalidArgument("free-signal vector has non-finite entries");
      if (gamma && p.norm() > *gamma * (1.0 + 1e-12)) {
        throw InvalidArgument("free-signal vector norm exceeds the declared bound");
      }
    }
  }
};

/// One period's acquisition: the added counts, plus the source for
/// single-source modes.
struct Allocation {
  DivisionVector increment;
  std::optional<std::size_t> source;
};

struct Classification {
  enum class Kind { efficient, trap, undetermined };
  Kind kind = Kind::undetermined;
  IndexSet trapped_set;
};

inline const char* to_string(Classification::Kind k) {
  switch (k) {
    case Classification::Kind::efficient: return "efficient";
    case Classification::Kind::trap: return "trap";
    default: return "undetermined";
  }
}

/// The social optimum the run is measured against.
struct Benchmark {
  IndexSet best_set;
  double phi_best = 0.0;
  FrequencyVector lambda_star;
  bool numeric_only = false;
};

inline Benchmark compute_benchmark(const Environment& env) {
  Benchmark b;
  if (env.single_direction()) {
    const auto sets = enumerate_minimal_spanning_sets(env);
    if (sets.empty()) throw NotSpanning("no set of sources spans the target");
    b.best_set = sets.front().indices;
    b.phi_best = sets.front().phi;
    b.lambda_star = sets.front().lambda_star;
  } else {
    const auto opt = optimal_frequency_numeric(env);
    b.lambda_star = opt.lambda;
    b.best_set = opt.lambda.support();
    b.phi_best = std::sqrt(opt.value);
    b.numeric_only = true;
  }
  return b;
}

struct SimulationTrace {
  std::vector<Allocation> choices;
  std::vector<double> variance_path;  // variance_path[t-1] = V(m(t))
  DivisionVector final_counts;
  Classification classification;
  double inefficiency_ratio = 1.0;
  FrequencyVector frequency_estimate;
  Benchmark benchmark;
  std::optional<Eigen::VectorXd> true_state;
  std::optional<Eigen::VectorXd> final_mean;

  /// Cumulative counts after each period: result[t-1] = m(t).
  [[nodiscard]] std::vector<DivisionVector> count_path() const {
    std::vector<DivisionVector> out;
    out.reserve(choices.size());
    DivisionVector m(final_counts.size());
    for (const auto& a : choices) {
      m.add(a.increment);
      out.push_back(m);
    }
    return out;
  }
};

/// Prior with precision increased by p p' for every free signal p.
inline GaussianPrior apply_free_signals(const GaussianPrior& prior,
                                        const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) return prior;
  Eigen::MatrixXd p = prior.precision();
  for (const auto& v : vectors) {
    if (static_cast<std::size_t>(v.size()) != prior.dimension()) {
      throw DimensionError("free-signal vector dimension does not match the prior");
    }
    p.noalias() += v * v.transpose();
  }
  const auto llt = detail::factor_spd(p);
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(p.rows(), p.cols()));
  cov = (0.5 * (cov + cov.transpose())).eval();
  return GaussianPrior(prior.mean(), cov);
}

namespace detail {

/// Picks the maximal score, treating scores within a relative 1e-12 of the
/// maximum as tied; ties are resolved by the breaker over the sorted list.
inline std::size_t argmax_with_ties(const std::vector<double>& scores, TieBreaker& breaker) {
  double best = -std::numeric_limits<double>::infinity();
  for (double s : scores) best = std::max(best, s);
  const double floor = best - tol::kChoiceTie * std::abs(best);
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= floor) tied.push_back(i);
  }
  return tied[breaker.pick(tied.size())];
}

/// Chooses the next allocation given the current precision (which already
/// includes any free signals).
inline Allocation choose(const Environment& env, const Eigen::MatrixXd& precision,
                         const InterventionSpec& spec, TieBreaker& breaker) {
  const std::size_t n = env.num_sources();
  const auto llt = factor_spd(precision);
  const Eigen::MatrixXd u = objective_directions(env);
  const Eigen::VectorXd w = objective_weights(env);
  const Eigen::MatrixXd su = llt.solve(u);
  const Eigen::MatrixXd ct = env.coefficients().transpose();  // K x N
  const Eigen::MatrixXd sc = llt.solve(ct);

  if (spec.kind != InterventionSpec::Kind::batch) {
    const double reps = spec.kind == InterventionSpec::Kind::precision ? static_cast<double>(spec.b) : 1.0;
    std::vector<double> scores(n);
    const Eigen::MatrixXd proj = ct.transpose() * su;  // N x R
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double quad = ct.col(ii).dot(sc.col(ii));
      double s = 0.0;
      for (Eigen::Index r = 0; r < u.cols(); ++r) s += w(r) * proj(ii, r) * proj(ii, r);
      scores[i] = s * reps / (1.0 + reps * quad);
    }
    const std::size_t i = argmax_with_ties(scores, breaker);
    DivisionVector inc(n);
    inc.add(i);
    return {inc, i};
  }

  if (n > kMaxBatchSources || spec.b > kMaxBatch) {
    throw SearchBoundExceeded("batch allocation search needs N <= " +
                              std::to_string(kMaxBatchSources) + " and B <= " +
                              std::to_string(kMaxBatch));
  }
  std::vector<std::vector<std::int64_t>> candidates;
  std::vector<double> scores;
  for_each_composition(spec.b, n, [&](const std::vector<std::int64_t>& b) {
    IndexSet used;
    for (std::size_t i = 0; i < n; ++i) {
      if (b[i] > 0) used.push_back(i);
    }
    Eigen::MatrixXd a(ct.rows(), static_cast<Eigen::Index>(used.size()));
    Eigen::MatrixXd sa(ct.rows(), static_cast<Eigen::Index>(used.size()));
    for (std::size_t j = 0; j < used.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(used[j]);
      const double root = std::sqrt(static_cast<double>(b[used[j]]));
      a.col(static_cast<Eigen::Index>(j)) = root * ct.col(col);
      sa.col(static_cast<Eigen::Index>(j)) = root * sc.col(col);
    }
    candidates.push_back(b);
    scores.push_back(woodbury_reduction(a, sa, su, w));
  });
  const std::size_t pick = argmax_with_ties(scores, breaker);
  return {DivisionVector(candidates[pick]), std::nullopt};
}

inline Eigen::MatrixXd allocation_precision(const Environment& env, const Allocation& a,
                                            const InterventionSpec& spec) {
  Eigen::VectorXd weights = a.increment.as_real();
  if (spec.kind == InterventionSpec::Kind::precision) weights *= static_cast<double>(spec.b);
  return weighted_gram(env, weights);
}

inline Eigen::MatrixXd effective_precision(const Environment& env, const GaussianPrior& prior,
                                           const DivisionVector& counts,
                                           const InterventionSpec& spec) {
  Eigen::MatrixXd p = prior.precision();
  if (spec.kind == InterventionSpec::Kind::free_signals) {
    for (const auto& v : spec.vectors) p.noalias() += v * v.transpose();
  }
  Eigen::VectorXd weights = counts.as_real();
  if (spec.kind == InterventionSpec::Kind::precision) weights *= static_cast<double>(spec.b);
  return p + weighted_gram(env, weights);
}

}  // namespace detail

/// The allocation the next greedy agent picks after `counts` acquisitions.
inline Allocation greedy_step(const Environment& env, const GaussianPrior& prior,
                              const DivisionVector& counts, TieBreaker& breaker,
                              const InterventionSpec& spec = InterventionSpec::none()) {
  detail::check_prior(env, prior);
  spec.validate(env.num_states());
  if (counts.size() != env.num_sources()) throw DimensionError("count vector size mismatch");
  return detail::choose(env, detail::effective_precision(env, prior, counts, spec), spec, breaker);
}

inline Allocation greedy_step(const Environment& env, const GaussianPrior& prior,
                              const DivisionVector& counts, const TieBreakRule& rule = {},
                              const InterventionSpec& spec = InterventionSpec::none()) {
  TieBreaker breaker(rule);
  return greedy_step(env, prior, counts, breaker, spec);
}

/// Classifies a run from its last-half window counts.
inline void classify(const Environment& env, const Benchmark& bench, const DivisionVector& window,
                     SimulationTrace& trace) {
  const Eigen::VectorXd f = window.as_real() / static_cast<double>(std::max<std::int64_t>(window.total(), 1));
  trace.frequency_estimate = FrequencyVector(f);
  IndexSet observed;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i] > 0) observed.push_back(i);
  }
  trace.classification = {};
  if (env.single_direction() && !observed.empty()) {
    if (auto rep = detail::try_minimal(env, observed)) {
      if (rep->phi > bench.phi_best * (1.0 + tol::kPhiTie)) {
        trace.classification = {Classification::Kind::trap, observed};
        trace.inefficiency_ratio = rep->phi / bench.phi_best;
        return;
      }
    }
  }
  const double dist = (f - bench.lambda_star.weights()).cwiseAbs().maxCoeff();
  if (dist <= kEfficiencyDistance && observed == bench.lambda_star.support()) {
    trace.classification = {Classification::Kind::efficient, {}};
    trace.inefficiency_ratio = 1.0;
    return;
  }
  trace.inefficiency_ratio = std::sqrt(asymptotic_variance(env, f)) / bench.phi_best;
}

/// Runs `horizon` greedy periods. Choices depend only on precisions; when
/// `sample_realizations` is set a true state is drawn from the prior and
/// every source observation is realized to track the posterior mean. Free
/// signals contribute precision only.
inline SimulationTrace simulate(const Environment& env, const GaussianPrior& prior,
                                std::int64_t horizon, const TieBreakRule& rule,
                                const InterventionSpec& spec, bool sample_realizations,
                                std::uint64_t seed, const Benchmark& bench) {
  detail::check_prior(env, prior);
  spec.validate(env.num_states());
  if (horizon < 1) throw InvalidArgument("horizon must be positive");
  const std::size_t n = env.num_sources();
  TieBreaker breaker(rule);
  BeliefState belief(env, prior);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd theta;
  if (sample_realizations) {
    const Eigen::LLT<Eigen::MatrixXd> chol(prior.covariance());
    Eigen::VectorXd z(static_cast<Eigen::Index>(env.num_states()));
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = noise(rng);
    theta = prior.mean() + chol.matrixL() * z;
  }
  if (spec.kind == InterventionSpec::Kind::free_signals) {
    for (const auto& p : spec.vectors) belief.observe_direction(p);
  }

  SimulationTrace trace;
  trace.benchmark = bench;
  trace.choices.reserve(static_cast<std::size_t>(horizon));
  trace.variance_path.reserve(static_cast<std::size_t>(horizon));
  DivisionVector counts(n);
  DivisionVector window(n);
  const std::int64_t window_start = horizon - std::max<std::int64_t>(horizon / 2, 1);
  const double reps = spec.kind == InterventionSpec::Kind::precision ? static_cast<double>(spec.b) : 1.0;

  for (std::int64_t t = 0; t < horizon; ++t) {
    Allocation a = detail::choose(env, belief.precision(), spec, breaker);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t k = a.increment[i];
      if (k == 0) continue;
      const double obs = static_cast<double>(k) * reps;
      if (sample_realizations) {
        const double mean_obs = env.source(i).dot(theta);
        for (std::int64_t r = 0; r < static_cast<std::int64_t>(obs); ++r) {
          belief.observe_value(env, i, mean_obs + noise(rng));
        }
      } else {
        belief.observe(env, i, obs);
      }
    }
    counts.add(a.increment);
    if (t >= window_start) window.add(a.increment);
    trace.variance_path.push_back(belief.variance(env));
    trace.choices.push_back(std::move(a));
  }
  trace.final_counts = counts;
  if (sample_realizations) {
    trace.true_state = theta;
    trace.final_mean = belief.mean();
  }
  classify(env, bench, window, trace);
  return trace;
}

inline SimulationTrace simulate(const Environment& env, const GaussianPrior& prior,
                                std::int64_t horizon, const TieBreakRule& rule = {},
                                const InterventionSpec& spec = InterventionSpec::none(),
                                bool sample_realizations = false, std::uint64_t seed = 0) {
  return simulate(env, prior, horizon, rule, spec, sample_realizations, seed,
                  compute_benchmark(env));
}

/// gamma-scaled orthonormal basis of span{c_i : i in S*} intersected with
/// the orthogonal complement of the target: the confounding directions of
/// the best set. Empty when the best set is a single source.
inline std::vector<Eigen::VectorXd> design_free_signals(const Environment& env, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive and finite");
  const auto report = check_assumptions(env);
  if (!report.unique_minimizer) {
    throw AssumptionViolated("the best minimal spanning set is not unique");
  }
  const IndexSet best = enumerate_minimal_spanning_sets(env).front().indices;
  std::vector<Eigen::VectorXd> out;
  if (best.size() == 1) return out;
  const Eigen::MatrixXd q = detail::column_basis(detail::source_columns(env, best));  // K x k
  const Eigen::VectorXd coords = q.transpose() * env.target();
  const Eigen::MatrixXd inner = detail::complement_basis(coords);  // k x (k-1)
  for (Eigen::Index j = 0; j < inner.cols(); ++j) {
    Eigen::VectorXd p = q * inner.col(j);
    p.normalize();
    Eigen::Index arg = 0;
    p.cwiseAbs().maxCoeff(&arg);
    if (p(arg) < 0.0) p = -p;
    out.push_back(gamma * p);
  }
  return out;
}

struct EscalationResult {
  double gamma = 0.0;
  int doublings = 0;
  std::vector<Eigen::VectorXd> vectors;
  SimulationTrace trace;
  [[nodiscard]] bool succeeded() const {
    return trace.classification.kind == Classification::Kind::efficient;
  }
};

/// Doubles gamma from gamma0 (at most 20 times) until the run with designed
/// free signals is efficient. Returns the first success or the last attempt.
inline EscalationResult escalate_gamma(const Environment& env, const GaussianPrior& prior,
                                       std::int64_t horizon, double gamma0,
                                       const TieBreakRule& rule = {},
                                       bool sample_realizations = false, std::uint64_t seed = 0) {
  if (!(gamma0 > 0.0)) throw InvalidArgument("gamma0 must be positive");
  const Benchmark bench = compute_benchmark(env);
  EscalationResult res;
  for (int k = 0; k <= kMaxDoublings; ++k) {
    res.gamma = gamma0 * std::ldexp(1.0, k);
    res.doublings = k;
    res.vectors = design_free_signals(env, res.gamma);
    res.trace = simulate(env, prior, horizon, rule, InterventionSpec::free_signals(res.vectors, res.gamma),
                         sample_realizations, seed, bench);
    if (res.succeeded()) break;
  }
  return res;
}

}  // namespace infotrap
