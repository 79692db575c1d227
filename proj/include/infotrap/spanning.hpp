#pragma once

// Minimal spanning sets of the target direction, their phi values and
// optimal frequencies, structural assumption checks and trap priors.

#include "infotrap/gaussian_core.hpp"
#include "infotrap/linalg.hpp"
#include "infotrap/parallel.hpp"
#include "infotrap/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace infotrap {

inline constexpr std::size_t kMaxEnumerationSources = 20;

/// A minimal spanning set S with target = sum_{i in S} beta_i c_i.
struct SpanningSetReport {
  IndexSet indices;
  Eigen::VectorXd beta;  // aligned with `indices`
  double phi = 0.0;
  FrequencyVector lambda_star;  // N entries, zero outside `indices`

  [[nodiscard]] double beta_of(std::size_t source) const {
    for (std::size_t j = 0; j < indices.size(); ++j) {
      if (indices[j] == source) return beta(static_cast<Eigen::Index>(j));
    }
    return 0.0;
  }
};

struct AssumptionWitness {
  std::string kind;
  IndexSet indices;
};

struct AssumptionReport {
  bool unique_minimizer = false;
  double gap = 0.0;  // phi(runner-up) - phi(best); +inf with a single minimal set
  bool strong_linear_independence = false;
  bool unique_minimizer_every_subspace = false;
  bool all_minimal_sets_size_K = false;
  std::vector<AssumptionWitness> witnesses;
};

inline std::string format_index_set(const IndexSet& s) {
  std::string out = "{";
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(s[j] + 1);
  }
  return out + "}";
}

namespace detail {

inline void require_single_direction(const Environment& env) {
  if (!env.single_direction()) {
    throw InvalidArgument(
        "spanning-set analysis needs a single objective direction; use the numeric "
        "frequency optimizer for weighted objectives");
  }
}

inline void require_enumerable(const Environment& env) {
  if (env.num_sources() > kMaxEnumerationSources) {
    throw SearchBoundExceeded("subset enumeration supports at most " +
                              std::to_string(kMaxEnumerationSources) + " sources, got " +
                              std::to_string(env.num_sources()));
  }
}

inline void check_index_set(const Environment& env, const IndexSet& s) {
  if (s.empty()) throw InvalidArgument("index set is empty");
  for (std::size_t j = 0; j < s.size(); ++j) {
    env.check_source(s[j]);
    if (j > 0 && s[j] <= s[j - 1]) throw InvalidArgument("index set must be sorted and distinct");
  }
}

/// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<IndexSet> combinations(std::size_t n, std::size_t k) {
  std::vector<IndexSet> out;
  if (k > n) return out;
  IndexSet s(k);
  for (std::size_t j = 0; j < k; ++j) s[j] = j;
  while (true) {
    out.push_back(s);
    std::size_t j = k;
    while (j > 0 && s[j - 1] == n - k + (j - 1)) --j;
    if (j == 0) break;
    ++s[j - 1];
    for (std::size_t m = j; m < k; ++m) s[m] = s[m - 1] + 1;
  }
  return out;
}

/// Report for S if S is minimally spanning, otherwise nullopt.
inline std::optional<SpanningSetReport> try_minimal(const Environment& env, const IndexSet& s) {
  const Eigen::MatrixXd a = source_columns(env, s);
  const Eigen::VectorXd& u = env.target();
  if (numerical_rank(a) != static_cast<Eigen::Index>(s.size())) return std::nullopt;
  if (!in_span(a, u)) return std::nullopt;
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(u);
  const double scale = beta.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return std::nullopt;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (std::abs(beta(j)) <= tol::kRank * scale) return std::nullopt;
  }
  SpanningSetReport rep;
  rep.indices = s;
  rep.beta = beta;
  rep.phi = beta.cwiseAbs().sum();
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(env.num_sources()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    lam(static_cast<Eigen::Index>(s[j])) = std::abs(beta(static_cast<Eigen::Index>(j))) / rep.phi;
  }
  rep.lambda_star = FrequencyVector(lam);
  return rep;
}

inline bool phi_tied(double a, double b) {
  return std::abs(a - b) <= tol::kPhiTie * std::max(std::abs(a), std::abs(b));
}

/// Sort by phi; runs of tied phi values are ordered lexicographically.
inline void sort_reports(std::vector<SpanningSetReport>& reports) {
  std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    if (a.phi != b.phi) return a.phi < b.phi;
    return a.indices < b.indices;
  });
  std::size_t start = 0;
  while (start < reports.size()) {
    std::size_t end = start + 1;
    while (end < reports.size() && phi_tied(reports[start].phi, reports[end].phi)) ++end;
    std::sort(reports.begin() + static_cast<std::ptrdiff_t>(start),
              reports.begin() + static_cast<std::ptrdiff_t>(end),
              [](const auto& a, const auto& b) { return a.indices < b.indices; });
    start = end;
  }
}

}  // namespace detail

/// Every minimal spanning set of the target direction, sorted by phi
/// ascending (ties lexicographic).
inline std::vector<SpanningSetReport> enumerate_minimal_spanning_sets(const Environment& env) {
  detail::require_single_direction(env);
  detail::require_enumerable(env);
  const std::size_t n = env.num_sources();
  const std::size_t kmax = std::min(n, env.num_states());
  std::vector<IndexSet> candidates;
  for (std::size_t k = 1; k <= kmax; ++k) {
    auto level = detail::combinations(n, k);
    candidates.insert(candidates.end(), level.begin(), level.end());
  }
  std::vector<std::optional<SpanningSetReport>> slots(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) { slots[c] = detail::try_minimal(env, candidates[c]); });
  std::vector<SpanningSetReport> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  detail::sort_reports(out);
  return out;
}

/// beta, phi and lambda* for a minimal spanning set S.
inline SpanningSetReport beta_phi_lambda(const Environment& env, const IndexSet& s) {
  detail::require_single_direction(env);
  detail::check_index_set(env, s);
  const Eigen::MatrixXd a = detail::source_columns(env, s);
  if (!detail::in_span(a, env.target())) {
    throw NotSpanning("sources " + format_index_set(s) + " do not span the target");
  }
  if (detail::numerical_rank(a) != static_cast<Eigen::Index>(s.size())) {
    throw NotMinimal("sources " + format_index_set(s) +
                     " are linearly dependent; the representation is not unique");
  }
  auto rep = detail::try_minimal(env, s);
  if (!rep) {
    throw NotMinimal("sources " + format_index_set(s) +
                     " contain a spanning proper subset (some beta is zero)");
  }
  return *rep;
}

struct L1Solution {
  double phi_min = 0.0;
  Eigen::VectorXd beta;  // N entries
};

/// min sum|beta_i| subject to sum beta_i c_i = target, solved exactly over
/// the basic solutions of the linear program (one per basis of the row space).
inline L1Solution phi_by_l1(const Environment& env) {
  detail::require_single_direction(env);
  detail::require_enumerable(env);
  const Eigen::MatrixXd all = env.coefficients().transpose();
  const Eigen::VectorXd& u = env.target();
  if (!detail::in_span(all, u)) throw NotSpanning("the sources jointly do not span the target");
  const std::size_t n = env.num_sources();
  const auto r = static_cast<std::size_t>(detail::numerical_rank(all));
  L1Solution best;
  best.phi_min = std::numeric_limits<double>::infinity();
  for (const auto& basis : detail::combinations(n, r)) {
    const Eigen::MatrixXd a = detail::source_columns(env, basis);
    if (detail::numerical_rank(a) != static_cast<Eigen::Index>(r)) continue;
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(u);
    const double value = x.cwiseAbs().sum();
    if (value < best.phi_min) {
      best.phi_min = value;
      best.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < r; ++j) {
        best.beta(static_cast<Eigen::Index>(basis[j])) = x(static_cast<Eigen::Index>(j));
      }
    }
  }
  return best;
}

/// Every source whose coefficient vector lies in span{c_i : i in S}.
inline IndexSet subspace_closure(const Environment& env, const IndexSet& s) {
  for (auto i : s) env.check_source(i);
  const Eigen::MatrixXd q = detail::column_basis(detail::source_columns(env, s));
  IndexSet out;
  for (std::size_t j = 0; j < env.num_sources(); ++j) {
    const Eigen::VectorXd c = env.source(j);
    const double norm = c.norm();
    const Eigen::VectorXd resid = q.cols() > 0 ? Eigen::VectorXd(c - q * (q.transpose() * c)) : c;
    if (resid.norm() <= tol::kRank * norm || norm == 0.0) out.push_back(j);
  }
  return out;
}

namespace detail {

/// Minimal spanning sets that use only sources from `pool` (original indices).
inline std::vector<SpanningSetReport> minimal_sets_within(const Environment& env,
                                                          const IndexSet& pool) {
  auto sub = enumerate_minimal_spanning_sets(env.restricted(pool));
  for (auto& rep : sub) {
    for (auto& i : rep.indices) i = pool[i];
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(env.num_sources()));
    for (std::size_t j = 0; j < rep.indices.size(); ++j) {
      lam(static_cast<Eigen::Index>(rep.indices[j])) =
          std::abs(rep.beta(static_cast<Eigen::Index>(j))) / rep.phi;
    }
    rep.lambda_star = FrequencyVector(lam);
  }
  sort_reports(sub);
  return sub;
}

}  // namespace detail

/// True when S strictly beats every other minimal spanning set inside its
/// own subspace closure.
inline bool is_subspace_optimal(const Environment& env, const IndexSet& s) {
  const auto rep = beta_phi_lambda(env, s);
  for (const auto& other : detail::minimal_sets_within(env, subspace_closure(env, s))) {
    if (other.indices == s) continue;
    if (other.phi - rep.phi <= tol::kPhiTie * std::max(other.phi, rep.phi)) return false;
  }
  return true;
}

inline AssumptionReport check_assumptions(const Environment& env) {
  constexpr std::size_t kMaxWitnesses = 64;
  AssumptionReport rep;
  auto add = [&](const char* kind, const IndexSet& s) {
    if (rep.witnesses.size() < kMaxWitnesses) rep.witnesses.push_back({kind, s});
  };
  const auto sets = enumerate_minimal_spanning_sets(env);
  const std::size_t k = env.num_states();

  if (sets.empty()) {
    rep.gap = 0.0;
  } else if (sets.size() == 1) {
    rep.unique_minimizer = true;
    rep.gap = std::numeric_limits<double>::infinity();
  } else {
    rep.gap = sets[1].phi - sets[0].phi;
    rep.unique_minimizer = !detail::phi_tied(sets[0].phi, sets[1].phi);
    if (!rep.unique_minimizer) {
      for (const auto& s : sets) {
        if (detail::phi_tied(s.phi, sets[0].phi)) add("tied_minimizer", s.indices);
      }
    }
  }

  rep.strong_linear_independence = true;
  const std::size_t square = std::min(env.num_sources(), k);
  for (const auto& s : detail::combinations(env.num_sources(), square)) {
    if (detail::numerical_rank(detail::source_columns(env, s)) != static_cast<Eigen::Index>(square)) {
      rep.strong_linear_independence = false;
      add("rank_deficient", s);
    }
  }

  rep.all_minimal_sets_size_K = !sets.empty();
  for (const auto& s : sets) {
    if (s.indices.size() != k) {
      rep.all_minimal_sets_size_K = false;
      add("small_minimal_set", s.indices);
    }
  }

  rep.unique_minimizer_every_subspace = rep.unique_minimizer;
  std::vector<IndexSet> seen;
  for (const auto& s : sets) {
    const auto closure = subspace_closure(env, s.indices);
    if (std::find(seen.begin(), seen.end(), closure) != seen.end()) continue;
    seen.push_back(closure);
    const auto inside = detail::minimal_sets_within(env, closure);
    if (inside.size() >= 2 && detail::phi_tied(inside[0].phi, inside[1].phi)) {
      rep.unique_minimizer_every_subspace = false;
      add("subspace_tie", closure);
    }
  }
  return rep;
}

/// Prior under which greedy agents keep observing S: in coordinates where
/// each source of S reads one coordinate, those coordinates get variance
/// eps / lambda*_i and the remaining ones variance 1 / eps.
inline GaussianPrior construct_trap_prior(const Environment& env, const IndexSet& s, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be positive and finite");
  const auto rep = beta_phi_lambda(env, s);
  if (!is_subspace_optimal(env, s)) {
    throw AssumptionViolated("set " + format_index_set(s) + " is not subspace-optimal");
  }
  const std::size_t k = env.num_states();
  if (s.size() == k) {
    const auto sets = enumerate_minimal_spanning_sets(env);
    if (!detail::phi_tied(sets.front().phi, rep.phi)) {
      throw AssumptionViolated("a set of size K that is not the best set cannot trap learning");
    }
  }
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd a = detail::source_columns(env, s);
  const Eigen::MatrixXd comp = detail::complement_basis(a);
  Eigen::MatrixXd t(kk, kk);
  t.topRows(a.cols()) = a.transpose();
  t.bottomRows(comp.cols()) = comp.transpose();
  Eigen::VectorXd d(kk);
  for (std::size_t j = 0; j < s.size(); ++j) {
    d(static_cast<Eigen::Index>(j)) = eps / rep.lambda_star[s[j]];
  }
  for (Eigen::Index j = a.cols(); j < kk; ++j) d(j) = 1.0 / eps;
  const Eigen::MatrixXd tinv = t.fullPivLu().inverse();
  Eigen::MatrixXd cov = tinv * d.asDiagonal() * tinv.transpose();
  cov = (0.5 * (cov + cov.transpose())).eval();
  return GaussianPrior(cov);
}

}  // namespace infotrap
