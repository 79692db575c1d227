#pragma once

#include "infotrap/dynamics.hpp"
#include "infotrap/gaussian_core.hpp"
#include "infotrap/oracle.hpp"
#include "infotrap/types.hpp"

#include <cstdint>
#include <vector>

namespace infotrap {

struct ComparisonRow {
  std::int64_t t = 0;
  double greedy_variance = 0.0;   // V(m(t))
  double optimal_variance = 0.0;  // V(n(t)), or V(apportion(lambda*, t)) past the oracle bound
  double ratio = 1.0;             // greedy / optimal
  bool exact = true;              // optimal_variance comes from the exhaustive oracle
};

/// Greedy variance path against the t-optimal benchmark for t = 1..horizon.
inline std::vector<ComparisonRow> greedy_vs_optimal(const Environment& env, const GaussianPrior& prior,
                                                    std::int64_t horizon, const TieBreakRule& rule = {},
                                                    double bound = kOracleBound) {
  if (horizon < 1) throw InvalidArgument("horizon must be positive");
  const Benchmark bench = compute_benchmark(env);
  const auto trace = simulate(env, prior, horizon, rule, InterventionSpec::none(), false, 0, bench);
  std::vector<ComparisonRow> rows(static_cast<std::size_t>(horizon));
  parallel_for(rows.size(), [&](std::size_t k) {
    ComparisonRow& row = rows[k];
    row.t = static_cast<std::int64_t>(k) + 1;
    row.greedy_variance = trace.variance_path[k];
    if (composition_count(row.t, env.num_sources()) <= bound) {
      row.optimal_variance = optimal_division(env, prior, row.t, bound).value;
      row.exact = true;
    } else {
      row.optimal_variance = posterior_variance(env, prior, apportion(bench.lambda_star, row.t));
      row.exact = false;
    }
    row.ratio = row.greedy_variance / row.optimal_variance;
  });
  return rows;
}

}  // namespace infotrap
