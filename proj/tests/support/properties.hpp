#pragma once

// Randomized analytical property checks. Each returns how many instances
// were checked and how many violated the property.

#include "infotrap.hpp"

#include "reference.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace props {

using namespace infotrap;

struct Outcome {
  int instances = 0;
  int violations = 0;
  double worst = 0.0;  // largest observed violation measure (property-specific)
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++instances;
    if (!ok) {
      if (violations == 0) first_failure = what;
      ++violations;
    }
  }
  [[nodiscard]] bool passed(int min_instances = 100) const {
    return violations == 0 && instances >= min_instances;
  }
};

struct Instance {
  Environment env;
  GaussianPrior prior;
};

/// N <= 6, K <= 4, coefficients uniform in [-5, 5], prior A A' + 0.1 I.
inline Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(1, 4);
  const int k = kd(rng);
  std::uniform_int_distribution<int> nd(k, 6);
  const int n = nd(rng);
  return {Environment(ref::random_matrix(rng, n, k, -5, 5)), GaussianPrior(ref::random_covariance(rng, k))};
}

inline DivisionVector random_counts(std::mt19937_64& rng, std::size_t n, int max_total) {
  std::uniform_int_distribution<int> td(0, max_total);
  const int t = td(rng);
  std::vector<std::int64_t> q(n, 0);
  for (int j = 0; j < t; ++j) ++q[rng() % n];
  return DivisionVector(q);
}

inline Eigen::VectorXd random_real_counts(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  return ref::random_matrix(rng, static_cast<Eigen::Index>(n), 1, lo, hi);
}

inline std::string describe(const char* what, double lhs, double rhs) {
  std::ostringstream s;
  s.precision(17);
  s << what << ": " << lhs << " vs " << rhs;
  return s.str();
}

inline Outcome monotonicity(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  for (int k = 0; k < trials; ++k) {
    const auto inst = random_instance(rng);
    const auto q = random_counts(rng, inst.env.num_sources(), 20);
    const double v = posterior_variance(inst.env, inst.prior, q);
    bool ok = true;
    for (std::size_t i = 0; i < inst.env.num_sources(); ++i) {
      DivisionVector next = q;
      next.add(i);
      const double w = posterior_variance(inst.env, inst.prior, next);
      if (!(w <= v + 1e-12)) {
        ok = false;
        out.worst = std::max(out.worst, w - v);
      }
    }
    out.record(ok, "V(q+e_i) > V(q)");
  }
  return out;
}

inline Outcome midpoint_convexity(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  for (int k = 0; k < trials; ++k) {
    const auto inst = random_instance(rng);
    const auto n = inst.env.num_sources();
    const Eigen::VectorXd q = random_real_counts(rng, n, 0, 10);
    const Eigen::VectorXd r = random_real_counts(rng, n, 0, 10);
    const double lhs = posterior_variance(inst.env, inst.prior, q) + posterior_variance(inst.env, inst.prior, r);
    const double rhs = 2.0 * posterior_variance(inst.env, inst.prior, Eigen::VectorXd(0.5 * (q + r)));
    out.record(lhs >= rhs - 1e-12, describe("V(q)+V(r) < 2V(mid)", lhs, rhs));
  }
  return out;
}

/// q_j/(q_j+1) |dV_j| <= V(q) - V(q+e_j) <= |dV_j|.
inline Outcome discrete_sandwich(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  for (int k = 0; k < trials; ++k) {
    const auto inst = random_instance(rng);
    const auto q = random_counts(rng, inst.env.num_sources(), 20);
    const Eigen::VectorXd g = grad_posterior_variance(inst.env, inst.prior, q);
    bool ok = true;
    std::string msg;
    for (std::size_t j = 0; j < inst.env.num_sources(); ++j) {
      const double d = std::abs(g(static_cast<Eigen::Index>(j)));
      const double red = variance_reduction(inst.env, inst.prior, q, j);
      const double qj = static_cast<double>(q[j]);
      const double slack = 1e-12 * std::max(d, 1e-300);
      if (qj / (qj + 1.0) * d > red + slack || red > d + slack) {
        ok = false;
        msg = describe("sandwich", red, d);
      }
    }
    out.record(ok, msg);
  }
  return out;
}

/// |d_jj V / d_j V| <= 2 / q_j, second derivative by central differences.
inline Outcome second_derivative_ratio(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  for (int k = 0; k < trials; ++k) {
    const auto inst = random_instance(rng);
    const auto n = inst.env.num_sources();
    const Eigen::VectorXd q = random_real_counts(rng, n, 0.5, 20);
    const std::size_t j = rng() % n;
    const auto jj = static_cast<Eigen::Index>(j);
    const double first = grad_posterior_variance(inst.env, inst.prior, q)(jj);
    if (first == 0.0) {
      out.record(true, "");
      continue;
    }
    const double h = 1e-3 * q(jj);
    Eigen::VectorXd up = q, down = q;
    up(jj) += h;
    down(jj) -= h;
    // Second derivative from the analytic first derivative, central in q_j.
    const double second = (grad_posterior_variance(inst.env, inst.prior, up)(jj) -
                           grad_posterior_variance(inst.env, inst.prior, down)(jj)) /
                          (2.0 * h);
    const double ratio = std::abs(second / first);
    const double bound = 2.0 / q(jj);
    out.worst = std::max(out.worst, ratio / bound);
    out.record(ratio <= bound * (1.0 + 1e-6), describe("ratio vs 2/q", ratio, bound));
  }
  return out;
}

/// max_i |g_i - fd_i| / max_i |fd_i| < 1e-6 with step 1e-5.
inline Outcome gradient_posterior(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  for (int k = 0; k < trials; ++k) {
    const auto inst = random_instance(rng);
    const Eigen::VectorXd q = random_real_counts(rng, inst.env.num_sources(), 0.5, 10);
    const Eigen::VectorXd g = grad_posterior_variance(inst.env, inst.prior, q);
    const Eigen::VectorXd fd = ref::central_gradient(
        [&](const Eigen::VectorXd& x) { return posterior_variance(inst.env, inst.prior, x); }, q, 1e-5);
    const double scale = fd.cwiseAbs().maxCoeff();
    const double err = scale > 0 ? (g - fd).cwiseAbs().maxCoeff() / scale : (g - fd).cwiseAbs().maxCoeff();
    out.worst = std::max(out.worst, err);
    out.record(err < 1e-6, describe("relative error", err, 1e-6));
  }
  return out;
}

inline Outcome gradient_asymptotic(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  while (out.instances < trials) {
    std::uniform_int_distribution<int> kd(1, 4);
    const int kk = kd(rng);
    std::uniform_int_distribution<int> nd(kk, 6);
    const Environment env(ref::random_matrix(rng, nd(rng), kk, -5, 5));
    const Eigen::VectorXd lambda =
        0.5 * ref::random_simplex(rng, static_cast<Eigen::Index>(env.num_sources())).array() + 0.1;
    Eigen::VectorXd g;
    try {
      g = grad_asymptotic_variance(env, lambda);
    } catch (const NonDifferentiablePoint&) {
      continue;  // numerically singular draw, outside the domain
    }
    const Eigen::VectorXd fd =
        ref::central_gradient([&](const Eigen::VectorXd& x) { return asymptotic_variance(env, x); }, lambda, 1e-5);
    const double err = (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
    out.worst = std::max(out.worst, err);
    out.record(err < 1e-6, describe("relative error", err, 1e-6));
  }
  return out;
}

/// V*(lambda) >= phi([N])^2 on 1000 random simplex points per environment,
/// and V*(lambda*) = phi*^2.
inline Outcome asymptotic_lower_bound(std::uint64_t seed, int environments) {
  std::mt19937_64 rng(seed);
  Outcome out;
  for (int k = 0; k < environments; ++k) {
    const auto inst = random_instance(rng);
    const auto& env = inst.env;
    const auto sets = enumerate_minimal_spanning_sets(env);
    const double phi2 = sets.front().phi * sets.front().phi;
    bool ok = std::abs(asymptotic_variance(env, sets.front().lambda_star) - phi2) <= 1e-10 * std::max(1.0, phi2);
    std::string msg = ok ? "" : describe("V*(lambda*) vs phi^2", asymptotic_variance(env, sets.front().lambda_star), phi2);
    for (int s = 0; s < 1000; ++s) {
      const Eigen::VectorXd lam = ref::random_simplex(rng, static_cast<Eigen::Index>(env.num_sources()));
      const double v = asymptotic_variance(env, lam);
      if (!(v >= phi2 - 1e-10)) {
        ok = false;
        msg = describe("V* below phi^2", v, phi2);
      }
    }
    out.record(ok, msg);
  }
  return out;
}

inline Outcome homogeneity(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  std::uniform_real_distribution<double> cd(0.01, 100.0);
  for (int k = 0; k < trials; ++k) {
    const auto inst = random_instance(rng);
    const Eigen::VectorXd lam = ref::random_simplex(rng, static_cast<Eigen::Index>(inst.env.num_sources()));
    const double c = cd(rng);
    const double a = asymptotic_variance(inst.env, Eigen::VectorXd(c * lam));
    const double b = asymptotic_variance(inst.env, lam) / c;
    const double err = std::isinf(a) && std::isinf(b) ? 0.0 : std::abs(a - b) / std::max(std::abs(b), 1e-300);
    out.worst = std::max(out.worst, err);
    out.record(err < 1e-12, describe("relative error", err, 1e-12));
  }
  return out;
}

/// With the best set S* of size K and signs flipped so every beta > 0, each
/// outside source j = sum_k alpha_jk c_k satisfies |sum_k alpha_jk| < 1.
inline Outcome alpha_sum(std::uint64_t seed, int environments) {
  std::mt19937_64 rng(seed);
  Outcome out;
  while (out.instances < environments) {
    std::uniform_int_distribution<int> kd(2, 4);
    const int k = kd(rng);
    std::uniform_int_distribution<int> nd(k + 1, 7);
    const Environment env(ref::random_gaussian(rng, nd(rng), k));
    const auto sets = enumerate_minimal_spanning_sets(env);
    const auto& best = sets.front();
    if (best.indices.size() != static_cast<std::size_t>(k)) continue;
    Eigen::MatrixXd basis = detail::source_columns(env, best.indices);
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      if (best.beta(j) < 0) basis.col(j) = -basis.col(j);
    }
    const auto lu = basis.fullPivLu();
    bool ok = true;
    double worst = 0.0;
    for (std::size_t j = 0; j < env.num_sources(); ++j) {
      if (std::find(best.indices.begin(), best.indices.end(), j) != best.indices.end()) continue;
      const Eigen::VectorXd alpha = lu.solve(env.source(j));
      const double s = std::abs(alpha.sum());
      worst = std::max(worst, s);
      if (!(s < 1.0)) ok = false;
    }
    out.worst = std::max(out.worst, worst);
    out.record(ok, describe("|sum alpha|", worst, 1.0));
  }
  return out;
}

/// Largest eta for which S* stays strictly best after scaling every outside
/// source by (1 + eta), halved for strictness.
inline double fitted_eta(const Environment& env, const std::vector<SpanningSetReport>& sets) {
  const auto& best = sets.front();
  double eta_max = std::numeric_limits<double>::infinity();
  for (std::size_t s = 1; s < sets.size(); ++s) {
    double inside = 0.0, outside = 0.0;
    for (std::size_t j = 0; j < sets[s].indices.size(); ++j) {
      const double b = std::abs(sets[s].beta(static_cast<Eigen::Index>(j)));
      const bool in_best = std::find(best.indices.begin(), best.indices.end(), sets[s].indices[j]) != best.indices.end();
      (in_best ? inside : outside) += b;
    }
    if (outside > 0.0 && inside < best.phi) eta_max = std::min(eta_max, outside / (best.phi - inside) - 1.0);
  }
  (void)env;
  return std::isfinite(eta_max) ? 0.5 * eta_max : 1.0;
}

/// V*(lambda) >= phi*^2 / (1 - (2 eta + eta^2)/(1 + eta)^2 rho) with rho the
/// mass outside S*; the bound strictly improves on phi*^2 whenever rho > 0.
inline Outcome perturbation_bound(std::uint64_t seed, int environments) {
  std::mt19937_64 rng(seed);
  Outcome out;
  while (out.instances < environments) {
    const auto inst = random_instance(rng);
    const auto& env = inst.env;
    const auto sets = enumerate_minimal_spanning_sets(env);
    if (sets.size() < 2 || detail::phi_tied(sets[0].phi, sets[1].phi)) continue;
    const auto& best = sets.front();
    const double eta = fitted_eta(env, sets);
    const double phi2 = best.phi * best.phi;
    const double factor = (2.0 * eta + eta * eta) / ((1.0 + eta) * (1.0 + eta));
    bool ok = eta > 0.0;
    std::string msg;
    for (int s = 0; s < 200; ++s) {
      const Eigen::VectorXd lam = ref::random_simplex(rng, static_cast<Eigen::Index>(env.num_sources()));
      double rho = 0.0;
      for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (std::find(best.indices.begin(), best.indices.end(), static_cast<std::size_t>(i)) == best.indices.end()) {
          rho += lam(i);
        }
      }
      const double bound = phi2 / (1.0 - factor * rho);
      const double v = asymptotic_variance(env, lam);
      if (!(v >= bound * (1.0 - 1e-10)) || !(rho == 0.0 || bound > phi2)) {
        ok = false;
        msg = describe("V* vs perturbation bound", v, bound);
      }
    }
    out.record(ok, msg);
  }
  return out;
}

/// |d_{lambda*} V(q)| >= V(q)^2 / phi*^2 at random counts and along greedy traces.
inline Outcome directional_derivative(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  while (out.instances < trials) {
    const auto inst = random_instance(rng);
    const auto sets = enumerate_minimal_spanning_sets(inst.env);
    const auto& best = sets.front();
    const auto trace = simulate(inst.env, inst.prior, 60);
    const auto path = trace.count_path();
    std::vector<Eigen::VectorXd> points;
    for (std::size_t t = 0; t < path.size(); t += 6) points.push_back(path[t].as_real());
    points.push_back(random_real_counts(rng, inst.env.num_sources(), 0, 20));
    bool ok = true;
    std::string msg;
    for (const auto& q : points) {
      const double v = posterior_variance(inst.env, inst.prior, q);
      const double dir = std::abs(grad_posterior_variance(inst.env, inst.prior, q).dot(best.lambda_star.weights()));
      const double bound = v * v / (best.phi * best.phi);
      if (!(dir >= bound * (1.0 - 1e-10))) {
        ok = false;
        msg = describe("directional derivative vs V^2/phi^2", dir, bound);
      }
    }
    out.record(ok, msg);
  }
  return out;
}

/// |t V(lambda t) - V*(lambda)| <= C / t. Two checks per instance with
/// C' Lambda C invertible:
///  - t gap(t) <= C_inf = u' M^-1 Sigma0^-1 M^-1 u at t = 100, 200, 400;
///  - C fitted at t = 100, checked at t = 200 and 400 (25% margin), on
///    instances whose prior holds at most one period of information
///    (||M^-1/2 Sigma0^-1 M^-1/2|| <= 1), so t = 100 is already asymptotic.
/// lambda * 100 is integral so lambda t is an exact division. Counts the
/// fitted-constant instances.
inline Outcome convergence_rate(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  Outcome out;
  while (out.instances < trials) {
    const auto inst = random_instance(rng);
    const auto n = inst.env.num_sources();
    std::vector<std::int64_t> parts(n, 0);
    for (int j = 0; j < 100; ++j) ++parts[rng() % n];
    Eigen::VectorXd lam(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) lam(static_cast<Eigen::Index>(i)) = static_cast<double>(parts[i]) / 100.0;
    const Eigen::MatrixXd& c = inst.env.coefficients();
    const Eigen::MatrixXd m = c.transpose() * lam.asDiagonal() * c;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (!(eig.eigenvalues().minCoeff() > 1e-6 * eig.eigenvalues().maxCoeff())) continue;
    const double vstar = asymptotic_variance(inst.env, lam);
    const Eigen::MatrixXd prec = inst.prior.covariance().inverse();
    const Eigen::VectorXd mu = m.fullPivLu().solve(inst.env.target());
    const double c_inf = mu.dot(prec * mu);
    const Eigen::MatrixXd half_inv = eig.operatorInverseSqrt();
    const double strength =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(half_inv * prec * half_inv).eigenvalues().maxCoeff();
    auto gap = [&](std::int64_t t) {
      std::vector<std::int64_t> q(n);
      for (std::size_t i = 0; i < n; ++i) q[i] = parts[i] * t / 100;
      return std::abs(static_cast<double>(t) * posterior_variance(inst.env, inst.prior, DivisionVector(q)) - vstar);
    };
    const double slack = 1e-10 * vstar;
    for (std::int64_t t : {100, 200, 400}) {
      const double g = gap(t);
      if (!(g <= c_inf / static_cast<double>(t) * (1.0 + 1e-8) + slack)) {
        if (out.violations == 0) out.first_failure = describe("gap vs C_inf/t", g, c_inf / static_cast<double>(t));
        ++out.violations;
      }
    }
    if (strength > 1.0) continue;
    const double fitted = 100.0 * gap(100);
    bool ok = true;
    std::string msg;
    for (std::int64_t t : {200, 400}) {
      const double g = gap(t);
      if (!(g <= 1.25 * fitted / static_cast<double>(t) + slack)) {
        ok = false;
        msg = describe("gap vs C/t", g, fitted / static_cast<double>(t));
      }
    }
    out.record(ok, msg);
  }
  return out;
}

}  // namespace props
