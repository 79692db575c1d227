#pragma once

#include "infotrap.hpp"

#include <Eigen/Dense>

namespace fixtures {

inline Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline infotrap::GaussianPrior diag_prior(std::initializer_list<double> v) {
  return infotrap::GaussianPrior::independent(vec(v));
}

/// X1 = w, X2 = 3w + b, X3 = b.
inline infotrap::Environment example2(double alpha = 3.0) {
  return infotrap::Environment(rows({{1, 0}, {alpha, 1}, {0, 1}}));
}

inline infotrap::Environment example1() {
  return infotrap::Environment(rows({{1, 1, 0}, {0, 1, 0}, {1, 0, 1}, {0, 0, 1}}));
}

inline infotrap::Environment example3() {
  return infotrap::Environment(rows({{10, 1, 0, 0}, {0, 1, 0, 0}, {1, 0, 1, 0}, {0, 0, 1, 1}, {0, 0, 0, 1}}));
}

/// States (x, y, b), target x + y.
inline infotrap::Environment precise_info() {
  return infotrap::Environment::with_target(rows({{10, 0, 0}, {0, 10, 0}, {4, 5, 10}, {8, 6, -20}}),
                                            vec({1, 1, 0}));
}

inline infotrap::GaussianPrior precise_info_prior() { return diag_prior({0.1, 0.1, 0.039}); }

/// Prior precision diag(1, 2.3, 3.8) on the four-source parity environment.
inline infotrap::GaussianPrior parity_prior() { return diag_prior({1.0, 1.0 / 2.3, 1.0 / 3.8}); }

}  // namespace fixtures
