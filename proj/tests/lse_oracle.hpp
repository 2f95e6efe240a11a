#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace testutil {

// Brute-force reference for the convex least-squares fit: enumerate every
// active set of second-difference constraints, solve the equality-constrained
// least-squares KKT system, and keep the feasible KKT point (primal feasible,
// multipliers of the correct sign). Exponential in n, so only usable for
// n <= ~10.
inline std::vector<double> brute_force_convex_lse(const std::vector<double>& x,
                                                  const std::vector<double>& y,
                                                  double tol = 1e-9) {
  const int n = static_cast<int>(x.size());
  const int m = n - 2;
  if (m <= 0) return y;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, n);
  for (int j = 1; j + 1 < n; ++j) {
    D(j - 1, j - 1) = 1.0 / (x[j] - x[j - 1]);
    D(j - 1, j) = -1.0 / (x[j] - x[j - 1]) - 1.0 / (x[j + 1] - x[j]);
    D(j - 1, j + 1) = 1.0 / (x[j + 1] - x[j]);
  }
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  double best_obj = 0.0;
  Eigen::VectorXd best;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int j = 0; j < m; ++j)
      if (mask & (1 << j)) act.push_back(j);
    const int k = static_cast<int>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    for (int a = 0; a < k; ++a) {
      kkt.block(0, n + a, n, 1) = D.row(act[a]).transpose();
      kkt.block(n + a, 0, 1, n) = D.row(act[a]);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
    rhs.head(n) = yv;
    Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    Eigen::VectorXd theta = sol.head(n);
    // Multiplier sign: stationarity reads theta - y = D_A' mu with mu >= 0,
    // and the KKT block solved theta + D_A' lam = y, so mu = -lam.
    Eigen::VectorXd mu = -sol.tail(k);
    if ((D * theta).minCoeff() < -tol) continue;
    if (k > 0 && mu.minCoeff() < -tol) continue;
    const double obj = (theta - yv).squaredNorm();
    if (best.size() == 0 || obj < best_obj - 1e-12) {
      best_obj = obj;
      best = theta;
    }
  }
  if (best.size() != n) throw std::runtime_error("no feasible KKT point found");
  return std::vector<double>(best.data(), best.data() + n);
}

}  // namespace testutil
