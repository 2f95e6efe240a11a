#include "lne/convex_lse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lne/errors.hpp"

namespace lne {

void RegressionData::validate() const {
  if (x.size() != y.size())
    throw std::invalid_argument("RegressionData: x and y differ in length");
  if (x.size() < 2) throw std::invalid_argument("RegressionData: need at least 2 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("RegressionData: non-finite entry");
    if (i > 0 && !(x[i] > x[i - 1]))
      throw std::invalid_argument("RegressionData: design points must be strictly increasing");
  }
}

namespace {

// Workspace for the restricted least-squares solves. All vectors are indexed
// by active-knot position; gram_* hold the tridiagonal normal equations of
// min_v sum_i (interp_active(v)(x_i) - y_i)^2.
struct RestrictedSolver {
  const std::vector<double>& x;
  const std::vector<double>& y;
  std::vector<double> diag, off, rhs, work_c, work_d;

  RestrictedSolver(const std::vector<double>& x_, const std::vector<double>& y_)
      : x(x_), y(y_) {}

  // Fills `v` with the unconstrained minimizer over values at `active`.
  void solve(const std::vector<std::size_t>& active, std::vector<double>& v) {
    const std::size_t m = active.size();
    diag.assign(m, 0.0);
    off.assign(m - 1, 0.0);
    rhs.assign(m, 0.0);
    // Every design point contributes to the hat-function pair bracketing it;
    // walk the grid once since both sequences are sorted.
    std::size_t seg = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      while (seg + 2 < m && x[i] >= x[active[seg + 1]]) ++seg;
      const double t0 = x[active[seg]], t1 = x[active[seg + 1]];
      const double w = (x[i] - t0) / (t1 - t0);
      const double omw = 1.0 - w;
      diag[seg] += omw * omw;
      diag[seg + 1] += w * w;
      off[seg] += omw * w;
      rhs[seg] += omw * y[i];
      rhs[seg + 1] += w * y[i];
    }
    // Thomas algorithm; the matrix is SPD with unit-or-larger diagonal
    // because every active knot is itself a design point.
    work_c.assign(m, 0.0);
    work_d.assign(m, 0.0);
    double denom = diag[0];
    work_c[0] = off[0] / denom;
    work_d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < m; ++i) {
      denom = diag[i] - off[i - 1] * work_c[i - 1];
      if (i + 1 < m) work_c[i] = off[i] / denom;
      work_d[i] = (rhs[i] - off[i - 1] * work_d[i - 1]) / denom;
    }
    v.assign(m, 0.0);
    v[m - 1] = work_d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) v[i] = work_d[i] - work_c[i] * v[i + 1];
  }

  // Interpolates knot values onto the full design grid.
  void interpolate(const std::vector<std::size_t>& active, const std::vector<double>& v,
                   std::vector<double>& out) const {
    const std::size_t m = active.size();
    out.resize(x.size());
    std::size_t seg = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      while (seg + 2 < m && x[i] >= x[active[seg + 1]]) ++seg;
      const double t0 = x[active[seg]], t1 = x[active[seg + 1]];
      const double w = (x[i] - t0) / (t1 - t0);
      out[i] = (1.0 - w) * v[seg] + w * v[seg + 1];
    }
  }

  // Slope changes at the interior active knots (length m - 2).
  void slope_changes(const std::vector<std::size_t>& active, const std::vector<double>& v,
                     std::vector<double>& sc) const {
    const std::size_t m = active.size();
    sc.resize(m >= 2 ? m - 2 : 0);
    for (std::size_t j = 1; j + 1 < m; ++j) {
      const double sl = (v[j] - v[j - 1]) / (x[active[j]] - x[active[j - 1]]);
      const double sr = (v[j + 1] - v[j]) / (x[active[j + 1]] - x[active[j]]);
      sc[j - 1] = sr - sl;
    }
  }
};

}  // namespace

PiecewiseLinearFunction fit_convex_lse(const RegressionData& data, const LseOptions& opts) {
  data.validate();
  const std::vector<double>& x = data.x;
  const std::vector<double>& y = data.y;
  const std::size_t n = data.n();
  double scale = 1.0;
  for (double yi : y) scale = std::max(scale, std::fabs(yi));
  const double tol = opts.tolerance_scale * scale;
  const std::size_t max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 10 * n + 100;

  RestrictedSolver solver(x, y);
  std::vector<std::size_t> active = {0, n - 1};
  std::vector<double> v, theta, sc, sc_prev, v_prev, v_new;
  solver.solve(active, v);

  double worst_violation = 0.0;
  for (std::size_t iter = 1;; ++iter) {
    if (iter > max_iter) {
      std::ostringstream os;
      os << "fit_convex_lse: no convergence after " << max_iter
         << " iterations (violation " << worst_violation << ", tolerance " << tol << ")";
      throw SolverError(os.str(), max_iter, worst_violation);
    }
    solver.interpolate(active, v, theta);

    // Objective decrease rate for a new knot at x_j is
    // d_j = (1/n) sum_i r_i (x_i - x_j)_+ with r = theta - y; running suffix
    // sums of r and r*x give every d_j in one backward pass.
    double s0 = 0.0, s1 = 0.0;
    double d_min = 0.0;
    std::size_t j_min = n;  // sentinel: nothing to add
    std::size_t next_active = active.size() - 1;
    for (std::size_t j = n - 1; j-- > 0;) {
      const double r = theta[j + 1] - y[j + 1];
      s0 += r;
      s1 += r * x[j + 1];
      while (next_active > 0 && active[next_active] > j) --next_active;
      const bool is_active = active[next_active] == j;
      if (j == 0 || is_active) continue;  // endpoints and current knots stay put
      const double d = (s1 - x[j] * s0) / static_cast<double>(n);
      if (d < d_min) {
        d_min = d;
        j_min = j;
      }
    }
    worst_violation = -d_min;
    if (j_min == n || d_min >= -tol) break;

    // Add the most-violating knot, then restore feasibility: repeatedly take
    // the unconstrained restricted solution, and while it breaks convexity,
    // step from the previous feasible iterate to the first blocking knot and
    // drop that knot (its kink is flat there, so nothing changes but the
    // parameterization).
    std::vector<std::size_t> trial = active;
    trial.insert(std::upper_bound(trial.begin(), trial.end(), j_min), j_min);
    v_prev.resize(trial.size());
    for (std::size_t k = 0; k < trial.size(); ++k) v_prev[k] = theta[trial[k]];
    for (;;) {
      solver.solve(trial, v_new);
      solver.slope_changes(trial, v_new, sc);
      double sc_min = 0.0;
      for (double s : sc) sc_min = std::min(sc_min, s);
      if (sc_min >= 0.0) {
        active = trial;
        v = v_new;
        break;
      }
      solver.slope_changes(trial, v_prev, sc_prev);
      double lam = 1.0;
      std::size_t drop = trial.size();
      for (std::size_t k = 0; k < sc.size(); ++k) {
        if (sc[k] < 0.0) {
          const double l = sc_prev[k] / (sc_prev[k] - sc[k]);
          if (l < lam) {
            lam = l;
            drop = k + 1;  // interior knot k sits at trial[k + 1]
          }
        }
      }
      if (drop >= trial.size())
        throw SolverError("fit_convex_lse: feasibility line search failed", 0, sc_min);
      lam = std::max(lam, 0.0);  // shield against a round-off-negative start
      for (std::size_t k = 0; k < v_prev.size(); ++k)
        v_prev[k] = (1.0 - lam) * v_prev[k] + lam * v_new[k];
      v_prev.erase(v_prev.begin() + static_cast<std::ptrdiff_t>(drop));
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  solver.interpolate(active, v, theta);
  return PiecewiseLinearFunction(x, theta, Shape::convex);
}

CharacterizationReport check_lse_characterization(const PiecewiseLinearFunction& f,
                                                  const RegressionData& data,
                                                  double tau_char) {
  data.validate();
  const std::vector<double>& x = data.x;
  const std::size_t n = data.n();
  if (f.knots() != x)
    throw std::invalid_argument(
        "check_lse_characterization: fit knots do not match the design grid");
  if (tau_char < 0.0) {
    double scale = 1.0;
    for (double yi : data.y) scale = std::max(scale, std::fabs(yi));
    tau_char = 1e-10 * scale;
  }

  // D(x_k) = (1/n) sum_{i<=k} r_i (x_k - x_i) via prefix sums of r and r*x.
  std::vector<double> D(n);
  double p0 = 0.0, p1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = f.values()[k] - data.y[k];
    p0 += r;
    p1 += r * x[k];
    D[k] = (x[k] * p0 - p1) / static_cast<double>(n);
  }

  CharacterizationReport rep;
  rep.tolerance = tau_char;
  rep.min_slack = *std::min_element(D.begin(), D.end());
  rep.max_kink_residual = 0.0;
  for (double kx : f.kinks()) {
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(x.begin(), x.end(), kx) - x.begin());
    rep.max_kink_residual = std::max(rep.max_kink_residual, std::fabs(D[k]));
  }
  rep.pass = rep.min_slack >= -tau_char && rep.max_kink_residual <= tau_char;
  return rep;
}

}  // namespace lne
