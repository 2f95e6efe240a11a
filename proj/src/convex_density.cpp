#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "lne/density_estimators.hpp"
#include "lne/errors.hpp"
#include "weighted_sample.hpp"

namespace lne {

namespace {

// Gram entry of two hinge basis functions:
// G(a, c) = integral over [0, inf) of (a - x)_+ (c - x)_+ dx.
double gram(double a, double c) {
  const double lo = std::min(a, c), hi = std::max(a, c);
  return lo * lo * hi / 2.0 - lo * lo * lo / 6.0;
}

// Everything the support-reduction loop needs about the current iterate
// f(x) = sum_j w_j (k_j - x)_+ against the weighted sample.
struct DensityState {
  const detail::WeightedSample& ws;
  std::vector<double> C0, C1;  // data prefix masses / first moments
  std::vector<double> knots;   // ascending, positive
  std::vector<double> w;       // nonnegative

  explicit DensityState(const detail::WeightedSample& sample) : ws(sample) {
    C0.resize(ws.x.size());
    C1.resize(ws.x.size());
    double a0 = 0.0, a1 = 0.0;
    for (std::size_t i = 0; i < ws.x.size(); ++i) {
      a0 += ws.p[i];
      a1 += ws.p[i] * ws.x[i];
      C0[i] = a0;
      C1[i] = a1;
    }
  }

  // sum_i p_i (k - x_i)_+ .
  double data_hinge(double k) const {
    const auto it = std::upper_bound(ws.x.begin(), ws.x.end(), k);
    if (it == ws.x.begin()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(it - ws.x.begin()) - 1;
    return k * C0[i] - C1[i];
  }

  // Empirical mass at or left of k.
  double data_cdf(double k) const {
    const auto it = std::upper_bound(ws.x.begin(), ws.x.end(), k);
    if (it == ws.x.begin()) return 0.0;
    return C0[static_cast<std::size_t>(it - ws.x.begin()) - 1];
  }

  double f_of(double k) const {
    double s = 0.0;
    for (std::size_t j = 0; j < knots.size(); ++j)
      if (knots[j] > k) s += w[j] * (knots[j] - k);
    return s;
  }

  // Fitted CDF: integral of f over [0, k].
  double cdf(double k) const {
    double s = 0.0;
    for (std::size_t j = 0; j < knots.size(); ++j) {
      const double kj = knots[j];
      const double tail = std::max(kj - k, 0.0);
      s += w[j] * (kj * kj - tail * tail) / 2.0;
    }
    return s;
  }

  double mass() const {
    double s = 0.0;
    for (std::size_t j = 0; j < knots.size(); ++j) s += w[j] * knots[j] * knots[j] / 2.0;
    return s;
  }

  // Knot-direction derivative of the criterion:
  // d(k) = integral of (k - x)_+ f(x) dx - sum_i p_i (k - x_i)_+ .
  double d_of(double k) const {
    double s = 0.0;
    for (std::size_t j = 0; j < knots.size(); ++j) s += w[j] * gram(knots[j], k);
    return s - data_hinge(k);
  }

  double criterion() const {
    double s = 0.0;
    for (std::size_t a = 0; a < knots.size(); ++a) {
      for (std::size_t c = 0; c < knots.size(); ++c)
        s += 0.5 * w[a] * w[c] * gram(knots[a], knots[c]);
      s -= w[a] * data_hinge(knots[a]);
    }
    return s;
  }
};

// Nonnegative least squares over weights for fixed knots: removal-only
// active-set iteration started from the current (feasible) weights. The
// caller's outer loop supplies the additions.
void nnls_weights(DensityState& st) {
  const std::size_t m = st.knots.size();
  if (m == 0) return;
  Eigen::MatrixXd G(m, m);
  Eigen::VectorXd b(m);
  for (std::size_t a = 0; a < m; ++a) {
    b(static_cast<Eigen::Index>(a)) = st.data_hinge(st.knots[a]);
    for (std::size_t c = 0; c < m; ++c)
      G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
          gram(st.knots[a], st.knots[c]);
  }
  std::vector<std::size_t> keep(m);
  for (std::size_t j = 0; j < m; ++j) keep[j] = j;
  std::vector<double> cur = st.w;
  for (std::size_t guard = 0; guard <= m + 2; ++guard) {
    const Eigen::Index k = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd Gk(k, k);
    Eigen::VectorXd bk(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      bk(a) = b(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(a)]));
      for (Eigen::Index c = 0; c < k; ++c)
        Gk(a, c) = G(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(a)]),
                     static_cast<Eigen::Index>(keep[static_cast<std::size_t>(c)]));
    }
    Eigen::VectorXd wk = Gk.ldlt().solve(bk);
    if (k == 0 || wk.minCoeff() >= 0.0) {
      std::vector<double> knots_new, w_new;
      for (Eigen::Index a = 0; a < k; ++a) {
        knots_new.push_back(st.knots[keep[static_cast<std::size_t>(a)]]);
        w_new.push_back(wk(a));
      }
      st.knots = std::move(knots_new);
      st.w = std::move(w_new);
      return;
    }
    double lam = 1.0;
    std::size_t drop = keep.size();
    for (Eigen::Index a = 0; a < k; ++a) {
      if (wk(a) < 0.0) {
        const double c0 = cur[static_cast<std::size_t>(a)];
        const double l = c0 / (c0 - wk(a));
        if (l < lam) {
          lam = l;
          drop = static_cast<std::size_t>(a);
        }
      }
    }
    if (drop >= keep.size())
      throw SolverError("fit_convex_density_lse: weight line search failed", guard,
                        wk.minCoeff());
    for (Eigen::Index a = 0; a < k; ++a)
      cur[static_cast<std::size_t>(a)] =
          (1.0 - std::max(lam, 0.0)) * cur[static_cast<std::size_t>(a)] +
          std::max(lam, 0.0) * wk(a);
    cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(drop));
    keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  throw SolverError("fit_convex_density_lse: weight subproblem stalled", st.knots.size(), 0.0);
}

// Exact minimizer of d over (0, kmax]: d is piecewise smooth with breakpoints
// at data points and knots; within a piece d' = (fitted CDF) - (data CDF) is
// nondecreasing and quadratic, so the interior root (if any) has a closed
// form. Returns the minimizing location and value.
void min_d_scan(const DensityState& st, double kmax, double& k_best, double& d_best) {
  std::vector<double> bps;
  for (double x : st.ws.x)
    if (x > 0.0 && x < kmax) bps.push_back(x);
  for (double k : st.knots)
    if (k > 0.0 && k < kmax) bps.push_back(k);
  bps.push_back(kmax);
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  k_best = kmax;
  d_best = std::numeric_limits<double>::infinity();
  double prev = 0.0;
  for (double b : bps) {
    if (b <= prev) continue;
    // d'(prev+) = fitted CDF minus empirical CDF on the open piece.
    const double c = st.cdf(prev) - st.data_cdf(prev);
    const double T = b - prev;
    const double f_lo = st.f_of(prev);
    double beta = 0.0;  // minus the density slope on the piece
    for (std::size_t j = 0; j < st.knots.size(); ++j)
      if (st.knots[j] >= b) beta += st.w[j];
    const double dpb = c + f_lo * T - 0.5 * beta * T * T;  // d'(b-)
    if (c < 0.0 && dpb > 0.0 && f_lo > 0.0) {
      const double disc = std::max(f_lo * f_lo + 2.0 * beta * c, 0.0);
      const double t_root = 2.0 * (-c) / (f_lo + std::sqrt(disc));
      if (t_root > 0.0 && t_root < T) {
        const double k = prev + t_root;
        const double d = st.d_of(k);
        if (d < d_best) {
          d_best = d;
          k_best = k;
        }
      }
    }
    const double d = st.d_of(b);
    if (d < d_best) {
      d_best = d;
      k_best = b;
    }
    prev = b;
  }
}

// Coordinate descent on one knot position: within (lo, hi) the criterion's
// derivative along k_j is w_j * h(k) with
// h(k) = (CDF of the fit with knot j moved to k)(k) - empirical CDF(k);
// h increases within data gaps and jumps down at data points, so local
// minima are the upward roots, one per gap at most. Returns the best
// candidate by criterion value, or the current position.
double best_slide(DensityState& st, std::size_t j, double lo, double hi) {
  const double k_cur = st.knots[j];
  const double w_j = st.w[j];
  if (w_j <= 0.0) return k_cur;
  auto h_of = [&](double k) {
    double s = w_j * k * k / 2.0;
    for (std::size_t c = 0; c < st.knots.size(); ++c) {
      if (c == j) continue;
      const double kc = st.knots[c];
      const double tail = std::max(kc - k, 0.0);
      s += st.w[c] * (kc * kc - tail * tail) / 2.0;
    }
    return s - st.data_cdf(k);
  };

  // Piece boundaries inside (lo, hi): data points and the other knots.
  std::vector<double> bps;
  for (double x : st.ws.x)
    if (x > lo && x < hi) bps.push_back(x);
  for (std::size_t c = 0; c < st.knots.size(); ++c)
    if (c != j && st.knots[c] > lo && st.knots[c] < hi) bps.push_back(st.knots[c]);
  bps.push_back(hi);
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  double best_k = k_cur;
  double best_obj = std::numeric_limits<double>::infinity();
  double prev = lo;
  for (double b : bps) {
    if (b <= prev) continue;
    const double eps = 1e-12 * (1.0 + b);
    double a0 = prev + eps, b0 = b - eps;
    if (a0 < b0 && h_of(a0) < 0.0 && h_of(b0) > 0.0) {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a0 + b0);
        (h_of(mid) < 0.0 ? a0 : b0) = mid;
      }
      const double k_try = 0.5 * (a0 + b0);
      st.knots[j] = k_try;
      const double obj = st.criterion();
      if (obj < best_obj) {
        best_obj = obj;
        best_k = k_try;
      }
    }
    prev = b;
  }
  st.knots[j] = k_cur;
  if (best_k == k_cur) return k_cur;
  const double cur_obj = st.criterion();
  return best_obj < cur_obj - 1e-15 * (1.0 + std::fabs(cur_obj)) ? best_k : k_cur;
}

// Merge knots that slid within merging distance of each other, pooling their
// weights; the follow-up weight refit restores optimality on the merged set.
bool merge_close_knots(DensityState& st, double tol) {
  bool merged = false;
  for (std::size_t j = 0; j + 1 < st.knots.size();) {
    if (st.knots[j + 1] - st.knots[j] <= tol * (1.0 + st.knots[j + 1])) {
      st.w[j] += st.w[j + 1];
      st.knots.erase(st.knots.begin() + static_cast<std::ptrdiff_t>(j + 1));
      st.w.erase(st.w.begin() + static_cast<std::ptrdiff_t>(j + 1));
      merged = true;
    } else {
      ++j;
    }
  }
  return merged;
}

}  // namespace

PiecewiseLinearFunction fit_convex_density_lse(const SampleData& data,
                                               const ConvexDensityOptions& opts) {
  data.validate(/*require_nonnegative=*/true);
  const detail::WeightedSample ws = detail::collapse_ties(data);
  DensityState st(ws);
  const double x_max = ws.x.back();
  const double tol = opts.tolerance_scale * std::max(1.0, x_max);
  const bool grid_mode = !opts.candidate_grid.empty();
  for (std::size_t g = 1; g < opts.candidate_grid.size(); ++g)
    if (!(opts.candidate_grid[g] > opts.candidate_grid[g - 1]) || opts.candidate_grid[0] <= 0.0)
      throw std::invalid_argument(
          "fit_convex_density_lse: candidate grid must be positive ascending");

  double d_min = 0.0;
  bool converged = false;
  for (std::size_t outer = 0; outer < opts.max_iterations; ++outer) {
    const double kmax =
        std::max(2.0 * x_max + 1.0, st.knots.empty() ? 0.0 : 1.5 * st.knots.back() + 1.0);
    double k_new = kmax;
    if (grid_mode) {
      d_min = std::numeric_limits<double>::infinity();
      for (double k : opts.candidate_grid) {
        const double d = st.d_of(k);
        if (d < d_min) {
          d_min = d;
          k_new = k;
        }
      }
      if (d_min >= -tol) {
        converged = true;
        break;
      }
    } else {
      min_d_scan(st, kmax, k_new, d_min);
      const double mass_gap = std::fabs(st.mass() - 1.0);
      if (d_min >= -tol && mass_gap <= opts.mass_tolerance) {
        converged = true;
        break;
      }
      if (d_min >= -tol) k_new = kmax;  // mass deficit: extend the support
    }

    // Insert the new knot with zero weight (a no-op for f), refit weights.
    const auto at = std::lower_bound(st.knots.begin(), st.knots.end(), k_new);
    if (at != st.knots.end() && *at == k_new) {
      // The most-violating location is already a knot, yet its derivative
      // should be ~0 after the weight refit: the subproblem is inconsistent.
      throw SolverError("fit_convex_density_lse: stalled on an active knot", outer, d_min);
    }
    st.w.insert(st.w.begin() + (at - st.knots.begin()), 0.0);
    st.knots.insert(at, k_new);
    nnls_weights(st);

    if (!grid_mode) {
      for (std::size_t sweep = 0; sweep < opts.slide_sweeps; ++sweep) {
        bool moved = false;
        for (std::size_t j = 0; j < st.knots.size(); ++j) {
          const double lo = j == 0 ? 0.0 : st.knots[j - 1];
          const double hi = j + 1 < st.knots.size() ? st.knots[j + 1] : kmax;
          const double k_to = best_slide(st, j, lo, hi);
          if (std::fabs(k_to - st.knots[j]) > 1e-12 * (1.0 + st.knots[j])) {
            st.knots[j] = k_to;
            moved = true;
          }
        }
        if (!moved) break;
        if (merge_close_knots(st, 1e-10)) { /* weights pooled; refit below */
        }
        nnls_weights(st);
        if (st.knots.empty()) break;
      }
    }
  }

  if (!converged) {
    std::ostringstream os;
    os << "fit_convex_density_lse: no convergence after " << opts.max_iterations
       << " iterations (gradient gap " << d_min << ", mass " << st.mass() << ")";
    throw SolverError(os.str(), opts.max_iterations, d_min);
  }
  if (st.knots.empty())
    throw SolverError("fit_convex_density_lse: empty fit", 0, 0.0);

  // Assemble the piecewise-linear density on [0, last knot].
  std::vector<double> pk{0.0};
  for (double k : st.knots) pk.push_back(k);
  std::vector<double> pv;
  for (double k : pk) pv.push_back(st.f_of(k));
  return PiecewiseLinearFunction(pk, pv, Shape::convex);
}

ConvexDensityCharacterizationReport check_convex_density_characterization(
    const PiecewiseLinearFunction& fit, const SampleData& data, double tau) {
  data.validate(/*require_nonnegative=*/true);
  const detail::WeightedSample ws = detail::collapse_ties(data);
  if (tau < 0.0) tau = 1e-8 * std::max(1.0, ws.x.back());

  // Recover the hinge representation from the fit's kinks: each interior
  // kink carries weight equal to its slope change, the right endpoint the
  // negated final slope.
  DensityState st(ws);
  const std::vector<double> kk = fit.kinks();
  for (std::size_t i = 1; i + 1 < kk.size(); ++i) {
    const double wj = fit.one_sided_derivative(kk[i], Side::right) -
                      fit.one_sided_derivative(kk[i], Side::left);
    st.knots.push_back(kk[i]);
    st.w.push_back(wj);
  }
  const double w_end = -fit.one_sided_derivative(fit.max_knot(), Side::left);
  if (w_end > 0.0 || st.knots.empty()) {
    st.knots.push_back(fit.max_knot());
    st.w.push_back(std::max(w_end, 0.0));
  }

  // Evaluation grid: data, knots, gap midpoints, and an extension beyond the
  // larger of data range and support.
  std::vector<double> grid;
  for (double x : ws.x)
    if (x > 0.0) grid.push_back(x);
  for (double k : st.knots) grid.push_back(k);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> mids;
  mids.push_back(grid.front() / 2.0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    mids.push_back(0.5 * (grid[i] + grid[i + 1]));
  const double hi = std::max(ws.x.back(), st.knots.back());
  for (int e = 1; e <= 8; ++e) mids.push_back(hi * (1.0 + 0.25 * e));
  grid.insert(grid.end(), mids.begin(), mids.end());

  ConvexDensityCharacterizationReport rep;
  rep.tolerance = tau;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (double k : grid) rep.min_slack = std::min(rep.min_slack, st.d_of(k));
  rep.max_knot_residual = 0.0;
  for (std::size_t j = 0; j < st.knots.size(); ++j)
    if (st.w[j] > 0.0)
      rep.max_knot_residual = std::max(rep.max_knot_residual, std::fabs(st.d_of(st.knots[j])));
  rep.pass = rep.min_slack >= -tau && rep.max_knot_residual <= tau;
  return rep;
}

}  // namespace lne
