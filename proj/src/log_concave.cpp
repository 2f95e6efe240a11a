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

// g(d) = (e^d - 1)/d and its first two derivatives. The closed forms lose
// absolute accuracy like eps/d^2 (g1) and eps/d^3 (g2) as d -> 0, which is
// fatal for Newton stationarity on nearly flat segments, so small arguments
// use the Taylor series instead. With terms through d^6 the truncation error
// at the 0.04 cutover (~4e-15) matches the cancellation error of the closed
// forms there (~2e-13 for g1), keeping all three values accurate to ~1e-13
// absolute everywhere.
struct GVals {
  double g, g1, g2;
};

GVals g_of(double d) {
  GVals r;
  if (std::fabs(d) < 0.04) {
    r.g = 1.0 +
          d * (1.0 / 2.0 +
               d * (1.0 / 6.0 +
                    d * (1.0 / 24.0 +
                         d * (1.0 / 120.0 + d * (1.0 / 720.0 + d * (1.0 / 5040.0))))));
    r.g1 = 1.0 / 2.0 +
           d * (1.0 / 3.0 +
                d * (1.0 / 8.0 +
                     d * (1.0 / 30.0 +
                          d * (1.0 / 144.0 + d * (1.0 / 840.0 + d * (1.0 / 5760.0))))));
    r.g2 = 1.0 / 3.0 +
           d * (1.0 / 4.0 +
                d * (1.0 / 10.0 +
                     d * (1.0 / 36.0 +
                          d * (1.0 / 168.0 + d * (1.0 / 960.0 + d * (1.0 / 6480.0))))));
  } else {
    const double e = std::exp(d);
    r.g = (e - 1.0) / d;
    r.g1 = (e * (d - 1.0) + 1.0) / (d * d);
    r.g2 = (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d);
  }
  return r;
}

// Criterion restricted to knot values: sum_j cw_j v_j - integral of the
// exponential of the interpolant.
double criterion_at(const std::vector<double>& t, const std::vector<double>& v,
                    const std::vector<double>& cw) {
  double L = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) L += cw[j] * v[j];
  for (std::size_t j = 0; j + 1 < t.size(); ++j) {
    const double dlt = t[j + 1] - t[j];
    L -= dlt * std::exp(v[j]) * g_of(v[j + 1] - v[j]).g;
  }
  return L;
}

// Maximizes the restricted criterion over knot values by damped Newton; the
// Hessian of the integral term is tridiagonal and positive definite, so each
// step is a Thomas solve. Returns the final gradient max-norm.
double newton_values(const std::vector<double>& t, const std::vector<double>& cw,
                     std::vector<double>& v, double tol, std::size_t max_iter = 80) {
  const std::size_t m = t.size();
  std::vector<double> grad(m), hd(m), ho(m - 1), c(m), dd(m), step(m);
  double L = criterion_at(t, v, cw);
  double gn = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t j = 0; j < m; ++j) {
      grad[j] = cw[j];
      hd[j] = 0.0;
    }
    std::fill(ho.begin(), ho.end(), 0.0);
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double dlt = t[j + 1] - t[j];
      const GVals gv = g_of(v[j + 1] - v[j]);
      const double ev = dlt * std::exp(v[j]);
      grad[j] -= ev * (gv.g - gv.g1);
      grad[j + 1] -= ev * gv.g1;
      hd[j] += ev * (gv.g - 2.0 * gv.g1 + gv.g2);
      hd[j + 1] += ev * gv.g2;
      ho[j] += ev * (gv.g1 - gv.g2);
    }
    gn = 0.0;
    for (double gj : grad) gn = std::max(gn, std::fabs(gj));
    if (gn < tol) break;
    // Solve (integral Hessian) * step = grad; the criterion Hessian is the
    // negative of this, so v + lambda * step ascends.
    double denom = hd[0];
    c[0] = (m > 1) ? ho[0] / denom : 0.0;
    dd[0] = grad[0] / denom;
    for (std::size_t j = 1; j < m; ++j) {
      denom = hd[j] - ho[j - 1] * c[j - 1];
      if (j + 1 < m) c[j] = ho[j] / denom;
      dd[j] = (grad[j] - ho[j - 1] * dd[j - 1]) / denom;
    }
    step[m - 1] = dd[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) step[j] = dd[j] - c[j] * step[j + 1];

    double lam = 1.0;
    const double accept = L - 1e-14 * (1.0 + std::fabs(L));
    while (lam > 1e-14) {
      bool improved = false;
      std::vector<double> v_try(m);
      for (std::size_t j = 0; j < m; ++j) v_try[j] = v[j] + lam * step[j];
      const double L_try = criterion_at(t, v_try, cw);
      if (L_try > accept) {
        v.swap(v_try);
        L = L_try;
        improved = true;
      }
      if (improved) break;
      lam *= 0.5;
    }
    if (lam <= 1e-14) break;  // flat to machine precision
  }
  return gn;
}

struct ActiveState {
  std::vector<std::size_t> idx;  // indices into the unique sample
  std::vector<double> t;         // knot locations
  std::vector<double> v;         // log-density values at knots
};

// Data-mass coefficients cw_j = sum_i p_i * (hat function j at x_i).
void data_coefficients(const detail::WeightedSample& ws, const std::vector<std::size_t>& idx,
                       std::vector<double>& cw) {
  const std::size_t m = idx.size();
  cw.assign(m, 0.0);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < ws.x.size(); ++i) {
    while (seg + 2 < m && ws.x[i] >= ws.x[idx[seg + 1]]) ++seg;
    const double t0 = ws.x[idx[seg]], t1 = ws.x[idx[seg + 1]];
    const double w = (ws.x[i] - t0) / (t1 - t0);
    cw[seg] += (1.0 - w) * ws.p[i];
    cw[seg + 1] += w * ws.p[i];
  }
}

void interpolate_to(const detail::WeightedSample& ws, const ActiveState& st,
                    std::vector<double>& phi_all) {
  const std::size_t m = st.t.size();
  phi_all.resize(ws.x.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < ws.x.size(); ++i) {
    while (seg + 2 < m && ws.x[i] >= st.t[seg + 1]) ++seg;
    const double w = (ws.x[i] - st.t[seg]) / (st.t[seg + 1] - st.t[seg]);
    phi_all[i] = (1.0 - w) * st.v[seg] + w * st.v[seg + 1];
  }
}

void slope_changes(const std::vector<double>& t, const std::vector<double>& v,
                   std::vector<double>& sc) {
  sc.resize(t.size() >= 2 ? t.size() - 2 : 0);
  for (std::size_t j = 1; j + 1 < t.size(); ++j) {
    const double sl = (v[j] - v[j - 1]) / (t[j] - t[j - 1]);
    const double sr = (v[j + 1] - v[j]) / (t[j + 1] - t[j]);
    sc[j - 1] = sr - sl;
  }
}

// Newton plus concavity restoration: whenever the unconstrained-in-values
// optimum bends the wrong way at a knot, walk from the previous feasible
// iterate to the first blocking knot, drop it (its kink vanishes there), and
// re-solve on the smaller knot set.
double solve_restricted(const detail::WeightedSample& ws, ActiveState& st, double newton_tol) {
  std::vector<double> cw, sc, sc_prev, v_prev = st.v, v_new;
  double gn = 0.0;
  for (;;) {
    data_coefficients(ws, st.idx, cw);
    v_new = v_prev;
    gn = newton_values(st.t, cw, v_new, newton_tol);
    slope_changes(st.t, v_new, sc);
    double sc_max = 0.0;
    for (double s : sc) sc_max = std::max(sc_max, s);
    double slope_scale = 0.0;
    for (std::size_t j = 0; j + 1 < st.t.size(); ++j)
      slope_scale =
          std::max(slope_scale, std::fabs((v_new[j + 1] - v_new[j]) / (st.t[j + 1] - st.t[j])));
    if (sc_max <= 1e-12 * (1.0 + slope_scale)) {
      st.v = v_new;
      return gn;
    }
    slope_changes(st.t, v_prev, sc_prev);
    double lam = 1.0;
    std::size_t drop = st.t.size();
    for (std::size_t k = 0; k < sc.size(); ++k) {
      if (sc[k] > 0.0) {
        const double l = sc_prev[k] / (sc_prev[k] - sc[k]);
        if (l < lam) {
          lam = l;
          drop = k + 1;
        }
      }
    }
    if (drop >= st.t.size())
      throw SolverError("fit_log_concave_mle: concavity line search failed", 0, sc_max);
    lam = std::max(lam, 0.0);
    for (std::size_t k = 0; k < v_prev.size(); ++k)
      v_prev[k] = (1.0 - lam) * v_prev[k] + lam * v_new[k];
    v_prev.erase(v_prev.begin() + static_cast<std::ptrdiff_t>(drop));
    st.idx.erase(st.idx.begin() + static_cast<std::ptrdiff_t>(drop));
    st.t.erase(st.t.begin() + static_cast<std::ptrdiff_t>(drop));
  }
}

}  // namespace

double LogConcaveFit::density(double t) const {
  if (t < phi.min_knot() || t > phi.max_knot()) return 0.0;
  return std::exp(phi.evaluate(t));
}

double log_concave_criterion(const PiecewiseLinearFunction& phi, const SampleData& data) {
  data.validate();
  double L = 0.0;
  const double unit = 1.0 / static_cast<double>(data.n());
  for (double xi : data.obs) L += unit * phi.evaluate(xi);
  const std::vector<double>& t = phi.knots();
  const std::vector<double>& v = phi.values();
  for (std::size_t j = 0; j + 1 < t.size(); ++j)
    L -= (t[j + 1] - t[j]) * std::exp(v[j]) * g_of(v[j + 1] - v[j]).g;
  return L;
}

LogConcaveFit fit_log_concave_mle(const SampleData& data, const LogConcaveOptions& opts) {
  data.validate();
  const detail::WeightedSample ws = detail::collapse_ties(data);
  const std::size_t n = ws.x.size();
  const double range = ws.x.back() - ws.x.front();
  const double tau_add = opts.add_tolerance_scale * std::max(1.0, range);
  const std::size_t max_iter = opts.max_iterations > 0 ? opts.max_iterations : 10 * n + 100;

  ActiveState st;
  st.idx = {0, n - 1};
  st.t = {ws.x.front(), ws.x.back()};
  st.v = {-std::log(range), -std::log(range)};  // start from the uniform density

  std::vector<double> phi_all, M0, M1, P0, P1, C0, C1;
  // Prefix masses of the data, for the (s - X_i)_+ sums.
  C0.assign(n, 0.0);
  C1.assign(n, 0.0);
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a0 += ws.p[i];
    a1 += ws.p[i] * ws.x[i];
    C0[i] = a0;
    C1[i] = a1;
  }

  double last_gap = 0.0;
  for (std::size_t outer = 0;; ++outer) {
    if (outer >= max_iter) {
      std::ostringstream os;
      os << "fit_log_concave_mle: no convergence after " << max_iter
         << " iterations (add-direction gap " << last_gap << ", tolerance " << tau_add << ")";
      throw SolverError(os.str(), max_iter, last_gap);
    }
    solve_restricted(ws, st, opts.newton_tolerance);

    // Add-direction derivative at a candidate location s:
    //   D(s) = integral of (s - x)_+ exp(phi) dx - sum_i p_i (s - X_i)_+ .
    // D is convex within each observation gap, so scanning observations is
    // exhaustive. Segment masses M0 = integral of exp(phi), first moments
    // M1 = integral of (x - t_j) exp(phi), and their prefixes make the scan
    // linear time.
    const std::size_t m = st.t.size();
    M0.assign(m - 1, 0.0);
    M1.assign(m - 1, 0.0);
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double dlt = st.t[j + 1] - st.t[j];
      const GVals gv = g_of(st.v[j + 1] - st.v[j]);
      M0[j] = dlt * std::exp(st.v[j]) * gv.g;
      M1[j] = dlt * dlt * std::exp(st.v[j]) * gv.g1;
    }
    P0.assign(m, 0.0);  // fitted mass strictly left of knot j
    P1.assign(m, 0.0);  // fitted first moment strictly left of knot j
    for (std::size_t j = 0; j + 1 < m; ++j) {
      P0[j + 1] = P0[j] + M0[j];
      P1[j + 1] = P1[j] + st.t[j] * M0[j] + M1[j];
    }
    interpolate_to(ws, st, phi_all);

    double best_D = tau_add;
    std::size_t best_i = n;
    std::size_t seg = 0, next_active = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      while (seg + 2 < m && ws.x[i] >= st.t[seg + 1]) ++seg;
      while (next_active + 1 < m && st.idx[next_active] < i) ++next_active;
      if (st.idx[next_active] == i) continue;
      const double s = ws.x[i];
      const double dl = s - st.t[seg];
      const GVals gv = g_of(phi_all[i] - st.v[seg]);
      const double part = dl * dl * std::exp(st.v[seg]) * (gv.g - gv.g1);
      const double D = (s * P0[seg] - P1[seg]) + part - (s * C0[i] - C1[i]);
      if (D > best_D) {
        best_D = D;
        best_i = i;
      }
    }
    last_gap = best_i < n ? best_D : 0.0;
    if (best_i == n) break;

    ActiveState grown;
    grown.idx = st.idx;
    grown.idx.insert(std::upper_bound(grown.idx.begin(), grown.idx.end(), best_i), best_i);
    for (std::size_t j : grown.idx) {
      grown.t.push_back(ws.x[j]);
      grown.v.push_back(phi_all[j]);
    }
    st = std::move(grown);
  }

  return LogConcaveFit{PiecewiseLinearFunction(st.t, st.v, Shape::concave)};
}

LogConcaveCharacterizationReport check_logconcave_characterization(const LogConcaveFit& fit,
                                                                   const SampleData& data,
                                                                   double tau,
                                                                   std::size_t refine) {
  data.validate();
  const detail::WeightedSample ws = detail::collapse_ties(data);
  if (tau < 0.0) tau = 1e-8 * std::max(1.0, ws.x.back() - ws.x.front());
  if (refine == 0) refine = 1;

  // Evaluation grid: observations plus refine-fold subdivision of each gap.
  std::vector<double> grid;
  for (std::size_t i = 0; i + 1 < ws.x.size(); ++i) {
    for (std::size_t r = 0; r < refine; ++r) {
      const double frac = static_cast<double>(r) / static_cast<double>(refine);
      grid.push_back(ws.x[i] + frac * (ws.x[i + 1] - ws.x[i]));
    }
  }
  grid.push_back(ws.x.back());

  const std::vector<double>& t = fit.phi.knots();
  const std::vector<double>& v = fit.phi.values();
  const std::size_t m = t.size();
  std::vector<double> P0(m, 0.0), P1(m, 0.0);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double dlt = t[j + 1] - t[j];
    const GVals gv = g_of(v[j + 1] - v[j]);
    const double M0 = dlt * std::exp(v[j]) * gv.g;
    const double M1 = dlt * dlt * std::exp(v[j]) * gv.g1;
    P0[j + 1] = P0[j] + M0;
    P1[j + 1] = P1[j] + t[j] * M0 + M1;
  }

  auto D_of = [&](double s) {
    // Fit-side integral of (s - x)_+ exp(phi): full segments left of s via
    // the prefixes, plus the partial segment up to s.
    double acc = 0.0;
    if (s >= t.back()) {
      acc = s * P0[m - 1] - P1[m - 1];  // s times mass minus first moment
    } else if (s > t.front()) {
      const std::size_t j = std::min(
          static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin() - 1),
          m - 2);
      const double dl = s - t[j];
      const GVals gv = g_of(fit.phi.evaluate(s) - v[j]);
      acc = (s * P0[j] - P1[j]) + dl * dl * std::exp(v[j]) * (gv.g - gv.g1);
    }
    // Data side: sum of p_i (s - x_i)_+.
    double dat = 0.0;
    for (std::size_t i = 0; i < ws.x.size() && ws.x[i] < s; ++i) dat += ws.p[i] * (s - ws.x[i]);
    return acc - dat;
  };

  LogConcaveCharacterizationReport rep;
  rep.tolerance = tau;
  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (double s : grid) rep.max_gap = std::max(rep.max_gap, D_of(s));
  rep.max_kink_residual = 0.0;
  for (double kx : fit.phi.kinks())
    rep.max_kink_residual = std::max(rep.max_kink_residual, std::fabs(D_of(kx)));
  rep.pass = rep.max_gap <= tau && rep.max_kink_residual <= tau;
  return rep;
}

}  // namespace lne
