#pragma once

#include <cstddef>
#include <vector>

#include "lne/piecewise_linear.hpp"

namespace lne {

/// I.i.d. sample, sorted ascending. Duplicate observations are allowed and
/// collapse to weighted points inside the fitters.
struct SampleData {
  std::vector<double> obs;

  std::size_t n() const { return obs.size(); }

  /// Throws std::invalid_argument unless: n >= 2, all entries finite and
  /// sorted ascending, at least two distinct values, and (when requested)
  /// all entries nonnegative.
  void validate(bool require_nonnegative = false) const;
};

// ---------------------------------------------------------------------------
// Log-concave maximum likelihood
// ---------------------------------------------------------------------------

struct LogConcaveOptions {
  /// Newton stops when the max-norm of the knot-value gradient of the
  /// criterion falls below this (the criterion is scale-free in the data).
  double newton_tolerance = 1e-11;
  /// A knot is added while the add-direction derivative exceeds
  /// add_tolerance_scale * max(1, observation range).
  double add_tolerance_scale = 1e-9;
  /// Cap on outer (knot addition) iterations; 0 picks 10*n + 100.
  std::size_t max_iterations = 0;
};

/// Maximum likelihood fit over log-concave densities: the log-density is
/// concave and piecewise linear with knots at observations, supported exactly
/// on [min obs, max obs].
struct LogConcaveFit {
  PiecewiseLinearFunction phi;  ///< concave log-density over the support

  /// exp(phi(t)) inside the support, 0 outside.
  double density(double t) const;
};

/// Maximizes (1/n) sum_i phi(X_i) - integral of exp(phi) over concave phi.
/// Throws SolverError on non-convergence, std::invalid_argument on bad data.
LogConcaveFit fit_log_concave_mle(const SampleData& data, const LogConcaveOptions& opts = {});

/// The criterion above for an arbitrary candidate log-density; candidates
/// must cover every observation. Used by tests and by optimality checks.
double log_concave_criterion(const PiecewiseLinearFunction& phi, const SampleData& data);

/// Optimality certificate for the log-concave MLE. With
/// D(s) = integral of (s - x)_+ fhat(x) dx - (1/n) sum_i (s - X_i)_+,
/// the fit is the MLE iff D <= 0 everywhere with equality at kinks of phi.
struct LogConcaveCharacterizationReport {
  double max_gap = 0.0;            ///< max of D over the evaluation grid (want <= tolerance)
  double max_kink_residual = 0.0;  ///< max |D| over kinks (want <= tolerance)
  double tolerance = 0.0;
  bool pass = false;
};

/// Evaluates the certificate on a grid that refines each observation gap
/// `refine`-fold. Pass tau < 0 to use 1e-8 * max(1, observation range).
LogConcaveCharacterizationReport check_logconcave_characterization(const LogConcaveFit& fit,
                                                                   const SampleData& data,
                                                                   double tau = -1.0,
                                                                   std::size_t refine = 8);

// ---------------------------------------------------------------------------
// Convex nonincreasing density least squares
// ---------------------------------------------------------------------------

struct ConvexDensityOptions {
  /// Termination: no knot improves the criterion at rate better than
  /// -tolerance_scale * max(1, largest observation).
  double tolerance_scale = 1e-10;
  /// Accept convergence only once the fitted mass is within this of 1.
  double mass_tolerance = 1e-7;
  /// Cap on outer (knot addition) iterations.
  std::size_t max_iterations = 400;
  /// Cap on knot-sliding polish sweeps between additions.
  std::size_t slide_sweeps = 50;
  /// When nonempty, knots are restricted to these locations (ascending,
  /// positive) and no sliding happens. Intended for oracle comparisons.
  std::vector<double> candidate_grid;
};

/// Least-squares fit of a convex nonincreasing density on [0, inf): minimizes
/// (1/2) integral of f^2 - (1/n) sum_i f(X_i) over f(x) = sum_j w_j (k_j - x)_+
/// with w_j >= 0 and free knot locations k_j > 0. The returned function spans
/// [0, last knot], is nonnegative and nonincreasing, and integrates to 1
/// within mass_tolerance. Throws SolverError on non-convergence.
PiecewiseLinearFunction fit_convex_density_lse(const SampleData& data,
                                               const ConvexDensityOptions& opts = {});

/// Optimality certificate for the convex-density LSE. With
/// d(k) = integral of (k - x)_+ fhat(x) dx - (1/n) sum_i (k - X_i)_+,
/// the fit is optimal iff d >= 0 for every k > 0 and d = 0 at the knots
/// carrying weight.
struct ConvexDensityCharacterizationReport {
  double min_slack = 0.0;          ///< min of d over the evaluation grid (want >= -tolerance)
  double max_knot_residual = 0.0;  ///< max |d| over weighted knots (want <= tolerance)
  double tolerance = 0.0;
  bool pass = false;
};

/// Evaluates the certificate on observations, fit knots, gap midpoints, and
/// an extension beyond the support. Pass tau < 0 to use
/// 1e-8 * max(1, largest observation).
ConvexDensityCharacterizationReport check_convex_density_characterization(
    const PiecewiseLinearFunction& fit, const SampleData& data, double tau = -1.0);

}  // namespace lne
