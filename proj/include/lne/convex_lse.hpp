#pragma once

#include <cstddef>
#include <vector>

#include "lne/piecewise_linear.hpp"

namespace lne {

/// Univariate regression sample with a strictly increasing design.
struct RegressionData {
  std::vector<double> x;  ///< design points, strictly increasing
  std::vector<double> y;  ///< responses

  std::size_t n() const { return x.size(); }

  /// Throws std::invalid_argument when the invariants fail: sizes match,
  /// n >= 2, x strictly increasing, all entries finite.
  void validate() const;
};

struct LseOptions {
  /// Termination tolerance as a multiple of scale(y) = max(1, max|y|): the
  /// solver stops when no candidate knot improves the objective at rate
  /// better than -tolerance_scale * scale(y).
  double tolerance_scale = 1e-10;
  /// Cap on outer iterations; 0 picks 10*n + 100.
  std::size_t max_iterations = 0;
};

/// Least-squares fit of a convex function to (x, y): minimizes
/// sum_i (f(x_i) - y_i)^2 over convex f. The minimizing fitted values are
/// unique and piecewise linear interpolation between design points attains
/// them, so the result stores every design point as a knot (kinks() filters
/// the collinear ones). Throws SolverError on non-convergence.
PiecewiseLinearFunction fit_convex_lse(const RegressionData& data, const LseOptions& opts = {});

/// Optimality certificate for a convex least-squares fit.
///
/// With residuals r_i = f(x_i) - y_i, define the cumulative residual process
/// D(t) = (1/n) sum_i r_i (t - x_i)_+. The fit is the LSE if and only if
/// D >= 0 everywhere (equivalently on the design grid, since D is affine
/// beyond it) and D = 0 at every kink of f.
struct CharacterizationReport {
  double min_slack = 0.0;          ///< min over the design grid of D (want >= -tolerance)
  double max_kink_residual = 0.0;  ///< max over kinks of |D| (want <= tolerance)
  double tolerance = 0.0;          ///< threshold the flags were computed with
  bool pass = false;
};

/// Evaluates the certificate above for a candidate fit whose knots are the
/// design points of `data`. Pass tau_char < 0 to use 1e-10 * max(1, max|y|).
/// Throws std::invalid_argument when the knots and design grid differ.
CharacterizationReport check_lse_characterization(const PiecewiseLinearFunction& f,
                                                  const RegressionData& data,
                                                  double tau_char = -1.0);

}  // namespace lne
