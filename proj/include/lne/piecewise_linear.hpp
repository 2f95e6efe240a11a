#pragma once

#include <cstddef>
#include <vector>

namespace lne {

enum class Shape { convex, concave };
enum class Side { left, right };

/// One maximal linear piece [u_hat, v_hat] of a piecewise-linear fit, carrying
/// its slope and intercept (piece(x) = intercept + slope * x).
struct LinearPiece {
  double u_hat = 0.0;
  double v_hat = 0.0;
  double slope = 0.0;
  double intercept = 0.0;

  double width() const { return v_hat - u_hat; }
  double at(double x) const { return intercept + slope * x; }
};

/// Anti-mode (or mode) location together with the nearest kinks strictly to
/// its left and right; a missing side collapses onto m_hat.
struct ModeBracket {
  double m_hat = 0.0;
  double u_m = 0.0;
  double v_m = 0.0;

  double width() const { return v_m - u_m; }
};

/// Piecewise-linear function stored as knots plus values, linearly
/// interpolated between knots and undefined outside the knot range. The shape
/// flag asserts convexity (slopes nondecreasing) or concavity (nonincreasing)
/// up to the tolerance passed at construction.
class PiecewiseLinearFunction {
 public:
  PiecewiseLinearFunction(std::vector<double> knots, std::vector<double> values, Shape shape,
                          double slope_tolerance = 1e-9);

  double evaluate(double x) const;
  double operator()(double x) const { return evaluate(x); }

  /// Slope of the linear piece adjacent to x on the requested side. Both
  /// sides agree unless x is a knot with a slope change. Errors when the
  /// requested side does not exist (outward side at a boundary knot).
  double one_sided_derivative(double x, Side side) const;

  /// Locations where the slope changes by more than tau_kink, plus the two
  /// boundary knots. Passing a negative tolerance selects the default
  /// 1e-8 * (max |slope| + 1).
  std::vector<double> kinks(double tau_kink = -1.0) const;

  /// Maximal interval between consecutive kinks that contains x0. When x0 is
  /// itself an interior kink the longer adjacent piece wins, the right piece
  /// on an exact tie. x0 must lie inside the knot range.
  LinearPiece linear_piece_containing(double x0, double tau_kink = -1.0) const;

  /// Smallest minimizer over the knot range for convex fits; smallest
  /// maximizer for concave fits. A flat extremal piece yields its left
  /// endpoint.
  double anti_mode() const;

  /// True when x0 coincides exactly with an interior kink location. Callers
  /// that report slopes at x0 use this to flag the ambiguous case.
  bool has_kink_at(double x0, double tau_kink = -1.0) const;

  /// anti_mode() plus the nearest kinks strictly left and right of it; a
  /// missing side collapses to the anti-mode itself.
  ModeBracket mode_bracket(double tau_kink = -1.0) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return knots_.size(); }
  double min_knot() const { return knots_.front(); }
  double max_knot() const { return knots_.back(); }

  double default_kink_tolerance() const;

 private:
  std::size_t segment_index(double x) const;
  double segment_slope(std::size_t seg) const;

  std::vector<double> knots_;
  std::vector<double> values_;
  Shape shape_;
};

}  // namespace lne
