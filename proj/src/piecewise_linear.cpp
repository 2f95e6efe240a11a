#include "lne/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lne {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

PiecewiseLinearFunction::PiecewiseLinearFunction(std::vector<double> knots,
                                                std::vector<double> values, Shape shape,
                                                double slope_tolerance)
    : knots_(std::move(knots)), values_(std::move(values)), shape_(shape) {
  if (knots_.size() < 2) fail("PiecewiseLinearFunction: need at least 2 knots");
  if (knots_.size() != values_.size())
    fail("PiecewiseLinearFunction: knots and values differ in length");
  double max_abs_slope = 0.0;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i]))
      fail("PiecewiseLinearFunction: non-finite knot or value");
    if (i > 0) {
      if (!(knots_[i] > knots_[i - 1]))
        fail("PiecewiseLinearFunction: knots must be strictly increasing");
      max_abs_slope = std::max(max_abs_slope, std::fabs(segment_slope(i - 1)));
    }
  }
  const double tol = slope_tolerance * (1.0 + max_abs_slope);
  for (std::size_t seg = 1; seg + 1 < knots_.size(); ++seg) {
    const double change = segment_slope(seg) - segment_slope(seg - 1);
    const bool ok = (shape_ == Shape::convex) ? (change >= -tol) : (change <= tol);
    if (!ok) {
      std::ostringstream os;
      os << "PiecewiseLinearFunction: slope change " << change << " at knot " << knots_[seg]
         << " violates " << (shape_ == Shape::convex ? "convexity" : "concavity");
      fail(os.str());
    }
  }
}

double PiecewiseLinearFunction::segment_slope(std::size_t seg) const {
  return (values_[seg + 1] - values_[seg]) / (knots_[seg + 1] - knots_[seg]);
}

std::size_t PiecewiseLinearFunction::segment_index(double x) const {
  // Index of the segment [knots_[i], knots_[i+1]] containing x; x at a knot
  // belongs to the segment starting there (except the last knot).
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - knots_.begin());
  if (idx == 0) return 0;
  if (idx >= knots_.size()) return knots_.size() - 2;
  return idx - 1;
}

double PiecewiseLinearFunction::evaluate(double x) const {
  if (!(x >= knots_.front() && x <= knots_.back())) {
    std::ostringstream os;
    os << "evaluate: x=" << x << " outside knot range [" << knots_.front() << ", "
       << knots_.back() << "]";
    throw std::domain_error(os.str());
  }
  const std::size_t seg = segment_index(x);
  const double w = (x - knots_[seg]) / (knots_[seg + 1] - knots_[seg]);
  return (1.0 - w) * values_[seg] + w * values_[seg + 1];
}

double PiecewiseLinearFunction::one_sided_derivative(double x, Side side) const {
  if (!(x >= knots_.front() && x <= knots_.back()))
    throw std::domain_error("one_sided_derivative: x outside knot range");
  if (side == Side::left) {
    if (x <= knots_.front())
      throw std::domain_error("one_sided_derivative: no left derivative at the leftmost knot");
    // Segment whose interior or right endpoint is x.
    auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
    std::size_t idx = static_cast<std::size_t>(it - knots_.begin());
    if (idx < knots_.size() && knots_[idx] == x) {
      return segment_slope(idx - 1);
    }
    return segment_slope(segment_index(x));
  }
  if (x >= knots_.back())
    throw std::domain_error("one_sided_derivative: no right derivative at the rightmost knot");
  return segment_slope(segment_index(x));
}

double PiecewiseLinearFunction::default_kink_tolerance() const {
  double max_abs_slope = 0.0;
  for (std::size_t seg = 0; seg + 1 < knots_.size(); ++seg)
    max_abs_slope = std::max(max_abs_slope, std::fabs(segment_slope(seg)));
  return 1e-8 * (max_abs_slope + 1.0);
}

std::vector<double> PiecewiseLinearFunction::kinks(double tau_kink) const {
  if (tau_kink < 0.0) tau_kink = default_kink_tolerance();
  std::vector<double> out;
  out.push_back(knots_.front());
  for (std::size_t seg = 1; seg + 1 < knots_.size(); ++seg) {
    if (std::fabs(segment_slope(seg) - segment_slope(seg - 1)) > tau_kink)
      out.push_back(knots_[seg]);
  }
  out.push_back(knots_.back());
  return out;
}

LinearPiece PiecewiseLinearFunction::linear_piece_containing(double x0, double tau_kink) const {
  if (!(x0 >= knots_.front() && x0 <= knots_.back())) {
    std::ostringstream os;
    os << "linear_piece_containing: x0=" << x0 << " outside knot range [" << knots_.front()
       << ", " << knots_.back() << "]";
    throw std::domain_error(os.str());
  }
  const std::vector<double> kk = kinks(tau_kink);
  // kk has >= 2 entries; locate the piece [kk[j], kk[j+1]] containing x0.
  auto it = std::upper_bound(kk.begin(), kk.end(), x0);
  std::size_t j = static_cast<std::size_t>(it - kk.begin());
  std::size_t piece;
  if (j == 0) {
    piece = 0;  // x0 == kk.front()
  } else if (j >= kk.size()) {
    piece = kk.size() - 2;  // x0 == kk.back()
  } else if (kk[j - 1] == x0 && j >= 2) {
    // x0 sits exactly on an interior kink: pick the longer adjacent piece,
    // the right one on an exact tie.
    const double left_len = kk[j - 1] - kk[j - 2];
    const double right_len = kk[j] - kk[j - 1];
    piece = (right_len >= left_len) ? (j - 1) : (j - 2);
  } else {
    piece = j - 1;
  }
  LinearPiece p;
  p.u_hat = kk[piece];
  p.v_hat = kk[piece + 1];
  const double fu = evaluate(p.u_hat);
  const double fv = evaluate(p.v_hat);
  p.slope = (fv - fu) / (p.v_hat - p.u_hat);
  p.intercept = fu - p.slope * p.u_hat;
  return p;
}

bool PiecewiseLinearFunction::has_kink_at(double x0, double tau_kink) const {
  const std::vector<double> kk = kinks(tau_kink);
  for (std::size_t i = 1; i + 1 < kk.size(); ++i)
    if (kk[i] == x0) return true;
  return false;
}

double PiecewiseLinearFunction::anti_mode() const {
  // Piecewise-linear extrema are attained at knots; scan for the smallest
  // minimizer (convex) or smallest maximizer (concave).
  std::size_t best = 0;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    const bool better =
        (shape_ == Shape::convex) ? (values_[i] < values_[best]) : (values_[i] > values_[best]);
    if (better) best = i;
  }
  return knots_[best];
}

ModeBracket PiecewiseLinearFunction::mode_bracket(double tau_kink) const {
  ModeBracket b;
  b.m_hat = anti_mode();
  b.u_m = b.m_hat;
  b.v_m = b.m_hat;
  for (double k : kinks(tau_kink)) {
    if (k < b.m_hat) b.u_m = k;                      // last kink strictly left
    if (k > b.m_hat && b.v_m == b.m_hat) b.v_m = k;  // first kink strictly right
  }
  return b;
}

}  // namespace lne
