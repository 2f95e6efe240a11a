#pragma once

#include <string>

namespace lne {

/// Smooth convex mean functions on [0, 1] used as simulation truths.
///
/// Families and their spec strings (parse() and spec() round-trip):
///   quadratic(c,m)   c (x - m)^2 with c > 0
///   circle(r,m,h)    h - r sqrt(1 - (x - m)^2) with r > 0
///   rational         x + 2 / (x + 1)
class ConvexTruth {
 public:
  static ConvexTruth quadratic(double curvature, double center);
  static ConvexTruth circle(double radius, double center, double height);
  static ConvexTruth rational();
  /// Accepts "name" or "name(arg,...)"; throws std::invalid_argument on an
  /// unknown family, wrong arity, or parameters outside the family's domain.
  static ConvexTruth parse(const std::string& text);

  double operator()(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  /// Minimizer of the function restricted to [lo, hi] (its anti-mode there).
  double minimizer(double lo = 0.0, double hi = 1.0) const;
  std::string spec() const;

 private:
  enum class Family { quadratic, circle, rational };
  ConvexTruth(Family family, double a, double b, double c);
  Family family_;
  double a_, b_, c_;
};

/// Sampling distributions for the density-estimation experiments.
///
/// Families and their spec strings:
///   beta23       density 12 x (1 - x)^2 on [0, 1] (log-concave, mode 1/3)
///   triangular   density 2 (1 - x) on [0, 1] (convex nonincreasing)
///   normal       standard normal (log-concave, mode 0)
class DensityTruth {
 public:
  static DensityTruth beta23();
  static DensityTruth triangular();
  static DensityTruth standard_normal();
  static DensityTruth parse(const std::string& text);

  double pdf(double x) const;
  double pdf_derivative(double x) const;
  double pdf_second_derivative(double x) const;
  /// Second derivative of log(pdf), defined inside the support.
  double log_pdf_second_derivative(double x) const;
  double mode() const;
  /// Inverse CDF for u in (0, 1); throws std::invalid_argument outside.
  double quantile(double u) const;
  std::string spec() const;

 private:
  enum class Family { beta23, triangular, normal };
  explicit DensityTruth(Family family) : family_(family) {}
  Family family_;
};

}  // namespace lne
