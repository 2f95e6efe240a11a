#include "lne/truth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lne/rng.hpp"
#include "format_util.hpp"

namespace lne {

namespace {

// Splits "name" or "name(a,b,...)" into the name and parsed arguments.
std::pair<std::string, std::vector<double>> split_spec(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos) return {text, {}};
  if (text.empty() || text.back() != ')')
    throw std::invalid_argument("malformed truth spec: " + text);
  std::string name = text.substr(0, open);
  std::vector<double> args;
  std::size_t pos = open + 1;
  const std::size_t end = text.size() - 1;
  while (pos < end) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos || comma > end) comma = end;
    const std::string token = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      args.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number '" + token + "' in truth spec: " + text);
    }
    pos = comma + 1;
  }
  return {name, args};
}

}  // namespace

ConvexTruth::ConvexTruth(Family family, double a, double b, double c)
    : family_(family), a_(a), b_(b), c_(c) {}

ConvexTruth ConvexTruth::quadratic(double curvature, double center) {
  if (!(curvature > 0.0) || !std::isfinite(curvature) || !std::isfinite(center))
    throw std::invalid_argument("quadratic truth needs finite parameters with c > 0");
  return ConvexTruth(Family::quadratic, curvature, center, 0.0);
}

ConvexTruth ConvexTruth::circle(double radius, double center, double height) {
  if (!(radius > 0.0) || !std::isfinite(radius) || !std::isfinite(center) ||
      !std::isfinite(height))
    throw std::invalid_argument("circle truth needs finite parameters with r > 0");
  return ConvexTruth(Family::circle, radius, center, height);
}

ConvexTruth ConvexTruth::rational() { return ConvexTruth(Family::rational, 0, 0, 0); }

ConvexTruth ConvexTruth::parse(const std::string& text) {
  const auto [name, args] = split_spec(text);
  if (name == "quadratic") {
    if (args.size() != 2)
      throw std::invalid_argument("quadratic takes 2 parameters: " + text);
    return quadratic(args[0], args[1]);
  }
  if (name == "circle") {
    if (args.empty()) return circle(20.0, 0.5, 20.0);
    if (args.size() != 3) throw std::invalid_argument("circle takes 3 parameters: " + text);
    return circle(args[0], args[1], args[2]);
  }
  if (name == "rational") {
    if (!args.empty()) throw std::invalid_argument("rational takes no parameters: " + text);
    return rational();
  }
  throw std::invalid_argument("unknown truth family: " + text);
}

double ConvexTruth::operator()(double x) const {
  switch (family_) {
    case Family::quadratic:
      return a_ * (x - b_) * (x - b_);
    case Family::circle: {
      const double u = x - b_;
      return c_ - a_ * std::sqrt(1.0 - u * u);
    }
    case Family::rational:
      return x + 2.0 / (x + 1.0);
  }
  return 0.0;
}

double ConvexTruth::derivative(double x) const {
  switch (family_) {
    case Family::quadratic:
      return 2.0 * a_ * (x - b_);
    case Family::circle: {
      const double u = x - b_;
      return a_ * u / std::sqrt(1.0 - u * u);
    }
    case Family::rational: {
      const double s = x + 1.0;
      return 1.0 - 2.0 / (s * s);
    }
  }
  return 0.0;
}

double ConvexTruth::second_derivative(double x) const {
  switch (family_) {
    case Family::quadratic:
      return 2.0 * a_;
    case Family::circle: {
      const double u = x - b_;
      const double w = 1.0 - u * u;
      return a_ / (w * std::sqrt(w));
    }
    case Family::rational: {
      const double s = x + 1.0;
      return 4.0 / (s * s * s);
    }
  }
  return 0.0;
}

double ConvexTruth::minimizer(double lo, double hi) const {
  double unconstrained = 0.0;
  switch (family_) {
    case Family::quadratic:
    case Family::circle:
      unconstrained = b_;
      break;
    case Family::rational:
      // 1 - 2/(x+1)^2 = 0  =>  x = sqrt(2) - 1.
      unconstrained = std::sqrt(2.0) - 1.0;
      break;
  }
  return std::clamp(unconstrained, lo, hi);
}

std::string ConvexTruth::spec() const {
  switch (family_) {
    case Family::quadratic:
      return "quadratic(" + detail::format_double(a_) + "," + detail::format_double(b_) + ")";
    case Family::circle:
      return "circle(" + detail::format_double(a_) + "," + detail::format_double(b_) + "," +
             detail::format_double(c_) + ")";
    case Family::rational:
      return "rational";
  }
  return {};
}

DensityTruth DensityTruth::beta23() { return DensityTruth(Family::beta23); }
DensityTruth DensityTruth::triangular() { return DensityTruth(Family::triangular); }
DensityTruth DensityTruth::standard_normal() { return DensityTruth(Family::normal); }

DensityTruth DensityTruth::parse(const std::string& text) {
  if (text == "beta23") return beta23();
  if (text == "triangular") return triangular();
  if (text == "normal") return standard_normal();
  throw std::invalid_argument("unknown density family: " + text);
}

double DensityTruth::pdf(double x) const {
  switch (family_) {
    case Family::beta23:
      if (x < 0.0 || x > 1.0) return 0.0;
      return 12.0 * x * (1.0 - x) * (1.0 - x);
    case Family::triangular:
      if (x < 0.0 || x > 1.0) return 0.0;
      return 2.0 * (1.0 - x);
    case Family::normal:
      return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  }
  return 0.0;
}

double DensityTruth::pdf_derivative(double x) const {
  switch (family_) {
    case Family::beta23:
      if (x < 0.0 || x > 1.0) return 0.0;
      return 12.0 * (1.0 - x) * (1.0 - 3.0 * x);
    case Family::triangular:
      return (x < 0.0 || x > 1.0) ? 0.0 : -2.0;
    case Family::normal:
      return -x * pdf(x);
  }
  return 0.0;
}

double DensityTruth::pdf_second_derivative(double x) const {
  switch (family_) {
    case Family::beta23:
      if (x < 0.0 || x > 1.0) return 0.0;
      return 12.0 * (6.0 * x - 4.0);
    case Family::triangular:
      return 0.0;
    case Family::normal:
      return (x * x - 1.0) * pdf(x);
  }
  return 0.0;
}

double DensityTruth::log_pdf_second_derivative(double x) const {
  switch (family_) {
    case Family::beta23: {
      if (x <= 0.0 || x >= 1.0)
        throw std::invalid_argument("log-density curvature needs x inside (0, 1)");
      const double om = 1.0 - x;
      return -1.0 / (x * x) - 2.0 / (om * om);
    }
    case Family::triangular: {
      if (x >= 1.0) throw std::invalid_argument("log-density curvature needs x < 1");
      const double om = 1.0 - x;
      return -1.0 / (om * om);
    }
    case Family::normal:
      return -1.0;
  }
  return 0.0;
}

double DensityTruth::mode() const {
  switch (family_) {
    case Family::beta23:
      return 1.0 / 3.0;
    case Family::triangular:
      return 0.0;
    case Family::normal:
      return 0.0;
  }
  return 0.0;
}

double DensityTruth::quantile(double u) const {
  if (!(u > 0.0) || !(u < 1.0))
    throw std::invalid_argument("quantile needs u strictly inside (0, 1)");
  switch (family_) {
    case Family::beta23: {
      // CDF F(x) = 6 x^2 - 8 x^3 + 3 x^4 is strictly increasing on [0, 1];
      // invert by bisection to full double precision.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = mid * mid * (6.0 + mid * (-8.0 + 3.0 * mid));
        (cdf < u ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    case Family::triangular:
      // CDF F(x) = 1 - (1 - x)^2.
      return 1.0 - std::sqrt(1.0 - u);
    case Family::normal:
      return rng::standard_normal_quantile(u);
  }
  return 0.0;
}

std::string DensityTruth::spec() const {
  switch (family_) {
    case Family::beta23:
      return "beta23";
    case Family::triangular:
      return "triangular";
    case Family::normal:
      return "normal";
  }
  return {};
}

}  // namespace lne
