#pragma once

#include <vector>

#include "lne/density_estimators.hpp"

namespace lne::detail {

/// Sample with ties collapsed: x strictly increasing, p the empirical masses
/// (multiplicity / n), summing to 1.
struct WeightedSample {
  std::vector<double> x;
  std::vector<double> p;
};

WeightedSample collapse_ties(const SampleData& data);

}  // namespace lne::detail
