#include <cmath>
#include <stdexcept>

#include "lne/density_estimators.hpp"
#include "weighted_sample.hpp"

namespace lne {

void SampleData::validate(bool require_nonnegative) const {
  if (obs.size() < 2) throw std::invalid_argument("SampleData: need at least 2 observations");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!std::isfinite(obs[i])) throw std::invalid_argument("SampleData: non-finite observation");
    if (i > 0 && obs[i] < obs[i - 1])
      throw std::invalid_argument("SampleData: observations must be sorted ascending");
    if (require_nonnegative && obs[i] < 0.0)
      throw std::invalid_argument("SampleData: negative observation");
  }
  if (obs.front() == obs.back())
    throw std::invalid_argument("SampleData: all observations are equal (degenerate sample)");
}

namespace detail {

WeightedSample collapse_ties(const SampleData& data) {
  WeightedSample ws;
  const double unit = 1.0 / static_cast<double>(data.n());
  for (double v : data.obs) {
    if (!ws.x.empty() && v == ws.x.back()) {
      ws.p.back() += unit;
    } else {
      ws.x.push_back(v);
      ws.p.push_back(unit);
    }
  }
  return ws;
}

}  // namespace detail

}  // namespace lne
