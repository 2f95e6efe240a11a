#include "lne/critical_values.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lne {

namespace {

constexpr std::array<std::string_view, 9> kStatisticNames = {
    "L0", "L1", "M", "absL0", "absL1", "absM", "absH2", "absH3", "absH2mode"};

}  // namespace

std::string_view to_string(Statistic s) {
  return kStatisticNames[static_cast<std::size_t>(s)];
}

Statistic statistic_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kStatisticNames.size(); ++i)
    if (kStatisticNames[i] == name) return static_cast<Statistic>(i);
  throw std::invalid_argument("unknown statistic: " + std::string(name));
}

void CriticalValueTable::set_samples(Statistic s, std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample for critical-value table");
  for (double v : samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("non-finite sample for critical-value table");
  std::sort(samples.begin(), samples.end());
  entries_[s] = Entry{std::move(samples), {}, false};
}

void CriticalValueTable::set_quantile_grid(Statistic s,
                                           std::vector<std::pair<double, double>> grid) {
  if (grid.empty()) throw std::invalid_argument("empty quantile grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i].first > 0.0) || !(grid[i].first < 1.0) || !std::isfinite(grid[i].second))
      throw std::invalid_argument("quantile grid entries need delta in (0,1) and finite values");
    if (i > 0 && !(grid[i].first > grid[i - 1].first))
      throw std::invalid_argument("quantile grid deltas must be strictly increasing");
    if (i > 0 && grid[i].second > grid[i - 1].second)
      throw std::invalid_argument("quantile grid values must be nonincreasing in delta");
  }
  entries_[s] = Entry{{}, std::move(grid), true};
}

bool CriticalValueTable::contains(Statistic s) const { return entries_.count(s) > 0; }

bool CriticalValueTable::has_samples(Statistic s) const {
  auto it = entries_.find(s);
  return it != entries_.end() && !it->second.is_grid;
}

double CriticalValueTable::quantile(Statistic s, double delta) const {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("quantile needs delta strictly inside (0, 1)");
  auto it = entries_.find(s);
  if (it == entries_.end())
    throw std::out_of_range("table does not contain statistic " + std::string(to_string(s)));
  const Entry& e = it->second;
  if (e.is_grid) {
    const auto& g = e.grid;
    // Exact grid hits first (up to rounding noise in delta itself).
    for (const auto& [d, v] : g)
      if (std::fabs(d - delta) <= 1e-12) return v;
    if (delta < g.front().first || delta > g.back().first)
      throw std::out_of_range("delta outside the tabulated range of statistic " +
                              std::string(to_string(s)));
    auto hi = std::lower_bound(g.begin(), g.end(), delta,
                               [](const auto& p, double d) { return p.first < d; });
    const auto lo = hi - 1;
    const double t = (delta - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  }
  // Left-continuous empirical quantile at level 1 - delta.  The small slack
  // keeps ceil() honest when (1 - delta) * B sits a rounding error above an
  // integer (e.g. 0.95 * 100).
  const double b = static_cast<double>(e.samples.size());
  const double t = (1.0 - delta) * b;
  double rank = std::ceil(t - 1e-9 * std::max(1.0, t));
  rank = std::clamp(rank, 1.0, b);
  return e.samples[static_cast<std::size_t>(rank) - 1];
}

const std::vector<double>& CriticalValueTable::samples(Statistic s) const {
  auto it = entries_.find(s);
  if (it == entries_.end())
    throw std::out_of_range("table does not contain statistic " + std::string(to_string(s)));
  if (it->second.is_grid)
    throw std::out_of_range("statistic " + std::string(to_string(s)) +
                            " is grid-backed and has no stored samples");
  return it->second.samples;
}

nlohmann::json CriticalValueTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [s, e] : entries_) {
    if (e.is_grid)
      throw std::logic_error("grid-backed tables are not serializable; only Monte Carlo "
                             "sample tables round-trip through JSON");
    j[std::string(to_string(s))] = e.samples;
  }
  j["meta"] = {{"B", meta.replications},
               {"n", meta.n},
               {"f0", meta.f0},
               {"seed", meta.seed}};
  return j;
}

CriticalValueTable CriticalValueTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("critical-value table JSON must be an object");
  if (!j.contains("meta") || !j["meta"].is_object())
    throw std::invalid_argument("critical-value table JSON needs a meta object");
  const auto& m = j["meta"];
  for (const char* key : {"B", "n", "f0", "seed"})
    if (!m.contains(key))
      throw std::invalid_argument(std::string("table meta is missing key ") + key);
  CriticalValueTable table;
  table.meta.replications = m["B"].get<std::uint64_t>();
  table.meta.n = m["n"].get<std::uint64_t>();
  table.meta.f0 = m["f0"].get<std::string>();
  table.meta.seed = m["seed"].get<std::uint64_t>();
  if (table.meta.replications < 1)
    throw std::invalid_argument("table meta needs B >= 1");
  for (const auto& [key, value] : j.items()) {
    if (key == "meta") continue;
    const Statistic s = statistic_from_string(key);  // throws on unknown keys
    if (!value.is_array() || value.empty())
      throw std::invalid_argument("statistic " + key + " must map to a nonempty array");
    std::vector<double> samples = value.get<std::vector<double>>();
    if (samples.size() != table.meta.replications)
      throw std::invalid_argument("statistic " + key + " has " +
                                  std::to_string(samples.size()) +
                                  " samples but meta.B = " +
                                  std::to_string(table.meta.replications));
    if (!std::is_sorted(samples.begin(), samples.end()))
      throw std::invalid_argument("statistic " + key + " samples must be sorted ascending");
    table.set_samples(s, std::move(samples));
  }
  return table;
}

const CriticalValueTable& CriticalValueTable::builtin() {
  static const CriticalValueTable table = [] {
    CriticalValueTable t;
    t.meta.replications = 1000000;
    t.meta.n = 100000;
    t.meta.f0 = "quadratic(12,0.5)";
    t.meta.seed = 0;

    // Signed quantiles, tabulated at the published deltas.
    t.set_quantile_grid(Statistic::L0, {{0.010, 2.66},
                                        {0.025, 2.20},
                                        {0.050, 1.82},
                                        {0.100, 1.39},
                                        {0.500, 0.04},
                                        {0.900, -1.19},
                                        {0.950, -1.61},
                                        {0.975, -2.03},
                                        {0.990, -2.59}});
    t.set_quantile_grid(Statistic::L1, {{0.010, 11.91},
                                        {0.025, 9.00},
                                        {0.050, 6.77},
                                        {0.100, 4.54},
                                        {0.500, 0.00},
                                        {0.900, -4.55},
                                        {0.950, -6.78},
                                        {0.975, -9.00},
                                        {0.990, -11.87}});
    t.set_quantile_grid(Statistic::M, {{0.010, 0.86},
                                       {0.025, 0.61},
                                       {0.050, 0.47},
                                       {0.100, 0.35},
                                       {0.500, 0.00},
                                       {0.900, -0.35},
                                       {0.950, -0.48},
                                       {0.975, -0.61},
                                       {0.990, -0.86}});

    // Absolute-value quantiles used by the symmetric intervals.
    t.set_quantile_grid(Statistic::absL0, {{0.01, 2.99},
                                           {0.02, 2.63},
                                           {0.05, 2.13},
                                           {0.10, 1.73},
                                           {0.20, 1.30},
                                           {0.50, 0.65}});
    t.set_quantile_grid(Statistic::absL1, {{0.01, 14.02},
                                           {0.02, 11.89},
                                           {0.05, 9.00},
                                           {0.10, 6.78},
                                           {0.20, 4.55},
                                           {0.50, 1.73}});
    t.set_quantile_grid(Statistic::absM, {{0.01, 1.13},
                                          {0.02, 0.86},
                                          {0.05, 0.61},
                                          {0.10, 0.47},
                                          {0.20, 0.35},
                                          {0.50, 0.19}});

    // Absolute quantiles of the curvature-rescaled (oracle) laws.
    t.set_quantile_grid(Statistic::absH2, {{0.01, 3.44},
                                           {0.02, 3.08},
                                           {0.05, 2.58},
                                           {0.10, 2.16},
                                           {0.20, 1.68},
                                           {0.50, 0.89}});
    t.set_quantile_grid(Statistic::absH3, {{0.01, 13.70},
                                           {0.02, 12.72},
                                           {0.05, 11.14},
                                           {0.10, 9.66},
                                           {0.20, 7.79},
                                           {0.50, 4.28}});
    t.set_quantile_grid(Statistic::absH2mode, {{0.01, 0.57},
                                               {0.02, 0.53},
                                               {0.05, 0.46},
                                               {0.10, 0.40},
                                               {0.20, 0.32},
                                               {0.50, 0.18}});
    return t;
  }();
  return table;
}

}  // namespace lne
