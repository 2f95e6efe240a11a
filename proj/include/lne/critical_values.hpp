#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lne {

/// Statistics a critical-value table can hold: the signed locally normalized
/// errors (L0: function value, L1: derivative, M: anti-mode), their absolute
/// values, and the absolute curvature-rescaled errors whose laws drive the
/// oracle intervals (H2: value, H3: derivative, H2mode: anti-mode location).
enum class Statistic : int {
  L0,
  L1,
  M,
  absL0,
  absL1,
  absM,
  absH2,
  absH3,
  absH2mode,
};

inline constexpr std::array<Statistic, 9> kAllStatistics = {
    Statistic::L0,    Statistic::L1,    Statistic::M,
    Statistic::absL0, Statistic::absL1, Statistic::absM,
    Statistic::absH2, Statistic::absH3, Statistic::absH2mode,
};

std::string_view to_string(Statistic s);
/// Throws std::invalid_argument on an unknown name.
Statistic statistic_from_string(std::string_view name);

struct TableMeta {
  std::uint64_t replications = 0;  ///< B, the Monte Carlo sample size
  std::uint64_t n = 0;             ///< per-replication sample size
  std::string f0;                  ///< truth the table was simulated under
  std::uint64_t seed = 0;
};

/// Critical values c_delta defined by P(T > c_delta) = delta.
///
/// Each statistic is stored either as a sorted Monte Carlo sample, where
/// quantile() evaluates the left-continuous empirical quantile
/// sorted[ceil((1 - delta) B) - 1], or as a (delta, value) grid, where
/// quantile() returns the tabulated value at a matching delta, interpolates
/// linearly between neighboring grid deltas, and refuses delta outside the
/// grid range. Either way quantile() is nonincreasing in delta.
class CriticalValueTable {
 public:
  TableMeta meta;

  /// Sorts and stores a Monte Carlo sample (nonempty, all finite).
  void set_samples(Statistic s, std::vector<double> samples);
  /// Stores a quantile grid: deltas strictly increasing in (0, 1), values
  /// finite and nonincreasing.
  void set_quantile_grid(Statistic s, std::vector<std::pair<double, double>> grid);

  bool contains(Statistic s) const;
  bool has_samples(Statistic s) const;
  /// Throws std::invalid_argument when delta is outside (0, 1) and
  /// std::out_of_range when the statistic is missing or delta falls outside a
  /// grid's tabulated range.
  double quantile(Statistic s, double delta) const;
  /// Sorted sample access; throws std::out_of_range when the statistic is
  /// missing or grid-backed.
  const std::vector<double>& samples(Statistic s) const;

  /// Serializes sample-backed tables as {statistic: [sorted floats...],
  /// "meta": {...}} with exact round-trip of every double. Grid-backed
  /// entries are not representable; throws std::logic_error if any exist.
  nlohmann::json to_json() const;
  static CriticalValueTable from_json(const nlohmann::json& j);

  /// The published critical values shipped with the library, stored as
  /// quantile grids over delta in [0.01, 0.5] (absolute statistics) and
  /// [0.01, 0.99] (signed statistics).
  static const CriticalValueTable& builtin();

 private:
  struct Entry {
    std::vector<double> samples;                     // sorted when used
    std::vector<std::pair<double, double>> grid;     // (delta, value), delta ascending
    bool is_grid = false;
  };
  std::map<Statistic, Entry> entries_;
};

}  // namespace lne
