#include "lne/limit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "format_util.hpp"
#include "lne/errors.hpp"
#include "lne/parallel.hpp"

namespace lne {

std::string_view to_string(DesignType d) {
  switch (d) {
    case DesignType::fixed:
      return "fixed";
    case DesignType::random:
      return "random";
  }
  throw std::logic_error("unhandled design type");
}

DesignType design_from_string(std::string_view name) {
  if (name == "fixed") return DesignType::fixed;
  if (name == "random") return DesignType::random;
  throw std::invalid_argument("unknown design '" + std::string(name) +
                              "'; expected fixed or random");
}

void SimulationConfig::validate() const {
  if (n < 10) throw std::invalid_argument("simulation needs n >= 10");
  if (replications < 1) throw std::invalid_argument("simulation needs at least 1 replication");
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw std::invalid_argument("sigma must be finite and >= 0");
  if (!(x0 > 0.0 && x0 < 1.0))
    throw std::invalid_argument("x0 must lie strictly inside (0, 1)");
}

bool SimulationConfig::x0_on_design_grid() const {
  if (design != DesignType::fixed) return true;
  const double scaled = x0 * static_cast<double>(n);
  return std::abs(scaled - std::round(scaled)) <= 1e-9 * static_cast<double>(n);
}

RegressionData simulate_regression_data(const ConvexTruth& f0, double sigma, DesignType design,
                                        std::size_t n, rng::Stream& stream) {
  RegressionData data;
  data.x.resize(n + 1);
  data.y.resize(n + 1);
  if (design == DesignType::fixed) {
    for (std::size_t i = 0; i <= n; ++i)
      data.x[i] = static_cast<double>(i) / static_cast<double>(n);
  } else {
    // Redraw on (astronomically rare) duplicate uniforms so the design stays
    // strictly increasing.
    for (std::size_t attempt = 0;; ++attempt) {
      for (std::size_t i = 0; i <= n; ++i) data.x[i] = stream.next_uniform();
      std::sort(data.x.begin(), data.x.end());
      if (std::adjacent_find(data.x.begin(), data.x.end()) == data.x.end()) break;
      if (attempt >= 100)
        throw std::runtime_error("could not draw a duplicate-free random design");
    }
  }
  for (std::size_t i = 0; i <= n; ++i) data.y[i] = f0(data.x[i]) + sigma * stream.next_normal();
  return data;
}

LNESample simulate_lne_sample(const SimulationConfig& config, std::uint64_t index) {
  rng::Stream stream(config.seed, index);
  const RegressionData data =
      simulate_regression_data(config.f0, config.sigma, config.design, config.n, stream);
  const PiecewiseLinearFunction fit = fit_convex_lse(data);

  if (config.verify_fits) {
    const CharacterizationReport cert = check_lse_characterization(fit, data);
    if (!cert.pass) {
      const double residual = std::max(std::max(0.0, -cert.min_slack), cert.max_kink_residual);
      throw SolverError("replication " + std::to_string(index) +
                            ": fit failed its optimality certificate (min slack " +
                            detail::format_double(cert.min_slack) + ", kink residual " +
                            detail::format_double(cert.max_kink_residual) + ")",
                        0, residual);
    }
  }

  const LinearPiece piece = fit.linear_piece_containing(config.x0);
  const ModeBracket bracket = fit.mode_bracket();
  const double n = static_cast<double>(config.n);
  const double w = piece.width();
  const double m0 = config.f0.minimizer();

  LNESample s;
  s.raw_value = fit.evaluate(config.x0) - config.f0(config.x0);
  s.raw_slope = piece.slope - config.f0.derivative(config.x0);
  s.raw_mode = bracket.m_hat - m0;
  s.t0 = std::sqrt(n * w) * s.raw_value;
  s.t1 = std::sqrt(n * w * w * w) * s.raw_slope;
  if (!(bracket.width() > 0.0)) {
    throw SolverError("replication " + std::to_string(index) +
                          ": mode bracket collapsed to a point",
                      0, 0.0);
  }
  s.tm = s.raw_mode / bracket.width();

  for (double v : {s.t0, s.t1, s.tm, s.raw_value, s.raw_slope, s.raw_mode}) {
    if (!std::isfinite(v)) {
      throw SolverError("replication " + std::to_string(index) +
                            ": non-finite localized statistic",
                        0, 0.0);
    }
  }
  return s;
}

namespace {

struct OracleConstants {
  double d0 = 0.0;     // (f0''(x0) / 4!)^{1/5}
  double d1 = 0.0;     // (f0''(x0) / 4!)^{3/5}
  double dm = 0.0;     // (4! / f0''(m0))^{2/5}
  double rate2 = 0.0;  // (n / sigma^2)^{2/5}
  double rate1 = 0.0;  // (n / sigma^2)^{1/5}
};

OracleConstants oracle_constants(const SimulationConfig& config) {
  if (!(config.sigma > 0.0))
    throw std::invalid_argument("oracle rescaling requires sigma > 0");
  const double fpp_x0 = config.f0.second_derivative(config.x0);
  const double fpp_m0 = config.f0.second_derivative(config.f0.minimizer());
  if (!(fpp_x0 > 0.0) || !(fpp_m0 > 0.0))
    throw std::invalid_argument(
        "oracle rescaling requires strictly positive curvature at x0 and at the minimizer");
  OracleConstants oc;
  oc.d0 = std::pow(fpp_x0 / 24.0, 0.2);
  oc.d1 = std::pow(fpp_x0 / 24.0, 0.6);
  oc.dm = std::pow(24.0 / fpp_m0, 0.4);
  const double ratio = static_cast<double>(config.n) / (config.sigma * config.sigma);
  oc.rate2 = std::pow(ratio, 0.4);
  oc.rate1 = std::pow(ratio, 0.2);
  return oc;
}

TableMeta make_meta(const SimulationConfig& config) {
  TableMeta meta;
  meta.replications = config.replications;
  meta.n = config.n;
  meta.f0 = config.f0.spec();
  meta.seed = config.seed;
  return meta;
}

SimulationTables simulate_all(const SimulationConfig& config, bool want_oracle) {
  config.validate();
  OracleConstants oc;
  if (want_oracle) oc = oracle_constants(config);  // fail fast before the run

  const std::size_t B = config.replications;
  std::vector<LNESample> samples(B);
  parallel_for(B, config.workers,
               [&](std::size_t i) { samples[i] = simulate_lne_sample(config, i); });

  std::vector<double> t0(B), t1(B), tm(B), a0(B), a1(B), am(B);
  for (std::size_t i = 0; i < B; ++i) {
    t0[i] = samples[i].t0;
    t1[i] = samples[i].t1;
    tm[i] = samples[i].tm;
    a0[i] = std::abs(samples[i].t0);
    a1[i] = std::abs(samples[i].t1);
    am[i] = std::abs(samples[i].tm);
  }

  SimulationTables tables;
  tables.pivotal.meta = make_meta(config);
  tables.pivotal.set_samples(Statistic::L0, std::move(t0));
  tables.pivotal.set_samples(Statistic::L1, std::move(t1));
  tables.pivotal.set_samples(Statistic::M, std::move(tm));
  tables.pivotal.set_samples(Statistic::absL0, std::move(a0));
  tables.pivotal.set_samples(Statistic::absL1, std::move(a1));
  tables.pivotal.set_samples(Statistic::absM, std::move(am));

  if (want_oracle) {
    std::vector<double> h2(B), h3(B), hm(B);
    for (std::size_t i = 0; i < B; ++i) {
      h2[i] = std::abs(oc.rate2 * samples[i].raw_value / oc.d0);
      h3[i] = std::abs(oc.rate1 * samples[i].raw_slope / oc.d1);
      hm[i] = std::abs(oc.rate1 * samples[i].raw_mode / oc.dm);
    }
    tables.oracle.meta = make_meta(config);
    tables.oracle.set_samples(Statistic::absH2, std::move(h2));
    tables.oracle.set_samples(Statistic::absH3, std::move(h3));
    tables.oracle.set_samples(Statistic::absH2mode, std::move(hm));
  }
  return tables;
}

}  // namespace

SimulationTables simulate_tables(const SimulationConfig& config) {
  return simulate_all(config, true);
}

CriticalValueTable simulate_pivotal_table(const SimulationConfig& config) {
  return std::move(simulate_all(config, false).pivotal);
}

CriticalValueTable simulate_oracle_table(const SimulationConfig& config) {
  return std::move(simulate_all(config, true).oracle);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double dist = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    dist = std::max(dist, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one sample is exhausted its ECDF sits at 1 and the gap to the other
  // ECDF only shrinks, so the scan above already saw the supremum.
  return dist;
}

void write_ecdf_csv(std::ostream& out, const CriticalValueTable& table) {
  out << "statistic,value,ecdf\n";
  for (Statistic s : kAllStatistics) {
    if (!table.contains(s) || !table.has_samples(s)) continue;
    const std::vector<double>& v = table.samples(s);
    const double B = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      out << to_string(s) << ',' << detail::format_double(v[i]) << ','
          << detail::format_double(static_cast<double>(i + 1) / B) << '\n';
    }
  }
}

}  // namespace lne
