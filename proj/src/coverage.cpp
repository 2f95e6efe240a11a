#include "lne/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "format_util.hpp"
#include "lne/density_estimators.hpp"
#include "lne/errors.hpp"
#include "lne/parallel.hpp"

namespace lne {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(ModelType m) {
  switch (m) {
    case ModelType::convex_regression:
      return "convex-regression";
    case ModelType::log_concave_density:
      return "log-concave";
    case ModelType::convex_density:
      return "convex-density";
  }
  throw std::logic_error("unhandled model type");
}

ModelType model_from_string(std::string_view name) {
  if (name == "convex-regression") return ModelType::convex_regression;
  if (name == "log-concave" || name == "log-concave-density")
    return ModelType::log_concave_density;
  if (name == "convex-density") return ModelType::convex_density;
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "'; expected convex-regression, log-concave, or "
                              "convex-density");
}

std::string_view to_string(SigmaHandling s) {
  switch (s) {
    case SigmaHandling::known:
      return "known";
    case SigmaHandling::estimated:
      return "estimated";
  }
  throw std::logic_error("unhandled sigma handling");
}

SigmaHandling sigma_handling_from_string(std::string_view name) {
  if (name == "known") return SigmaHandling::known;
  if (name == "estimated") return SigmaHandling::estimated;
  throw std::invalid_argument("unknown sigma mode '" + std::string(name) +
                              "'; expected known or estimated");
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw std::invalid_argument("the n grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 10) throw std::invalid_argument("every grid n must be >= 10");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw std::invalid_argument("the n grid must be strictly increasing");
  }
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("the confidence level must lie in (0, 1)");
  if (targets.empty()) throw std::invalid_argument("at least one target is required");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = i + 1; j < targets.size(); ++j) {
      if (targets[i] == targets[j]) throw std::invalid_argument("duplicate target");
    }
  }
  if (model == ModelType::convex_density) {
    for (Target t : targets) {
      if (t == Target::mode)
        throw std::invalid_argument(
            "the convex-density model estimates a nonincreasing density and has no mode "
            "target");
    }
    if (density_truth.quantile(0.5) < 0.0 || density_truth.quantile(1e-6) < 0.0)
      throw std::invalid_argument(
          "the convex-density model needs a sampling truth supported on [0, inf)");
  }
  if (model == ModelType::convex_regression) {
    if (!(x0 > 0.0 && x0 < 1.0))
      throw std::invalid_argument("regression x0 must lie strictly inside (0, 1)");
    if (!std::isfinite(sigma) || sigma < 0.0)
      throw std::invalid_argument("sigma must be finite and >= 0");
  } else if (!std::isfinite(x0)) {
    throw std::invalid_argument("x0 must be finite");
  }
}

namespace {

enum class RepStatus { ok, solver_failed, cert_failed };

struct RepOutcome {
  RepStatus status = RepStatus::ok;
  std::vector<char> usable;
  std::vector<char> covered;
  std::vector<double> length;
};

/// Internal signal: the fit converged but flunked its optimality certificate.
struct CertFailure {};

/// Left-continuous empirical quantile sorted[ceil(p m) - 1], with a relative
/// slack on the rank so that p m landing a hair above an integer (e.g.
/// 0.95 * 100 in floating point) still selects that integer.
double sample_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double t = p * static_cast<double>(sorted.size());
  double rank = std::ceil(t - 1e-9 * std::max(1.0, t));
  rank = std::clamp(rank, 1.0, static_cast<double>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank) - 1];
}

/// Invariants every reported interval must satisfy; run on ~1% of the
/// replications. `make_ci` rebuilds the interval at an arbitrary delta.
void spot_verify(const std::function<ConfidenceInterval(double)>& make_ci,
                 const ConfidenceInterval& base, double estimate, double delta) {
  if (!(base.lower <= base.upper))
    throw std::logic_error("interval invariant violated: endpoints out of order");
  if (!base.clamped) {
    const double mid = 0.5 * (base.lower + base.upper);
    if (std::abs(mid - estimate) > 1e-9 * std::max(1.0, std::abs(estimate)))
      throw std::logic_error("interval invariant violated: not centered on the estimate");
  }
  try {
    const ConfidenceInterval wide = make_ci(0.5 * delta);
    if (wide.lower > base.lower || wide.upper < base.upper)
      throw std::logic_error("interval invariant violated: higher level does not nest");
  } catch (const std::out_of_range&) {
    // A quantile grid that cannot serve delta/2 skips the nesting probe.
  }
}

SampleData draw_sample(const DensityTruth& truth, std::size_t n, rng::Stream& stream) {
  SampleData data;
  data.obs.resize(n);
  for (double& o : data.obs) o = truth.quantile(stream.next_uniform());
  std::sort(data.obs.begin(), data.obs.end());
  return data;
}

class ReplicationRunner {
 public:
  ReplicationRunner(const ExperimentConfig& config, const CriticalValueTable& table,
                    double delta, std::size_t n)
      : config_(config), table_(table), delta_(delta), n_(n) {}

  RepOutcome run(std::uint64_t stream_index, bool spot) const {
    RepOutcome out;
    const std::size_t T = config_.targets.size();
    out.usable.assign(T, 0);
    out.covered.assign(T, 0);
    out.length.assign(T, 0.0);
    rng::Stream stream(config_.seed, stream_index);
    try {
      switch (config_.model) {
        case ModelType::convex_regression:
          regression(stream, spot, out);
          break;
        case ModelType::log_concave_density:
          log_concave(stream, spot, out);
          break;
        case ModelType::convex_density:
          convex_density(stream, spot, out);
          break;
      }
    } catch (const CertFailure&) {
      out.status = RepStatus::cert_failed;
    } catch (const SolverError&) {
      out.status = RepStatus::solver_failed;
    }
    return out;
  }

 private:
  void record(RepOutcome& out, std::size_t t, const ConfidenceInterval& ci, double truth) const {
    out.usable[t] = 1;
    out.covered[t] = ci.lower <= truth && truth <= ci.upper;
    out.length[t] = ci.upper - ci.lower;
  }

  /// Builds the interval for one target and runs the optional invariant
  /// probe; std::domain_error / std::invalid_argument mean this replication
  /// cannot serve the target (x0 outside the fitted support, empty piece).
  void try_target(RepOutcome& out, std::size_t t, bool spot, double truth, double estimate,
                 const std::function<ConfidenceInterval(double)>& make_ci) const {
    try {
      const ConfidenceInterval ci = make_ci(delta_);
      record(out, t, ci, truth);
      if (spot) spot_verify(make_ci, ci, estimate, delta_);
    } catch (const std::domain_error&) {
    } catch (const std::invalid_argument&) {
    }
  }

  void regression(rng::Stream& stream, bool spot, RepOutcome& out) const {
    const ConvexTruth& f0 = config_.regression_truth;
    const RegressionData data =
        simulate_regression_data(f0, config_.sigma, config_.design, n_, stream);
    const PiecewiseLinearFunction fit = fit_convex_lse(data);
    if (config_.verify_fits && !check_lse_characterization(fit, data).pass) throw CertFailure{};
    const double sigma_hat = config_.sigma_handling == SigmaHandling::known
                                 ? config_.sigma
                                 : estimate_sigma(data);

    for (std::size_t t = 0; t < config_.targets.size(); ++t) {
      const Target target = config_.targets[t];
      if (target == Target::mode) {
        const ModeBracket bracket = fit.mode_bracket();
        try_target(out, t, spot, f0.minimizer(), bracket.m_hat, [&](double d) {
          return ci_mode(bracket, d, table_, {fit.min_knot(), fit.max_knot()});
        });
        continue;
      }
      try {
        const LinearPiece piece = fit.linear_piece_containing(config_.x0);
        NuisanceScale scale;
        if (config_.design == DesignType::random) {
          scale = nuisance_a_random_design(data, piece, sigma_hat);
        } else {
          scale.a_hat = sigma_hat;
        }
        if (target == Target::value) {
          try_target(out, t, spot, f0(config_.x0), fit.evaluate(config_.x0), [&](double d) {
            return ci_value(fit, piece, config_.x0, n_, scale, d, table_);
          });
        } else {
          try_target(out, t, spot, f0.derivative(config_.x0), piece.slope, [&](double d) {
            return ci_derivative(fit, piece, config_.x0, n_, scale, d, table_);
          });
        }
      } catch (const std::domain_error&) {
      } catch (const std::invalid_argument&) {
      }
    }
  }

  void log_concave(rng::Stream& stream, bool spot, RepOutcome& out) const {
    const DensityTruth& g0 = config_.density_truth;
    const SampleData data = draw_sample(g0, n_, stream);
    const LogConcaveFit fit = fit_log_concave_mle(data);
    if (config_.verify_fits && !check_logconcave_characterization(fit, data).pass)
      throw CertFailure{};

    for (std::size_t t = 0; t < config_.targets.size(); ++t) {
      const Target target = config_.targets[t];
      if (target == Target::mode) {
        const ModeBracket bracket = fit.phi.mode_bracket();
        try_target(out, t, spot, g0.mode(), bracket.m_hat,
                   [&](double d) { return ci_mode(bracket, d, table_); });
        continue;
      }
      try {
        const LinearPiece piece = fit.phi.linear_piece_containing(config_.x0);
        const double fhat = fit.density(config_.x0);
        const NuisanceScale scale = nuisance_logconcave(fit, config_.x0);
        const double slope_hat = fhat * piece.slope;
        if (target == Target::value) {
          try_target(out, t, spot, g0.pdf(config_.x0), fhat, [&](double d) {
            return intersect_domain(
                ci_generic({fhat, slope_hat}, piece, n_, scale, d, table_, Shape::concave)
                    .first,
                {0.0, std::numeric_limits<double>::infinity()});
          });
        } else {
          try_target(out, t, spot, g0.pdf_derivative(config_.x0), slope_hat, [&](double d) {
            return ci_generic({fhat, slope_hat}, piece, n_, scale, d, table_, Shape::concave)
                .second;
          });
        }
      } catch (const std::domain_error&) {
      } catch (const std::invalid_argument&) {
      }
    }
  }

  void convex_density(rng::Stream& stream, bool spot, RepOutcome& out) const {
    const DensityTruth& g0 = config_.density_truth;
    const SampleData data = draw_sample(g0, n_, stream);
    const PiecewiseLinearFunction fit = fit_convex_density_lse(data);
    if (config_.verify_fits && !check_convex_density_characterization(fit, data).pass)
      throw CertFailure{};

    for (std::size_t t = 0; t < config_.targets.size(); ++t) {
      const Target target = config_.targets[t];
      try {
        const LinearPiece piece = fit.linear_piece_containing(config_.x0);
        NuisanceScale scale;
        scale.a_hat = std::sqrt(std::max(0.0, fit.evaluate(config_.x0)));
        if (target == Target::value) {
          try_target(out, t, spot, g0.pdf(config_.x0), fit.evaluate(config_.x0), [&](double d) {
            return ci_value(fit, piece, config_.x0, n_, scale, d, table_,
                            {0.0, std::numeric_limits<double>::infinity()});
          });
        } else {
          try_target(out, t, spot, g0.pdf_derivative(config_.x0), piece.slope, [&](double d) {
            return ci_derivative(fit, piece, config_.x0, n_, scale, d, table_);
          });
        }
      } catch (const std::domain_error&) {
      } catch (const std::invalid_argument&) {
      }
    }
  }

  const ExperimentConfig& config_;
  const CriticalValueTable& table_;
  double delta_;
  std::size_t n_;
};

}  // namespace

CoverageReport run_coverage(const ExperimentConfig& config, const CriticalValueTable& table,
                            const CriticalValueTable& oracle_table) {
  config.validate();
  const double delta = 1.0 - config.level;
  const std::size_t R = config.replications;
  const std::size_t T = config.targets.size();

  CoverageReport report;
  report.config = config;
  report.cells.reserve(config.n_grid.size() * T);

  for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
    const std::size_t n = config.n_grid[ni];
    const ReplicationRunner runner(config, table, delta, n);
    std::vector<RepOutcome> outcomes(R);
    parallel_for(R, config.workers, [&](std::size_t r) {
      outcomes[r] = runner.run(static_cast<std::uint64_t>(ni) * R + r, r % 100 == 0);
    });

    for (std::size_t t = 0; t < T; ++t) {
      CoverageCell cell;
      cell.n = n;
      cell.target = config.targets[t];
      cell.replications = R;
      std::vector<double> lengths;
      lengths.reserve(R);
      std::size_t covered = 0;
      for (const RepOutcome& oc : outcomes) {
        if (oc.status == RepStatus::cert_failed) {
          ++cell.certificate_failures;
          continue;
        }
        if (oc.status == RepStatus::solver_failed || !oc.usable[t]) {
          ++cell.failures;
          continue;
        }
        ++cell.completed;
        covered += oc.covered[t] ? 1 : 0;
        lengths.push_back(oc.length[t]);
      }
      if ((cell.failures + cell.certificate_failures) * 100 > R) {
        throw std::runtime_error(
            "coverage cell n=" + std::to_string(n) + " target=" +
            std::string(to_string(cell.target)) + " excluded " +
            std::to_string(cell.failures + cell.certificate_failures) + " of " +
            std::to_string(R) +
            " replications; more than 1% of exclusions invalidates the experiment");
      }
      if (cell.completed > 0) {
        cell.coverage = static_cast<double>(covered) / static_cast<double>(cell.completed);
        cell.se = std::sqrt(cell.coverage * (1.0 - cell.coverage) /
                            static_cast<double>(cell.completed));
      } else {
        cell.coverage = kNaN;
        cell.se = kNaN;
      }
      std::sort(lengths.begin(), lengths.end());
      cell.len_q25 = sample_quantile(lengths, 0.25);
      cell.len_q50 = sample_quantile(lengths, 0.50);
      cell.len_q75 = sample_quantile(lengths, 0.75);
      cell.oracle_len = oracle_ci_length(config, n, delta, oracle_table, cell.target);
      report.cells.push_back(cell);
    }
  }
  return report;
}

double oracle_ci_length(const ExperimentConfig& config, std::size_t n, double delta,
                        const CriticalValueTable& oracle_table, Target target) {
  double d = kNaN;
  double rate = kNaN;
  Statistic stat = Statistic::absH2;
  const double dn = static_cast<double>(n);

  switch (config.model) {
    case ModelType::convex_regression: {
      const ConvexTruth& f0 = config.regression_truth;
      if (!(config.sigma > 0.0)) return kNaN;
      const double ratio = dn / (config.sigma * config.sigma);
      if (target == Target::mode) {
        const double fpp = f0.second_derivative(f0.minimizer());
        if (!(fpp > 0.0)) return kNaN;
        d = std::pow(24.0 / fpp, 0.4);
        rate = std::pow(ratio, -0.2);
        stat = Statistic::absH2mode;
      } else {
        const double fpp = f0.second_derivative(config.x0);
        if (!(fpp > 0.0)) return kNaN;
        if (target == Target::value) {
          d = std::pow(fpp / 24.0, 0.2);
          rate = std::pow(ratio, -0.4);
          stat = Statistic::absH2;
        } else {
          d = std::pow(fpp / 24.0, 0.6);
          rate = std::pow(ratio, -0.2);
          stat = Statistic::absH3;
        }
      }
      break;
    }
    case ModelType::log_concave_density: {
      const DensityTruth& g0 = config.density_truth;
      if (target == Target::mode) {
        const double f = g0.pdf(g0.mode());
        const double fpp = g0.pdf_second_derivative(g0.mode());
        if (!(f > 0.0) || !(fpp * fpp > 0.0) || !std::isfinite(fpp)) return kNaN;
        d = std::pow(576.0 * f / (fpp * fpp), 0.2);
        rate = std::pow(dn, -0.2);
        stat = Statistic::absH2mode;
      } else {
        const double f = g0.pdf(config.x0);
        double phi2 = 0.0;
        try {
          phi2 = g0.log_pdf_second_derivative(config.x0);
        } catch (const std::exception&) {
          return kNaN;
        }
        const double curv = std::abs(phi2);
        if (!(f > 0.0) || !(curv > 0.0) || !std::isfinite(curv)) return kNaN;
        if (target == Target::value) {
          d = std::pow(f * f * f * curv / 24.0, 0.2);
          rate = std::pow(dn, -0.4);
          stat = Statistic::absH2;
        } else {
          d = std::pow(f * f * f * f * curv * curv * curv / (24.0 * 24.0 * 24.0), 0.2);
          rate = std::pow(dn, -0.2);
          stat = Statistic::absH3;
        }
      }
      break;
    }
    case ModelType::convex_density: {
      if (target == Target::mode) return kNaN;
      const DensityTruth& g0 = config.density_truth;
      const double f = g0.pdf(config.x0);
      const double fpp = g0.pdf_second_derivative(config.x0);
      if (!(f > 0.0) || !(fpp > 0.0)) return kNaN;
      if (target == Target::value) {
        d = std::pow(f * f * fpp / 24.0, 0.2);
        rate = std::pow(dn, -0.4);
        stat = Statistic::absH2;
      } else {
        d = std::pow(f * fpp * fpp * fpp / (24.0 * 24.0 * 24.0), 0.2);
        rate = std::pow(dn, -0.2);
        stat = Statistic::absH3;
      }
      break;
    }
  }

  if (!(d > 0.0) || !std::isfinite(d) || !std::isfinite(rate)) return kNaN;
  try {
    return 2.0 * d * rate * oracle_table.quantile(stat, delta);
  } catch (const std::exception&) {
    return kNaN;
  }
}

double length_rate_check(const CoverageReport& report, Target target) {
  std::vector<std::pair<double, double>> pts;  // (log n, log median length)
  for (const CoverageCell& cell : report.cells) {
    if (cell.target != target) continue;
    if (!(cell.len_q50 > 0.0) || !std::isfinite(cell.len_q50))
      throw std::invalid_argument(
          "rate check needs positive finite median lengths for every cell");
    pts.emplace_back(std::log(static_cast<double>(cell.n)), std::log(cell.len_q50));
  }
  if (pts.size() < 3)
    throw std::invalid_argument("rate check needs at least three sample sizes");

  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("rate check needs distinct sample sizes");
  return sxy / sxx;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << "model,target,n,R,level,coverage,se,len_q25,len_q50,len_q75,oracle_len,failures\n";
  for (const CoverageCell& cell : report.cells) {
    out << to_string(report.config.model) << ',' << to_string(cell.target) << ',' << cell.n
        << ',' << cell.replications << ',' << detail::format_double(report.config.level) << ','
        << detail::format_double(cell.coverage) << ',' << detail::format_double(cell.se) << ','
        << detail::format_double(cell.len_q25) << ',' << detail::format_double(cell.len_q50)
        << ',' << detail::format_double(cell.len_q75) << ','
        << detail::format_double(cell.oracle_len) << ','
        << cell.failures + cell.certificate_failures << '\n';
  }
}

nlohmann::json coverage_to_json(const CoverageReport& report) {
  const ExperimentConfig& config = report.config;
  nlohmann::json j;
  j["model"] = std::string(to_string(config.model));
  j["truth"] = config.model == ModelType::convex_regression ? config.regression_truth.spec()
                                                            : config.density_truth.spec();
  j["x0"] = config.x0;
  j["level"] = config.level;
  j["replications"] = config.replications;
  j["seed"] = config.seed;
  j["design"] = std::string(to_string(config.design));
  j["sigma_handling"] = std::string(to_string(config.sigma_handling));
  j["sigma"] = config.sigma;
  j["n_grid"] = config.n_grid;
  nlohmann::json targets = nlohmann::json::array();
  for (Target t : config.targets) targets.push_back(std::string(to_string(t)));
  j["targets"] = std::move(targets);

  nlohmann::json cells = nlohmann::json::array();
  for (const CoverageCell& cell : report.cells) {
    nlohmann::json c;
    c["n"] = cell.n;
    c["target"] = std::string(to_string(cell.target));
    c["replications"] = cell.replications;
    c["completed"] = cell.completed;
    c["coverage"] = cell.coverage;
    c["se"] = cell.se;
    c["len_q25"] = cell.len_q25;
    c["len_q50"] = cell.len_q50;
    c["len_q75"] = cell.len_q75;
    if (std::isfinite(cell.oracle_len)) {
      c["oracle_len"] = cell.oracle_len;
    } else {
      c["oracle_len"] = nullptr;
    }
    c["failures"] = cell.failures;
    c["certificate_failures"] = cell.certificate_failures;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

}  // namespace lne
