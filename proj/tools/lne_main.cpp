// Command-line front end: fit shape-constrained estimators, turn fits into
// confidence intervals, simulate critical-value tables, and run coverage
// experiments. Stdout carries machine-readable payloads only; everything
// human-oriented goes to stderr. Exit codes: 0 success, 2 malformed input or
// configuration, 3 solver failure, 4 evaluation point outside the fitted
// range, 5 missing critical value or noise-scale source.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lne/confidence.hpp"
#include "lne/convex_lse.hpp"
#include "lne/coverage.hpp"
#include "lne/critical_values.hpp"
#include "lne/density_estimators.hpp"
#include "lne/errors.hpp"
#include "lne/limit_sim.hpp"
#include "lne/truth.hpp"
#include "lne/version.hpp"

namespace {

/// Carries a specific exit code out of a command body.
struct CliError {
  int code;
  std::string message;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const lne::SolverError& e) {
    std::cerr << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

// ---------------------------------------------------------------------------
// Small file and text helpers
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const std::size_t last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = s.find(sep, begin);
    if (end == std::string::npos) {
      parts.push_back(s.substr(begin));
      return parts;
    }
    parts.push_back(s.substr(begin, end - begin));
    begin = end + 1;
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{2, "cannot open '" + path + "'"};
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError{2, "cannot write '" + path + "'"};
  out << content;
  if (!out) throw CliError{2, "failed while writing '" + path + "'"};
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty()) throw CliError{2, context + ": empty number"};
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw CliError{2, context + ": '" + t + "' is not a number"};
  if (!std::isfinite(v)) throw CliError{2, context + ": '" + t + "' is not finite"};
  return v;
}

std::uint64_t parse_uint(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(t, &used);
    if (used != t.size() || t[0] == '-') throw std::invalid_argument(t);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw CliError{2, context + ": '" + t + "' is not a nonnegative integer"};
  }
}

/// "tables/run1.json" -> "tables/run1" + suffix; non-.json paths keep their
/// full name so sibling files never collide with the original.
std::string sibling_path(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  if (p.extension() == ".json") p.replace_extension();
  return p.string() + suffix;
}

nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{2, "cannot open '" + path + "'"};
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CliError{2, path + ": " + e.what()};
  }
}

void write_manifest(const std::string& path, const std::string& command,
                    nlohmann::json config, std::uint64_t seed,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["config"] = std::move(config);
  manifest["seed"] = seed;
  manifest["versions"] = {{"lne", std::string(lne::kVersion)}};
  manifest["wall_time_seconds"] = wall_seconds;
  manifest["outputs"] = outputs;
  write_text(path, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

lne::RegressionData read_regression_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw CliError{2, path + ": empty file"};
  if (trim(lines[0]) != "x,y")
    throw CliError{2, path + ": expected header 'x,y', got '" + trim(lines[0]) + "'"};
  std::vector<std::pair<double, double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::vector<std::string> fields = split(lines[i], ',');
    if (fields.size() != 2)
      throw CliError{2, path + " line " + std::to_string(i + 1) + ": expected 2 fields"};
    const std::string where = path + " line " + std::to_string(i + 1);
    rows.emplace_back(parse_double(fields[0], where), parse_double(fields[1], where));
  }
  if (rows.size() < 2) throw CliError{2, path + ": need at least 2 data rows"};
  std::sort(rows.begin(), rows.end());
  lne::RegressionData data;
  data.x.reserve(rows.size());
  data.y.reserve(rows.size());
  for (const auto& [x, y] : rows) {
    if (!data.x.empty() && x == data.x.back())
      throw CliError{2, path + ": duplicate design point x=" + std::to_string(x)};
    data.x.push_back(x);
    data.y.push_back(y);
  }
  return data;
}

lne::SampleData read_density_csv(const std::string& path, bool require_nonnegative) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw CliError{2, path + ": empty file"};
  if (trim(lines[0]) != "x")
    throw CliError{2, path + ": expected header 'x', got '" + trim(lines[0]) + "'"};
  lne::SampleData data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string t = trim(lines[i]);
    if (t.empty()) continue;
    const double v = parse_double(t, path + " line " + std::to_string(i + 1));
    if (require_nonnegative && v < 0.0)
      throw CliError{2, path + " line " + std::to_string(i + 1) +
                            ": negative observation " + t +
                            " is outside the [0, inf) support of this model"};
    data.obs.push_back(v);
  }
  std::sort(data.obs.begin(), data.obs.end());
  try {
    data.validate(require_nonnegative);
  } catch (const std::invalid_argument& e) {
    throw CliError{2, path + ": " + e.what()};
  }
  return data;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  std::string model;
  std::string data_path;
  std::string out_path;
};

std::string shape_name(lne::Shape shape) {
  return shape == lne::Shape::convex ? "convex" : "concave";
}

void cmd_fit(const FitOptions& opt) {
  const Stopwatch watch;
  const lne::ModelType model = lne::model_from_string(opt.model);

  lne::PiecewiseLinearFunction* fitted = nullptr;
  std::unique_ptr<lne::PiecewiseLinearFunction> storage;
  std::size_t n_obs = 0;
  switch (model) {
    case lne::ModelType::convex_regression: {
      const lne::RegressionData data = read_regression_csv(opt.data_path);
      n_obs = data.n();
      storage = std::make_unique<lne::PiecewiseLinearFunction>(lne::fit_convex_lse(data));
      break;
    }
    case lne::ModelType::log_concave_density: {
      const lne::SampleData data = read_density_csv(opt.data_path, false);
      n_obs = data.n();
      storage =
          std::make_unique<lne::PiecewiseLinearFunction>(lne::fit_log_concave_mle(data).phi);
      break;
    }
    case lne::ModelType::convex_density: {
      const lne::SampleData data = read_density_csv(opt.data_path, true);
      n_obs = data.n();
      storage =
          std::make_unique<lne::PiecewiseLinearFunction>(lne::fit_convex_density_lse(data));
      break;
    }
  }
  fitted = storage.get();

  nlohmann::json fit_file;
  fit_file["model"] = std::string(lne::to_string(model));
  fit_file["knots"] = fitted->knots();
  fit_file["values"] = fitted->values();
  fit_file["shape"] = shape_name(fitted->shape());
  fit_file["meta"] = {{"n", n_obs}};
  write_text(opt.out_path, fit_file.dump(2) + "\n");

  nlohmann::json config;
  config["model"] = std::string(lne::to_string(model));
  config["data"] = opt.data_path;
  config["out"] = opt.out_path;
  write_manifest(sibling_path(opt.out_path, ".manifest.json"), "fit", config, 0,
                 {opt.out_path}, watch.seconds());
  std::cerr << "fit: " << n_obs << " observations, " << fitted->size() << " knots -> "
            << opt.out_path << '\n';
}

// ---------------------------------------------------------------------------
// ci
// ---------------------------------------------------------------------------

struct CiOptions {
  std::string fit_path;
  double x0 = std::numeric_limits<double>::quiet_NaN();
  std::string target = "value";
  double level = 0.95;
  std::string table_path;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  bool auto_sigma = false;
  std::string design = "fixed";
  std::string data_path;
};

struct LoadedFit {
  lne::ModelType model;
  lne::PiecewiseLinearFunction function;  ///< phi for log-concave fits
  std::size_t n;
};

LoadedFit load_fit(const std::string& path) {
  const nlohmann::json j = parse_json_file(path);
  try {
    const lne::ModelType model = lne::model_from_string(j.at("model").get<std::string>());
    const auto knots = j.at("knots").get<std::vector<double>>();
    const auto values = j.at("values").get<std::vector<double>>();
    const std::string shape = j.at("shape").get<std::string>();
    const std::uint64_t n = j.at("meta").at("n").get<std::uint64_t>();
    if (shape != "convex" && shape != "concave")
      throw CliError{2, path + ": shape must be 'convex' or 'concave'"};
    const bool expect_concave = model == lne::ModelType::log_concave_density;
    if ((shape == "concave") != expect_concave)
      throw CliError{2, path + ": model '" + std::string(lne::to_string(model)) +
                            "' stores a " + (expect_concave ? "concave" : "convex") +
                            " function, got shape '" + shape + "'"};
    if (n == 0) throw CliError{2, path + ": meta.n must be positive"};
    return LoadedFit{model,
                     lne::PiecewiseLinearFunction(
                         knots, values,
                         expect_concave ? lne::Shape::concave : lne::Shape::convex),
                     static_cast<std::size_t>(n)};
  } catch (const nlohmann::json::exception& e) {
    throw CliError{2, path + ": " + e.what()};
  } catch (const std::invalid_argument& e) {
    throw CliError{2, path + ": " + e.what()};
  }
}

lne::CriticalValueTable load_table_or_builtin(const std::string& path, std::string* source) {
  if (path.empty()) {
    *source = "builtin (published critical values)";
    return lne::CriticalValueTable::builtin();
  }
  *source = path;
  try {
    return lne::CriticalValueTable::from_json(parse_json_file(path));
  } catch (const std::invalid_argument& e) {
    throw CliError{2, path + ": " + e.what()};
  }
}

void cmd_ci(const CiOptions& opt) {
  const LoadedFit fit = load_fit(opt.fit_path);
  const lne::Target target = lne::target_from_string(opt.target);
  const double delta = 1.0 - opt.level;
  if (!(delta > 0.0 && delta < 1.0))
    throw CliError{2, "--level must lie strictly inside (0, 1)"};
  std::string table_source;
  const lne::CriticalValueTable table = load_table_or_builtin(opt.table_path, &table_source);
  const lne::DesignType design = lne::design_from_string(opt.design);
  const lne::PiecewiseLinearFunction& plf = fit.function;

  nlohmann::json out;
  lne::ConfidenceInterval ci;

  if (target == lne::Target::mode) {
    if (fit.model == lne::ModelType::convex_density)
      throw CliError{2,
                     "convex-density fits are nonincreasing and have no mode target; "
                     "use target value or derivative"};
    const lne::ModeBracket bracket = plf.mode_bracket();
    const std::pair<double, double> domain =
        fit.model == lne::ModelType::convex_regression
            ? std::pair<double, double>{plf.min_knot(), plf.max_knot()}
            : lne::kRealLine;
    ci = lne::ci_mode(bracket, delta, table, domain);
    out["estimate"] = bracket.m_hat;
    out["piece"] = {{"u", bracket.u_m}, {"v", bracket.v_m}};
  } else {
    if (std::isnan(opt.x0))
      throw CliError{2, "targets value and derivative need --x0"};
    if (opt.x0 < plf.min_knot() || opt.x0 > plf.max_knot())
      throw std::domain_error("x0=" + std::to_string(opt.x0) +
                              " lies outside the fitted range [" +
                              std::to_string(plf.min_knot()) + ", " +
                              std::to_string(plf.max_knot()) + "]");
    const lne::LinearPiece piece = plf.linear_piece_containing(opt.x0);
    out["x0"] = opt.x0;
    out["piece"] = {{"u", piece.u_hat}, {"v", piece.v_hat}};

    switch (fit.model) {
      case lne::ModelType::convex_regression: {
        double sigma_hat = 0.0;
        lne::RegressionData data;
        bool have_data = false;
        if (opt.auto_sigma) {
          if (opt.data_path.empty())
            throw CliError{5,
                           "--auto-sigma estimates the noise scale from data: pass --data "
                           "FILE with the csv the fit came from"};
          data = read_regression_csv(opt.data_path);
          have_data = true;
          sigma_hat = lne::estimate_sigma(data);
        } else if (!std::isnan(opt.sigma)) {
          if (!(opt.sigma >= 0.0) || !std::isfinite(opt.sigma))
            throw CliError{2, "--sigma must be finite and >= 0"};
          sigma_hat = opt.sigma;
        } else {
          throw CliError{5,
                         "value and derivative targets on a regression fit need a noise "
                         "scale: pass --sigma VALUE or --auto-sigma with --data FILE"};
        }
        lne::NuisanceScale scale;
        if (design == lne::DesignType::random) {
          if (!have_data) {
            if (opt.data_path.empty())
              throw CliError{5,
                             "--design random rescales by the local design density: pass "
                             "--data FILE so the points inside the active piece can be "
                             "counted"};
            data = read_regression_csv(opt.data_path);
          }
          scale = lne::nuisance_a_random_design(data, piece, sigma_hat);
        } else {
          scale.a_hat = sigma_hat;
        }
        if (target == lne::Target::value) {
          ci = lne::ci_value(plf, piece, opt.x0, fit.n, scale, delta, table);
          out["estimate"] = plf.evaluate(opt.x0);
        } else {
          ci = lne::ci_derivative(plf, piece, opt.x0, fit.n, scale, delta, table);
          out["estimate"] = piece.slope;
        }
        break;
      }
      case lne::ModelType::log_concave_density: {
        const lne::LogConcaveFit lc{plf};
        const double fhat = lc.density(opt.x0);
        const lne::NuisanceScale scale = lne::nuisance_logconcave(lc, opt.x0);
        const double slope_hat = fhat * piece.slope;
        const auto intervals = lne::ci_generic({fhat, slope_hat}, piece, fit.n, scale, delta,
                                               table, lne::Shape::concave);
        if (target == lne::Target::value) {
          ci = lne::intersect_domain(intervals.first,
                                     {0.0, std::numeric_limits<double>::infinity()});
          out["estimate"] = fhat;
        } else {
          ci = intervals.second;
          out["estimate"] = slope_hat;
        }
        break;
      }
      case lne::ModelType::convex_density: {
        lne::NuisanceScale scale;
        scale.a_hat = std::sqrt(std::max(0.0, plf.evaluate(opt.x0)));
        if (target == lne::Target::value) {
          ci = lne::ci_value(plf, piece, opt.x0, fit.n, scale, delta, table,
                             {0.0, std::numeric_limits<double>::infinity()});
          out["estimate"] = plf.evaluate(opt.x0);
        } else {
          ci = lne::ci_derivative(plf, piece, opt.x0, fit.n, scale, delta, table);
          out["estimate"] = piece.slope;
        }
        break;
      }
    }
  }

  out["target"] = std::string(lne::to_string(target));
  out["lower"] = ci.lower;
  out["upper"] = ci.upper;
  out["level"] = opt.level;
  out["clamped"] = ci.clamped;
  std::cout << out.dump(2) << '\n';
  std::cerr << "ci: table " << table_source << '\n';
}

// ---------------------------------------------------------------------------
// simulate-critical-values
// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string f0 = "quadratic(12,0.5)";
  double x0 = 0.5;
  std::size_t n = 1000;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  std::string design = "fixed";
  std::size_t workers = 0;
  std::string out_path;
  std::string oracle_out_path;
};

void cmd_simulate(const SimulateOptions& opt) {
  const Stopwatch watch;
  lne::SimulationConfig config;
  config.f0 = lne::ConvexTruth::parse(opt.f0);
  config.x0 = opt.x0;
  config.n = opt.n;
  config.replications = opt.reps;
  config.seed = opt.seed;
  config.sigma = opt.sigma;
  config.design = lne::design_from_string(opt.design);
  config.workers = opt.workers;
  config.validate();
  if (!config.x0_on_design_grid())
    std::cerr << "warning: x0=" << opt.x0 << " is not a fixed-design grid point of n=" << opt.n
              << "; the active piece straddles it asymmetrically\n";

  lne::CriticalValueTable pivotal;
  lne::CriticalValueTable oracle;
  const bool want_oracle = !opt.oracle_out_path.empty();
  if (want_oracle) {
    lne::SimulationTables tables = lne::simulate_tables(config);
    pivotal = std::move(tables.pivotal);
    oracle = std::move(tables.oracle);
  } else {
    pivotal = lne::simulate_pivotal_table(config);
  }

  std::vector<std::string> outputs;
  write_text(opt.out_path, pivotal.to_json().dump() + "\n");
  outputs.push_back(opt.out_path);
  const std::string ecdf_path = sibling_path(opt.out_path, ".ecdf.csv");
  {
    std::ofstream ecdf(ecdf_path, std::ios::binary);
    if (!ecdf) throw CliError{2, "cannot write '" + ecdf_path + "'"};
    lne::write_ecdf_csv(ecdf, pivotal);
    if (!ecdf) throw CliError{2, "failed while writing '" + ecdf_path + "'"};
  }
  outputs.push_back(ecdf_path);
  if (want_oracle) {
    write_text(opt.oracle_out_path, oracle.to_json().dump() + "\n");
    outputs.push_back(opt.oracle_out_path);
    const std::string oracle_ecdf = sibling_path(opt.oracle_out_path, ".ecdf.csv");
    std::ofstream ecdf(oracle_ecdf, std::ios::binary);
    if (!ecdf) throw CliError{2, "cannot write '" + oracle_ecdf + "'"};
    lne::write_ecdf_csv(ecdf, oracle);
    if (!ecdf) throw CliError{2, "failed while writing '" + oracle_ecdf + "'"};
    outputs.push_back(oracle_ecdf);
  }

  nlohmann::json manifest_config;
  manifest_config["f0"] = config.f0.spec();
  manifest_config["x0"] = config.x0;
  manifest_config["n"] = config.n;
  manifest_config["replications"] = config.replications;
  manifest_config["sigma"] = config.sigma;
  manifest_config["design"] = std::string(lne::to_string(config.design));
  manifest_config["workers"] = config.workers;
  manifest_config["oracle"] = want_oracle;
  write_manifest(sibling_path(opt.out_path, ".manifest.json"), "simulate-critical-values",
                 manifest_config, config.seed, outputs, watch.seconds());
  std::cerr << "simulate-critical-values: " << config.replications << " replications at n="
            << config.n << " -> " << opt.out_path << '\n';
}

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

struct CoverageOptions {
  std::string config_path;
  std::string out_base;
};

struct ParsedExperiment {
  lne::ExperimentConfig config;
  std::string table_path;  ///< empty = builtin
  std::string f0_spec;     ///< empty = model default
};

ParsedExperiment parse_experiment_file(const std::string& path) {
  ParsedExperiment parsed;
  std::vector<std::string> seen;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path + " line " + std::to_string(i + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError{2, where + ": expected 'key = value', got '" + line + "'"};
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw CliError{2, where + ": expected 'key = value', got '" + line + "'"};
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw CliError{2, where + ": duplicate key '" + key + "'"};
    seen.push_back(key);

    try {
      if (key == "model") {
        parsed.config.model = lne::model_from_string(value);
      } else if (key == "f0") {
        parsed.f0_spec = value;
      } else if (key == "x0") {
        parsed.config.x0 = parse_double(value, where);
      } else if (key == "targets") {
        parsed.config.targets.clear();
        for (const std::string& part : split(value, ','))
          parsed.config.targets.push_back(lne::target_from_string(trim(part)));
      } else if (key == "n") {
        parsed.config.n_grid.clear();
        for (const std::string& part : split(value, ','))
          parsed.config.n_grid.push_back(
              static_cast<std::size_t>(parse_uint(part, where)));
      } else if (key == "replications") {
        parsed.config.replications = static_cast<std::size_t>(parse_uint(value, where));
      } else if (key == "level") {
        parsed.config.level = parse_double(value, where);
      } else if (key == "seed") {
        parsed.config.seed = parse_uint(value, where);
      } else if (key == "design") {
        parsed.config.design = lne::design_from_string(value);
      } else if (key == "sigma") {
        parsed.config.sigma = parse_double(value, where);
      } else if (key == "sigma_mode") {
        parsed.config.sigma_handling = lne::sigma_handling_from_string(value);
      } else if (key == "workers") {
        parsed.config.workers = static_cast<std::size_t>(parse_uint(value, where));
      } else if (key == "table") {
        parsed.table_path = value;
      } else {
        throw CliError{2, where + ": unknown key '" + key + "'"};
      }
    } catch (const std::invalid_argument& e) {
      throw CliError{2, where + ": " + e.what()};
    }
  }

  if (!parsed.f0_spec.empty()) {
    try {
      if (parsed.config.model == lne::ModelType::convex_regression) {
        parsed.config.regression_truth = lne::ConvexTruth::parse(parsed.f0_spec);
      } else {
        parsed.config.density_truth = lne::DensityTruth::parse(parsed.f0_spec);
      }
    } catch (const std::invalid_argument& e) {
      throw CliError{2, path + ": f0: " + e.what()};
    }
  }
  try {
    parsed.config.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError{2, path + ": " + e.what()};
  }
  return parsed;
}

void cmd_coverage(const CoverageOptions& opt) {
  const Stopwatch watch;
  const ParsedExperiment parsed = parse_experiment_file(opt.config_path);
  const lne::ExperimentConfig& config = parsed.config;

  std::string table_source;
  const lne::CriticalValueTable table =
      load_table_or_builtin(parsed.table_path, &table_source);
  // Oracle lengths need the curvature-rescaled statistics; fall back to the
  // published values when the user table does not carry them.
  const bool table_has_oracle = table.contains(lne::Statistic::absH2);
  const lne::CriticalValueTable& oracle_table =
      table_has_oracle ? table : lne::CriticalValueTable::builtin();

  const lne::CoverageReport report = lne::run_coverage(config, table, oracle_table);

  std::string base = opt.out_base;
  if (base.empty()) {
    std::filesystem::path p(opt.config_path);
    p.replace_extension();
    base = p.string();
  }
  const std::string csv_path = base + ".csv";
  const std::string json_path = base + ".json";
  std::ostringstream csv;
  lne::write_coverage_csv(csv, report);
  write_text(csv_path, csv.str());
  write_text(json_path, lne::coverage_to_json(report).dump(2) + "\n");

  nlohmann::json manifest_config = lne::coverage_to_json(report);
  manifest_config.erase("cells");
  manifest_config["config_file"] = opt.config_path;
  manifest_config["table_source"] = table_source;
  write_manifest(base + ".manifest.json", "coverage", manifest_config, config.seed,
                 {csv_path, json_path}, watch.seconds());

  for (const lne::CoverageCell& cell : report.cells) {
    std::cerr << "coverage: n=" << cell.n << " target=" << lne::to_string(cell.target)
              << " coverage=" << cell.coverage << " (se " << cell.se << ", " << cell.completed
              << '/' << cell.replications << " replications)\n";
  }
  std::cerr << "coverage: wrote " << csv_path << " and " << json_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuning-free confidence intervals for shape-constrained estimators"};
  app.set_version_flag("--version", std::string(lne::kVersion));
  app.require_subcommand(1);

  FitOptions fit_opt;
  CLI::App* fit = app.add_subcommand(
      "fit", "Fit a shape-constrained estimator to a CSV and write a fit file");
  fit->add_option("--model", fit_opt.model,
                  "convex-regression | log-concave | convex-density")
      ->required();
  fit->add_option("--data", fit_opt.data_path,
                  "input CSV: header 'x,y' for regression, 'x' for density models")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fit_opt.out_path, "output fit JSON path")->required();

  CiOptions ci_opt;
  CLI::App* ci = app.add_subcommand(
      "ci", "Build a confidence interval from a fit file; JSON goes to stdout");
  ci->add_option("fit", ci_opt.fit_path, "fit JSON produced by the fit command")
      ->required()
      ->check(CLI::ExistingFile);
  ci->add_option("--x0", ci_opt.x0, "evaluation point (value and derivative targets)");
  ci->add_option("--target", ci_opt.target, "value | derivative | mode")
      ->capture_default_str();
  ci->add_option("--level", ci_opt.level, "confidence level in (0, 1)")
      ->capture_default_str();
  ci->add_option("--table", ci_opt.table_path,
                 "critical-value table JSON; omitted = published builtin table")
      ->check(CLI::ExistingFile);
  CLI::Option* sigma_opt =
      ci->add_option("--sigma", ci_opt.sigma, "known noise standard deviation (regression)");
  CLI::Option* auto_sigma_opt = ci->add_flag(
      "--auto-sigma", ci_opt.auto_sigma,
      "estimate the noise scale from successive differences of --data (regression)");
  sigma_opt->excludes(auto_sigma_opt);
  auto_sigma_opt->excludes(sigma_opt);
  ci->add_option("--design", ci_opt.design,
                 "fixed | random; random rescales the noise by the local design density")
      ->capture_default_str();
  ci->add_option("--data", ci_opt.data_path,
                 "regression CSV backing the fit (for --auto-sigma / --design random)")
      ->check(CLI::ExistingFile);

  SimulateOptions sim_opt;
  CLI::App* simulate = app.add_subcommand(
      "simulate-critical-values",
      "Monte Carlo a critical-value table by refitting synthetic datasets");
  simulate->add_option("--f0", sim_opt.f0, "convex truth spec, e.g. quadratic(12,0.5)")
      ->capture_default_str();
  simulate->add_option("--x0", sim_opt.x0, "evaluation point")->capture_default_str();
  simulate->add_option("--n", sim_opt.n, "design resolution per replication")
      ->capture_default_str();
  simulate->add_option("--reps", sim_opt.reps, "number of replications")
      ->capture_default_str();
  simulate->add_option("--seed", sim_opt.seed, "master seed")->capture_default_str();
  simulate->add_option("--sigma", sim_opt.sigma, "noise standard deviation")
      ->capture_default_str();
  simulate->add_option("--design", sim_opt.design, "fixed | random")->capture_default_str();
  simulate->add_option("--workers", sim_opt.workers,
                       "worker threads (0 = LNE_WORKERS env or hardware)");
  simulate->add_option("--out", sim_opt.out_path, "output table JSON path")->required();
  simulate->add_option("--oracle-out", sim_opt.oracle_out_path,
                       "also write the curvature-rescaled oracle table here");

  CoverageOptions cov_opt;
  CLI::App* coverage = app.add_subcommand(
      "coverage", "Run a coverage experiment described by a key=value config file");
  coverage->add_option("config", cov_opt.config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  coverage->add_option("--out", cov_opt.out_base,
                       "output base path (default: config path without extension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (fit->parsed()) return run_guarded([&] { cmd_fit(fit_opt); });
  if (ci->parsed()) return run_guarded([&] { cmd_ci(ci_opt); });
  if (simulate->parsed()) return run_guarded([&] { cmd_simulate(sim_opt); });
  if (coverage->parsed()) return run_guarded([&] { cmd_coverage(cov_opt); });
  return 2;
}
