#pragma once

// Command-line front end. run_cli is the whole program minus main() so the
// test suite can drive it in-process.
//
// Option values resolve in order: command-line flag, --config JSON document,
// built-in default. Exit codes: 0 ok, 2 input or validation error, 3 the
// requested method is infeasible on this data.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csv_io.hpp"
#include "qasis/errors.hpp"
#include "qasis/evaluation.hpp"
#include "qasis/screening.hpp"
#include "qasis/simgen.hpp"
#include "qasis/survival.hpp"
#include "report.hpp"

namespace qasis::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;

namespace detail {

// Canonical key for every option; aliases (--methods, --alphas) map here.
inline const std::vector<std::string>& option_keys() {
  static const std::vector<std::string> keys{
      "input", "response", "status", "alpha", "method", "basis", "degree", "keep", "threshold",
      "gmin",  "kernel",   "bandwidth", "reps", "seed", "threads", "output", "example", "target", "n", "p"};
  return keys;
}

inline std::string canonical_key(const std::string& key) {
  if (key == "methods") return "method";
  if (key == "alphas") return "alpha";
  return key;
}

/// Flag values layered over config-file values.
class Options {
 public:
  void set_flag(const std::string& key, std::string value) { flags_[key] = std::move(value); }

  void load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgumentError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgumentError("config file '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw InvalidArgumentError("config file '" + path + "' must hold a JSON object");
    for (const auto& [raw_key, value] : doc.items()) {
      const auto key = canonical_key(raw_key);
      const auto& keys = option_keys();
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        throw InvalidArgumentError("config file '" + path + "': unknown key '" + raw_key + "'");
      }
      config_[key] = to_text(raw_key, value);
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    if (auto it = flags_.find(key); it != flags_.end()) return it->second;
    if (auto it = config_.find(key); it != config_.end()) return it->second;
    return std::nullopt;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw InvalidArgumentError("missing required option --" + key);
    return *v;
  }

 private:
  static std::string to_text(const std::string& key, const nlohmann::json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer() || value.is_number_unsigned()) return value.dump();
    if (value.is_number_float()) return io::format_double(value.get<double>());
    if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (item.is_array() || item.is_object()) throw InvalidArgumentError("config key '" + key + "': nested value");
        if (!joined.empty()) joined += ',';
        joined += to_text(key, item);
      }
      return joined;
    }
    throw InvalidArgumentError("config key '" + key + "' has an unsupported value type");
  }

  std::map<std::string, std::string> flags_;
  std::map<std::string, std::string> config_;
};

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto field : io::detail::split(text)) {
    if (field.empty()) throw InvalidArgumentError("empty entry in list '" + text + "'");
    out.emplace_back(field);
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw InvalidArgumentError("--" + key + ": '" + text + "' is not a finite number");
  }
  return v;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgumentError("--" + key + ": '" + text + "' is not a nonnegative integer");
  }
  return v;
}

inline double parse_level(const std::string& text) {
  const double a = parse_real("alpha", text);
  if (!(a > 0.0 && a < 1.0)) throw InvalidArgumentError("--alpha: " + text + " is not in (0, 1)");
  return a;
}

inline unsigned resolve_threads(const Options& opts) {
  const auto t = parse_count("threads", opts.get_or("threads", "1"));
  if (t == 0) return std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(t);
}

// Screening options shared by the screen and simulate subcommands.
inline ScreeningConfig screening_config(const Options& opts) {
  ScreeningConfig config;
  if (auto v = opts.get("basis"); v && *v != "auto") {
    config.num_basis = static_cast<int>(parse_count("basis", *v));
  }
  if (auto v = opts.get("degree")) config.degree = static_cast<int>(parse_count("degree", *v));
  if (auto v = opts.get("keep"); v && *v != "auto") {
    const auto k = parse_count("keep", *v);
    if (k == 0) throw InvalidArgumentError("--keep must be positive");
    config.keep = static_cast<std::size_t>(k);
  }
  if (auto v = opts.get("threshold")) config.threshold = parse_real("threshold", *v);
  if (auto v = opts.get("gmin")) {
    config.g_min = parse_real("gmin", *v);
    if (!(config.g_min > 0.0 && config.g_min <= 1.0)) throw InvalidArgumentError("--gmin must lie in (0, 1]");
  }
  if (auto v = opts.get("kernel")) config.kernel = parse_kernel(*v);
  if (auto v = opts.get("bandwidth")) {
    config.bandwidth = parse_real("bandwidth", *v);
    if (!(*config.bandwidth > 0.0)) throw InvalidArgumentError("--bandwidth must be positive");
  }
  config.threads = resolve_threads(opts);
  return config;
}

inline io::InputTable read_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgumentError("cannot open input file '" + path + "'");
  return io::read_csv(in);
}

// Routes the primary output to --output when given, else to `fallback`.
class Sink {
 public:
  Sink(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path) {
      file_.open(*path);
      if (!file_) throw InvalidArgumentError("cannot open output file '" + *path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline int cmd_screen(const Options& opts, std::ostream& out, std::ostream& err) {
  auto config = screening_config(opts);
  config.method = parse_method(opts.get_or("method", "qasis"));
  const auto levels = split_list(opts.get_or("alpha", "0.5"));
  if (levels.size() != 1) throw InvalidArgumentError("screen takes a single --alpha level");
  config.alpha = parse_level(levels.front());

  const auto table = read_input(opts.require("input"));
  const auto data = io::split_table(table, opts.get_or("response", "y"), opts.get("status"));
  if (uses_censoring(config.method) && !data.status) {
    throw InvalidArgumentError(std::string("method ") + to_string(config.method) + " needs --status");
  }
  const auto result = data.status ? screen(data.X, data.samples(), config) : screen(data.X, data.y, config);

  const auto output = opts.get("output");
  Sink sink(output, out);
  io::write_ranking_csv(sink.stream(), result, data.feature_names);
  io::write_screen_summary(output ? out : err, result, data.feature_names);
  return kExitOk;
}

inline int cmd_simulate(const Options& opts, std::ostream& out, std::ostream& err) {
  BenchmarkSpec spec;
  spec.example = parse_example(opts.require("example"));
  spec.methods.clear();
  for (const auto& m : split_list(opts.get_or("method", "qasis"))) spec.methods.push_back(parse_method(m));
  spec.alphas.clear();
  for (const auto& a : split_list(opts.get_or("alpha", "0.5"))) spec.alphas.push_back(parse_level(a));
  spec.reps = parse_count("reps", opts.get_or("reps", "100"));
  spec.master_seed = parse_count("seed", opts.get_or("seed", "1"));
  if (auto v = opts.get("n")) spec.n = parse_count("n", *v);
  if (auto v = opts.get("p")) spec.p = parse_count("p", *v);
  spec.screening = screening_config(opts);
  spec.threads = spec.screening.threads;
  spec.screening.threads = 1;

  const auto report = run_benchmark(spec);
  const auto output = opts.get("output");
  Sink sink(output, out);
  sink.stream() << io::benchmark_json(report).dump(2) << '\n';
  io::write_benchmark_table(output ? out : err, report);
  return kExitOk;
}

inline int cmd_km(const Options& opts, std::ostream& out, std::ostream&) {
  const auto target_name = opts.get_or("target", "event");
  CurveTarget target;
  if (target_name == "event") {
    target = CurveTarget::event_survival;
  } else if (target_name == "censoring") {
    target = CurveTarget::censoring_survival;
  } else {
    throw InvalidArgumentError("--target must be 'event' or 'censoring'");
  }
  const auto table = read_input(opts.require("input"));
  const auto response = opts.get_or("response", "y");
  const auto col = table.find(response);
  if (!col) throw InvalidArgumentError("response column '" + response + "' not found in header");
  std::vector<CensoredSample> samples(table.rows);
  for (std::size_t i = 0; i < table.rows; ++i) samples[i] = {table.columns[*col][i], 1};
  if (auto status = opts.get("status")) {
    const auto scol = table.find(*status);
    if (!scol) throw InvalidArgumentError("status column '" + *status + "' not found in header");
    for (std::size_t i = 0; i < table.rows; ++i) {
      const double v = table.columns[*scol][i];
      if (v != 0.0 && v != 1.0) throw io::ParseError(table.line_numbers[i], "status must be 0 or 1");
      samples[i].delta = static_cast<int>(v);
    }
  }
  const auto curve = fit_km(samples, target);
  Sink sink(opts.get("output"), out);
  io::write_km_csv(sink.stream(), curve);
  return kExitOk;
}

inline int cmd_generate(const Options& opts, std::ostream& out, std::ostream&) {
  const auto id = parse_example(opts.require("example"));
  const auto seed = parse_count("seed", opts.get_or("seed", "1"));
  const auto n = opts.get("n") ? parse_count("n", *opts.get("n")) : 0;
  const auto p = opts.get("p") ? parse_count("p", *opts.get("p")) : 0;
  const auto inst = generate(id, seed, n, p);
  Sink sink(opts.get("output"), out);
  io::write_instance_csv(sink.stream(), inst);
  return kExitOk;
}

// Maps an exception to its exit code and reports it.
inline int report_failure(std::exception_ptr failure, std::ostream& err) {
  try {
    std::rethrow_exception(failure);
  } catch (const ReplicationError& e) {
    err << "error: " << e.what() << '\n';
    if (e.cause()) {
      try {
        std::rethrow_exception(e.cause());
      } catch (const UnreachableQuantileError&) {
        return kExitInfeasible;
      } catch (const DegenerateNeighborhoodError&) {
        return kExitInfeasible;
      } catch (const std::invalid_argument&) {
        return kExitInput;
      } catch (const std::domain_error&) {
        return kExitInput;
      } catch (...) {
      }
    }
    return 1;
  } catch (const UnreachableQuantileError& e) {
    err << "error: " << e.what() << "; the largest usable alpha is " << io::format_double(e.max_identifiable())
        << '\n';
    return kExitInfeasible;
  } catch (const DegenerateNeighborhoodError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantile-adaptive sure independence screening"};
  app.name("qasis");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::map<std::string, std::string> raw;
  struct Registered {
    CLI::App* sub;
    std::string key;
    CLI::Option* option;
  };
  std::vector<Registered> registered;
  auto add = [&](CLI::App* sub, const std::string& key, const std::string& names, const std::string& help) {
    registered.push_back({sub, key, sub->add_option(names, raw[sub->get_name() + "." + key], help)});
  };
  auto add_screening = [&](CLI::App* sub) {
    add(sub, "method", "--method,--methods", "qasis, qasis_censored, qasis_local, nis or naive");
    add(sub, "alpha", "--alpha,--alphas", "quantile level(s), comma separated");
    add(sub, "basis", "--basis", "number of B-spline functions or 'auto'");
    add(sub, "degree", "--degree", "spline degree");
    add(sub, "keep", "--keep", "number of features to keep or 'auto'");
    add(sub, "threshold", "--threshold", "keep every feature whose utility reaches this value");
    add(sub, "gmin", "--gmin", "floor on the censoring survival in the weights");
    add(sub, "kernel", "--kernel", "epanechnikov, gaussian or uniform");
    add(sub, "bandwidth", "--bandwidth", "kernel bandwidth on the rescaled covariate");
    add(sub, "threads", "--threads", "worker threads (0 for all cores)");
  };
  std::map<std::string, std::string> config_path;
  auto add_common = [&](CLI::App* sub) {
    add(sub, "output", "-o,--output", "output file (default standard output)");
    sub->add_option("--config", config_path[sub->get_name()], "JSON document of option values");
  };

  auto* screen_cmd = app.add_subcommand("screen", "rank the features of a CSV file");
  add(screen_cmd, "input", "--input", "input CSV file");
  add(screen_cmd, "response", "--response", "response column (default y)");
  add(screen_cmd, "status", "--status", "event indicator column, 1 event 0 censored");
  add_screening(screen_cmd);
  add_common(screen_cmd);

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo benchmark on a simulated design");
  add(simulate_cmd, "example", "--example", "1a, 1b, 1c, 2, 3a, 3b or 4");
  add(simulate_cmd, "reps", "--reps", "replications (default 100)");
  add(simulate_cmd, "seed", "--seed", "master seed (default 1)");
  add(simulate_cmd, "n", "--n", "sample size (default per design)");
  add(simulate_cmd, "p", "--p", "number of features (default per design)");
  add_screening(simulate_cmd);
  add_common(simulate_cmd);

  auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier curve of a CSV column");
  add(km_cmd, "input", "--input", "input CSV file");
  add(km_cmd, "response", "--response", "time column (default y)");
  add(km_cmd, "status", "--status", "event indicator column");
  add(km_cmd, "target", "--target", "event or censoring");
  add_common(km_cmd);

  auto* generate_cmd = app.add_subcommand("generate", "write one simulated instance as CSV");
  add(generate_cmd, "example", "--example", "1a, 1b, 1c, 2, 3a, 3b or 4");
  add(generate_cmd, "seed", "--seed", "instance seed (default 1)");
  add(generate_cmd, "n", "--n", "sample size");
  add(generate_cmd, "p", "--p", "number of features");
  add_common(generate_cmd);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    detail::Options opts;
    const auto& path = config_path[active->get_name()];
    if (!path.empty()) opts.load_config(path);
    for (const auto& [sub, key, option] : registered) {
      if (sub == active && option->count() > 0) {
        opts.set_flag(key, raw[active->get_name() + "." + key]);
      }
    }
    if (active == screen_cmd) return detail::cmd_screen(opts, out, err);
    if (active == simulate_cmd) return detail::cmd_simulate(opts, out, err);
    if (active == km_cmd) return detail::cmd_km(opts, out, err);
    return detail::cmd_generate(opts, out, err);
  } catch (...) {
    return detail::report_failure(std::current_exception(), err);
  }
}

}  // namespace qasis::cli
