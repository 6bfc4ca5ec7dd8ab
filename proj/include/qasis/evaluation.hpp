#pragma once

// Screening quality criteria and the Monte-Carlo replication driver.
//
//   R  minimum model size: length of the shortest ranking prefix holding
//      every active variable.
//   S  fraction of active variables inside the selected set.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasis/errors.hpp"
#include "qasis/parallel.hpp"
#include "qasis/quantile_solver.hpp"
#include "qasis/rng.hpp"
#include "qasis/screening.hpp"
#include "qasis/simgen.hpp"

namespace qasis {

inline std::size_t minimum_model_size(std::span<const std::size_t> ranking, std::span<const std::size_t> true_active) {
  if (true_active.empty()) throw InvalidArgumentError("active set must be nonempty");
  std::vector<std::size_t> position(ranking.size(), 0);
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (ranking[k] >= ranking.size()) throw InvalidArgumentError("ranking is not a permutation");
    position[ranking[k]] = k + 1;
  }
  std::size_t worst = 0;
  for (std::size_t j : true_active) {
    if (j >= ranking.size()) {
      throw InvalidArgumentError("active index " + std::to_string(j) + " exceeds the number of features");
    }
    worst = std::max(worst, position[j]);
  }
  return worst;
}

inline double proportion_selected(std::span<const std::size_t> selected, std::span<const std::size_t> true_active) {
  if (true_active.empty()) throw InvalidArgumentError("active set must be nonempty");
  std::size_t hits = 0;
  for (std::size_t j : true_active) {
    if (std::find(selected.begin(), selected.end(), j) != selected.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(true_active.size());
}

struct ReplicationResult {
  std::size_t R = 0;
  double S = 0.0;
  bool sure_screen = false;
};

inline ReplicationResult evaluate_screen(const ScreeningResult& result, std::span<const std::size_t> true_active) {
  ReplicationResult r;
  r.R = minimum_model_size(result.ranking, true_active);
  r.S = proportion_selected(result.selected, true_active);
  r.sure_screen = std::all_of(true_active.begin(), true_active.end(),
                              [&](std::size_t j) { return result.is_selected(j); });
  return r;
}

struct CriteriaSummary {
  double median_R = 0.0;
  double IQR_R = 0.0;  // Q3 - Q1
  double mean_S = 0.0;
  double sure_screen_rate = 0.0;
  std::size_t replications = 0;
};

/// Median and quartiles use the same left-continuous inverse as sample_quantile.
inline CriteriaSummary summarize(std::span<const ReplicationResult> reps) {
  if (reps.empty()) throw EmptyInputError("no replications to summarize");
  std::vector<double> sizes;
  sizes.reserve(reps.size());
  CriteriaSummary s;
  for (const auto& r : reps) {
    sizes.push_back(static_cast<double>(r.R));
    s.mean_S += r.S;
    s.sure_screen_rate += r.sure_screen ? 1.0 : 0.0;
  }
  const auto count = static_cast<double>(reps.size());
  s.mean_S /= count;
  s.sure_screen_rate /= count;
  s.median_R = sample_quantile(sizes, 0.5);
  s.IQR_R = sample_quantile(sizes, 0.75) - sample_quantile(sizes, 0.25);
  s.replications = reps.size();
  return s;
}

/// Screening failure inside one replication.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(std::size_t replication, const std::string& what, std::exception_ptr cause)
      : std::runtime_error("replication " + std::to_string(replication) + ": " + what),
        replication_(replication),
        cause_(std::move(cause)) {}

  std::size_t replication() const noexcept { return replication_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::size_t replication_;
  std::exception_ptr cause_;
};

struct BenchmarkSpec {
  ExampleId example = ExampleId::e1b;
  std::size_t n = 0;  // 0: the design's default size
  std::size_t p = 0;
  std::vector<Method> methods{Method::qasis};
  std::vector<double> alphas{0.5};
  std::size_t reps = 100;
  std::uint64_t master_seed = 1;
  ScreeningConfig screening;  // alpha and method are overridden per row
  unsigned threads = 1;       // replications run in parallel
};

struct BenchmarkRow {
  Method method = Method::qasis;
  std::optional<double> alpha;  // empty for nis, which has no quantile level
  std::size_t p_star = 0;
  CriteriaSummary summary;
  std::vector<ReplicationResult> replications;  // in replication order
};

struct BenchmarkReport {
  BenchmarkSpec spec;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t keep = 0;
  std::vector<BenchmarkRow> rows;
};

inline BenchmarkReport run_benchmark(const BenchmarkSpec& spec) {
  if (spec.reps < 1) throw InvalidArgumentError("need at least one replication");
  if (spec.methods.empty()) throw InvalidArgumentError("need at least one method");
  const bool censored_design = spec.example == ExampleId::e4;
  for (Method m : spec.methods) {
    if (uses_censoring(m) && !censored_design) {
      throw InvalidArgumentError(std::string("method ") + to_string(m) + " needs a censored design (example 4)");
    }
    if (m != Method::nis && spec.alphas.empty()) throw InvalidArgumentError("need at least one quantile level");
  }

  BenchmarkReport report;
  report.spec = spec;
  const auto size = default_size(spec.example);
  report.n = spec.n ? spec.n : size.n;
  report.p = spec.p ? spec.p : size.p;
  report.keep = spec.screening.keep.value_or(default_keep(report.n));

  // One row per (method, alpha); nis gets a single alpha-free row.
  for (Method m : spec.methods) {
    if (m == Method::nis) {
      report.rows.push_back({m, std::nullopt, 0, {}, {}});
    } else {
      for (double a : spec.alphas) report.rows.push_back({m, a, 0, {}, {}});
    }
  }
  for (auto& row : report.rows) row.replications.resize(spec.reps);

  parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
    try {
      const auto inst = generate(spec.example, stream_seed(spec.master_seed, rep), report.n, report.p);
      for (auto& row : report.rows) {
        ScreeningConfig config = spec.screening;
        config.method = row.method;
        config.alpha = row.alpha.value_or(0.5);
        config.threads = 1;
        const auto& active = row.alpha ? inst.active.at(*row.alpha) : inst.active.any_level();
        const auto result = inst.is_censored() ? screen(inst.X, inst.censored, config) : screen(inst.X, inst.y, config);
        row.replications[rep] = evaluate_screen(result, active);
      }
    } catch (const std::exception& e) {
      throw ReplicationError(rep, e.what(), std::current_exception());
    }
  });

  const auto active = active_sets(spec.example);
  for (auto& row : report.rows) {
    row.p_star = (row.alpha ? active.at(*row.alpha) : active.any_level()).size();
    row.summary = summarize(row.replications);
  }
  return report;
}

}  // namespace qasis
