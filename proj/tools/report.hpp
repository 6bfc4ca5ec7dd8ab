#pragma once

// Machine-readable and aligned-text renderings of screening results,
// benchmark summaries and Kaplan-Meier curves.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "csv_io.hpp"
#include "qasis/evaluation.hpp"
#include "qasis/screening.hpp"
#include "qasis/survival.hpp"

namespace qasis::io {

inline std::string method_label(Method m) {
  switch (m) {
    case Method::qasis: return "QaSIS";
    case Method::qasis_censored: return "QaSIS(c)";
    case Method::qasis_local: return "LQaSIS";
    case Method::nis: return "NIS";
    case Method::naive: return "Naive";
  }
  return "?";
}

/// feature_name,utility,rank,selected,status_flag in rank order.
inline void write_ranking_csv(std::ostream& out, const ScreeningResult& result,
                              const std::vector<std::string>& feature_names) {
  out << "feature_name,utility,rank,selected,status_flag\n";
  for (std::size_t k = 0; k < result.ranking.size(); ++k) {
    const std::size_t j = result.ranking[k];
    out << feature_names[j] << ',' << format_double(result.utilities[j]) << ',' << (k + 1) << ','
        << (result.is_selected(j) ? 1 : 0) << ',' << to_string(result.status[j]) << '\n';
  }
}

inline void write_screen_summary(std::ostream& out, const ScreeningResult& result,
                                 const std::vector<std::string>& feature_names, std::size_t top = 10) {
  std::size_t flagged = 0;
  for (auto s : result.status) flagged += s != FeatureStatus::ok ? 1 : 0;
  out << "method " << to_string(result.config.method) << ", alpha " << format_double(result.config.alpha) << ", keep "
      << result.keep << " of " << result.utilities.size() << " features\n";
  out << "basis: " << result.basis.num_basis << " functions of degree " << result.basis.degree
      << "; center " << format_double(result.center) << "; flagged features " << flagged << "\n";
  out << "selected " << result.selected.size() << "; top features:";
  for (std::size_t k = 0; k < result.ranking.size() && k < top; ++k) out << ' ' << feature_names[result.ranking[k]];
  out << '\n';
}

inline nlohmann::ordered_json benchmark_json(const BenchmarkReport& report) {
  nlohmann::ordered_json j;
  j["example"] = to_string(report.spec.example);
  j["n"] = report.n;
  j["p"] = report.p;
  j["keep"] = report.keep;
  j["replications"] = report.spec.reps;
  j["seed"] = report.spec.master_seed;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["method"] = to_string(row.method);
    r["alpha"] = row.alpha ? nlohmann::ordered_json(*row.alpha) : nlohmann::ordered_json(nullptr);
    r["p_star"] = row.p_star;
    r["median_R"] = row.summary.median_R;
    r["IQR_R"] = row.summary.IQR_R;
    r["mean_S"] = row.summary.mean_S;
    r["sure_screen_rate"] = row.summary.sure_screen_rate;
    std::vector<std::size_t> sizes;
    std::vector<double> props;
    for (const auto& rep : row.replications) {
      sizes.push_back(rep.R);
      props.push_back(rep.S);
    }
    r["R"] = sizes;
    r["S"] = props;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

/// Method, p*, median R (IQR), S.
inline void write_benchmark_table(std::ostream& out, const BenchmarkReport& report) {
  char line[160];
  out << "Example " << to_string(report.spec.example) << " (n=" << report.n << ", p=" << report.p
      << ", keep=" << report.keep << ", " << report.spec.reps << " replications)\n";
  std::snprintf(line, sizeof(line), "%-24s %4s  %-16s %5s\n", "Method", "p*", "R (IQR)", "S");
  out << line;
  for (const auto& row : report.rows) {
    std::string label = method_label(row.method);
    if (row.alpha) {
      char a[32];
      std::snprintf(a, sizeof(a), " (alpha=%.2f)", *row.alpha);
      label += a;
    }
    char r[48];
    std::snprintf(r, sizeof(r), "%g (%g)", row.summary.median_R, row.summary.IQR_R);
    std::snprintf(line, sizeof(line), "%-24s %4zu  %-16s %5.2f\n", label.c_str(), row.p_star, r, row.summary.mean_S);
    out << line;
  }
}

/// t,survival at every jump of the curve.
inline void write_km_csv(std::ostream& out, const KaplanMeierCurve& curve) {
  out << "t,survival\n";
  for (std::size_t k = 0; k < curve.jump_times().size(); ++k) {
    out << format_double(curve.jump_times()[k]) << ',' << format_double(curve.survival_values()[k]) << '\n';
  }
}

}  // namespace qasis::io
