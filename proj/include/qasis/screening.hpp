#pragma once

// Marginal quantile-adaptive screening: each covariate is rescaled to [0,1],
// the response is regressed on a B-spline expansion of that covariate alone,
// and the feature is scored by the mean squared deviation of the fitted
// marginal quantile curve from the unconditional quantile.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qasis/errors.hpp"
#include "qasis/parallel.hpp"
#include "qasis/quantile_solver.hpp"
#include "qasis/spline_basis.hpp"
#include "qasis/survival.hpp"

namespace qasis {

enum class Method {
  qasis,           // complete-data quantile screening
  qasis_censored,  // inverse weighting by a global reverse Kaplan-Meier
  qasis_local,     // inverse weighting by a covariate-local reverse Kaplan-Meier
  nis,             // least-squares spline screening centred at the mean
  naive,           // qasis on observed times, censoring ignored
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::qasis: return "qasis";
    case Method::qasis_censored: return "qasis_censored";
    case Method::qasis_local: return "qasis_local";
    case Method::nis: return "nis";
    case Method::naive: return "naive";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  if (name == "qasis") return Method::qasis;
  if (name == "qasis_censored") return Method::qasis_censored;
  if (name == "qasis_local" || name == "lqasis") return Method::qasis_local;
  if (name == "nis") return Method::nis;
  if (name == "naive") return Method::naive;
  throw InvalidArgumentError("unknown screening method '" + name + "'");
}

inline bool uses_censoring(Method m) { return m == Method::qasis_censored || m == Method::qasis_local; }

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::epanechnikov: return "epanechnikov";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::uniform: return "uniform";
  }
  return "unknown";
}

inline KernelKind parse_kernel(const std::string& name) {
  if (name == "epanechnikov") return KernelKind::epanechnikov;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "uniform") return KernelKind::uniform;
  throw InvalidArgumentError("unknown kernel '" + name + "'");
}

struct ScreeningConfig {
  double alpha = 0.5;
  std::optional<int> num_basis;  // default n^(1/5) rounded to the nearest integer, at least degree + 1
  std::optional<int> degree;     // default min(3, num_basis - 1)
  Method method = Method::qasis;
  std::optional<std::size_t> keep;  // default floor(n / ln n)
  std::optional<double> threshold;  // when set, overrides keep
  double g_min = 0.05;
  KernelKind kernel = KernelKind::epanechnikov;
  std::optional<double> bandwidth;  // default n^(-1/4)
  unsigned threads = 1;
  SolverOptions solver;
};

struct BasisChoice {
  int num_basis;
  int degree;
};

inline BasisChoice resolve_basis(const ScreeningConfig& config, std::size_t n) {
  const int rule = std::max(2, static_cast<int>(std::lround(std::pow(static_cast<double>(n), 0.2))));
  BasisChoice choice{};
  if (config.degree) {
    choice.degree = *config.degree;
    choice.num_basis = config.num_basis.value_or(std::max(choice.degree + 1, rule));
  } else {
    choice.num_basis = config.num_basis.value_or(rule);
    choice.degree = std::min(3, choice.num_basis - 1);
  }
  if (choice.degree < 0 || choice.num_basis < choice.degree + 1 || choice.num_basis < 2) {
    throw InvalidArgumentError("invalid basis: num_basis=" + std::to_string(choice.num_basis) +
                               " degree=" + std::to_string(choice.degree));
  }
  return choice;
}

/// floor(n / ln n), at least 1.
inline std::size_t default_keep(std::size_t n) {
  if (n < 3) return 1;
  const double k = std::floor(static_cast<double>(n) / std::log(static_cast<double>(n)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

inline double default_bandwidth(std::size_t n) { return std::pow(static_cast<double>(n), -0.25); }

enum class FeatureStatus {
  ok,
  constant,        // no variation; utility fixed at 0
  rank_deficient,  // spline design lost rank on the weighted rows
  not_converged,   // solver hit its iteration limit
  failed,          // fit raised an error; utility set to 0
};

inline const char* to_string(FeatureStatus s) {
  switch (s) {
    case FeatureStatus::ok: return "ok";
    case FeatureStatus::constant: return "constant";
    case FeatureStatus::rank_deficient: return "rank_deficient";
    case FeatureStatus::not_converged: return "not_converged";
    case FeatureStatus::failed: return "failed";
  }
  return "unknown";
}

struct Selection {
  std::vector<std::size_t> ranking;   // feature indices by decreasing utility
  std::vector<std::size_t> selected;  // ascending feature indices
};

/// Stable descending sort with ties broken by ascending index; selection is
/// the top `keep` features, or every feature with utility >= threshold.
inline Selection rank_and_select(std::span<const double> utilities, std::size_t keep,
                                 std::optional<double> threshold = std::nullopt) {
  Selection s;
  s.ranking.resize(utilities.size());
  std::iota(s.ranking.begin(), s.ranking.end(), std::size_t{0});
  std::stable_sort(s.ranking.begin(), s.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return utilities[a] > utilities[b]; });
  if (threshold) {
    for (std::size_t j = 0; j < utilities.size(); ++j) {
      if (utilities[j] >= *threshold) s.selected.push_back(j);
    }
  } else {
    const std::size_t count = std::min(keep, utilities.size());
    s.selected.assign(s.ranking.begin(), s.ranking.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(s.selected.begin(), s.selected.end());
  }
  return s;
}

struct ScreeningResult {
  std::vector<double> utilities;
  std::vector<std::size_t> ranking;
  std::vector<std::size_t> selected;
  std::vector<FeatureStatus> status;
  ScreeningConfig config;  // as requested
  BasisChoice basis{};
  std::size_t keep = 0;
  double center = 0.0;  // unconditional quantile (or mean for nis)
  double bandwidth = 0.0;

  bool is_selected(std::size_t j) const {
    return std::binary_search(selected.begin(), selected.end(), j);
  }
};

struct UtilityOutcome {
  double utility = 0.0;
  FeatureStatus status = FeatureStatus::ok;
};

/// n^-1 sum_i (pi(x_i)' beta - center)^2 for one covariate already scaled to
/// [0,1]. `least_squares` selects the L2 fit instead of the check loss.
inline UtilityOutcome marginal_utility(std::span<const double> scaled_column, const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& weights, double center, const BSplineBasis& basis,
                                       double alpha, bool least_squares, const SolverOptions& solver = {}) {
  const auto n = scaled_column.size();
  if (n == 0) throw EmptyInputError("empty covariate column");
  if (static_cast<std::size_t>(response.size()) != n || static_cast<std::size_t>(weights.size()) != n) {
    throw InvalidArgumentError("covariate, response and weights differ in length");
  }
  const auto [lo, hi] = std::minmax_element(scaled_column.begin(), scaled_column.end());
  if (*lo == *hi) return {0.0, FeatureStatus::constant};

  const Eigen::MatrixXd design = design_matrix(basis, scaled_column);
  const FitResult fit = least_squares ? fit_least_squares(design, response, weights)
                                      : fit_weighted_qr({design, response, weights, alpha}, solver);
  const Eigen::ArrayXd centred = (design * fit.coefficients).array() - center;
  UtilityOutcome out;
  out.utility = centred.square().mean();
  if (fit.status == FitStatus::degenerate) out.status = FeatureStatus::rank_deficient;
  if (fit.status == FitStatus::iteration_limit) out.status = FeatureStatus::not_converged;
  return out;
}

/// Complete-data convenience: scales the raw column, centres at the sample
/// quantile (or mean for least squares) and uses unit weights.
inline double marginal_utility(std::span<const double> raw_column, std::span<const double> y,
                               const ScreeningConfig& config) {
  const auto n = y.size();
  if (raw_column.size() != n) throw InvalidArgumentError("covariate and response differ in length");
  const auto scaler = FeatureScaler::fit(raw_column);
  if (scaler.degenerate()) return 0.0;
  const auto choice = resolve_basis(config, n);
  const auto basis = BSplineBasis::make(choice.num_basis, choice.degree);
  const bool ls = config.method == Method::nis;
  const Eigen::VectorXd response = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  const double center = ls ? response.mean() : sample_quantile(y, config.alpha);
  const auto scaled = scaler.apply(raw_column);
  return marginal_utility(scaled, response, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)), center, basis,
                          config.alpha, ls, config.solver)
      .utility;
}

namespace detail {

inline void validate_screen_inputs(const Eigen::MatrixXd& X, std::size_t n, const ScreeningConfig& config) {
  if (static_cast<std::size_t>(X.rows()) != n) {
    throw InvalidArgumentError("design has " + std::to_string(X.rows()) + " rows but response has " +
                               std::to_string(n) + " entries");
  }
  if (X.cols() < 1) throw InvalidArgumentError("need at least one feature");
  if (n < 10) throw InvalidArgumentError("screening needs at least 10 observations");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  if (config.keep && *config.keep < 1) throw InvalidArgumentError("keep must be at least 1");
  if (!(config.g_min > 0.0 && config.g_min <= 1.0)) throw DomainError("weight floor must lie in (0,1]");
  if (config.bandwidth && !(*config.bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  if (!X.allFinite()) throw DomainError("design contains non-finite values");
}

struct ScreenInputs {
  Eigen::VectorXd response;
  std::vector<CensoredSample> samples;  // only for censored methods
  Eigen::VectorXd global_weights;       // unit or global IPW weights
  double center = 0.0;
};

inline ScreeningResult run_screen(const Eigen::MatrixXd& X, const ScreenInputs& in, const ScreeningConfig& config) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  ScreeningResult result;
  result.config = config;
  result.basis = resolve_basis(config, n);
  result.keep = config.keep.value_or(default_keep(n));
  result.center = in.center;
  result.bandwidth = config.bandwidth.value_or(default_bandwidth(n));
  result.utilities.assign(p, 0.0);
  result.status.assign(p, FeatureStatus::ok);

  const auto basis = BSplineBasis::make(result.basis.num_basis, result.basis.degree);
  const bool ls = config.method == Method::nis;
  const KernelSpec kernel{config.kernel, result.bandwidth};

  parallel_for(p, config.threads, [&](std::size_t j) {
    try {
      const auto column = std::span<const double>(X.col(static_cast<Eigen::Index>(j)).data(), n);
      const auto scaler = FeatureScaler::fit(column);
      if (scaler.degenerate()) {
        result.status[j] = FeatureStatus::constant;
        return;
      }
      const auto scaled = scaler.apply(column);
      Eigen::VectorXd weights;
      if (config.method == Method::qasis_local) {
        weights = Eigen::Map<const Eigen::VectorXd>(
            local_ipw_weights(in.samples, scaled, kernel, config.g_min).data(), static_cast<Eigen::Index>(n));
      }
      const auto outcome = marginal_utility(scaled, in.response,
                                            config.method == Method::qasis_local ? weights : in.global_weights,
                                            in.center, basis, config.alpha, ls, config.solver);
      result.utilities[j] = outcome.utility;
      result.status[j] = outcome.status;
    } catch (const std::exception&) {
      result.utilities[j] = 0.0;
      result.status[j] = FeatureStatus::failed;
    }
  });

  auto selection = rank_and_select(result.utilities, result.keep, config.threshold);
  result.ranking = std::move(selection.ranking);
  result.selected = std::move(selection.selected);
  return result;
}

}  // namespace detail

/// Complete-data screening (methods qasis, naive, nis).
inline ScreeningResult screen(const Eigen::MatrixXd& X, std::span<const double> y, const ScreeningConfig& config) {
  if (uses_censoring(config.method)) {
    throw InvalidArgumentError(std::string("method ") + to_string(config.method) +
                               " needs censoring indicators");
  }
  detail::validate_screen_inputs(X, y.size(), config);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw DomainError("response must be finite", {i});
  }
  detail::ScreenInputs in;
  in.response = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  in.global_weights = Eigen::VectorXd::Ones(in.response.size());
  in.center = config.method == Method::nis ? in.response.mean() : sample_quantile(y, config.alpha);
  return detail::run_screen(X, in, config);
}

/// Screening with a right-censored response. qasis_censored weights events by
/// the inverse global censoring survival, qasis_local recomputes a local
/// censoring survival per feature; both centre at the Kaplan-Meier quantile.
/// The remaining methods use the observed times as if complete.
inline ScreeningResult screen(const Eigen::MatrixXd& X, std::span<const CensoredSample> samples,
                              const ScreeningConfig& config) {
  if (!uses_censoring(config.method)) {
    std::vector<double> times(samples.size());
    std::transform(samples.begin(), samples.end(), times.begin(), [](const CensoredSample& s) { return s.y_star; });
    return screen(X, times, config);
  }
  detail::validate_screen_inputs(X, samples.size(), config);
  detail::validate_samples(samples);

  detail::ScreenInputs in;
  in.response.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) in.response[static_cast<Eigen::Index>(i)] = samples[i].y_star;
  in.samples.assign(samples.begin(), samples.end());
  in.center = km_quantile(fit_km(samples, CurveTarget::event_survival), config.alpha);
  if (config.method == Method::qasis_censored) {
    const auto g = fit_km(samples, CurveTarget::censoring_survival);
    const auto w = ipw_weights(samples, g, config.g_min);
    in.global_weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  return detail::run_screen(X, in, config);
}

}  // namespace qasis
