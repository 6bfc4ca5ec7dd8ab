#pragma once

// Product-limit estimators for right-censored responses: Kaplan-Meier for the
// response distribution, reverse Kaplan-Meier for the censoring survival
// function, the kernel-weighted (local) reverse Kaplan-Meier, and the inverse
// probability of censoring weights built from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qasis/errors.hpp"

namespace qasis {

/// Observed time y* = min(Y, C) with delta = 1{Y <= C}.
struct CensoredSample {
  double y_star = 0.0;
  int delta = 1;
};

enum class CurveTarget {
  event_survival,      // P(Y > t)
  censoring_survival,  // G(t) = P(C > t)
};

/// Right-continuous step function with value 1 before the first jump.
class KaplanMeierCurve {
 public:
  KaplanMeierCurve(std::vector<double> jump_times, std::vector<double> survival_values, CurveTarget target)
      : times_(std::move(jump_times)), values_(std::move(survival_values)), target_(target) {
    if (times_.size() != values_.size()) throw InvalidArgumentError("curve times/values length mismatch");
  }

  const std::vector<double>& jump_times() const noexcept { return times_; }
  /// Curve value just after each jump.
  const std::vector<double>& survival_values() const noexcept { return values_; }
  CurveTarget target() const noexcept { return target_; }

  /// S(t), right-continuous.
  double at(double t) const noexcept {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

  /// S(t-), the limit from the left.
  double left_limit(double t) const noexcept {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

  /// Largest value reached by 1 - S.
  double max_distribution() const noexcept { return values_.empty() ? 0.0 : 1.0 - values_.back(); }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  CurveTarget target_;
};

namespace detail {

inline void validate_samples(std::span<const CensoredSample> samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].delta != 0 && samples[i].delta != 1) {
      throw DomainError("censoring indicator must be 0 or 1", {i});
    }
    if (!std::isfinite(samples[i].y_star)) throw DomainError("observed time must be finite", {i});
  }
}

// Distinct observed times in ascending order with the members of each.
struct TimeGroups {
  std::vector<double> times;
  std::vector<std::size_t> start;  // size times.size() + 1, offsets into order
  std::vector<std::size_t> order;  // sample indices sorted by time
};

inline TimeGroups group_by_time(std::span<const CensoredSample> samples) {
  TimeGroups g;
  g.order.resize(samples.size());
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].y_star < samples[b].y_star;
  });
  for (std::size_t k = 0; k < g.order.size(); ++k) {
    const double t = samples[g.order[k]].y_star;
    if (g.times.empty() || t != g.times.back()) {
      g.times.push_back(t);
      g.start.push_back(k);
    }
  }
  g.start.push_back(g.order.size());
  return g;
}

}  // namespace detail

/// Product-limit estimate for the chosen target. The risk set at time t is
/// every observation with y* >= t, so tied events and censorings both stay at
/// risk for the other type: for the event curve events are processed before
/// censorings at a tie, for the censoring curve the reverse.
inline KaplanMeierCurve fit_km(std::span<const CensoredSample> samples, CurveTarget target) {
  if (samples.empty()) throw EmptyInputError("Kaplan-Meier fit needs at least one observation");
  detail::validate_samples(samples);
  const auto groups = detail::group_by_time(samples);
  const int jump_flag = target == CurveTarget::event_survival ? 1 : 0;

  std::vector<double> times, values;
  double surv = 1.0;
  std::size_t at_risk = samples.size();
  for (std::size_t g = 0; g < groups.times.size(); ++g) {
    std::size_t hits = 0;
    for (std::size_t k = groups.start[g]; k < groups.start[g + 1]; ++k) {
      if (samples[groups.order[k]].delta == jump_flag) ++hits;
    }
    if (hits > 0) {
      surv *= static_cast<double>(at_risk - hits) / static_cast<double>(at_risk);
      times.push_back(groups.times[g]);
      values.push_back(surv);
    }
    at_risk -= groups.start[g + 1] - groups.start[g];
  }
  return KaplanMeierCurve(std::move(times), std::move(values), target);
}

inline double survival_at(const KaplanMeierCurve& curve, double t) { return curve.at(t); }

/// Left-continuous inverse of the Kaplan-Meier distribution function:
/// inf{t : 1 - S(t) >= alpha}.
inline double km_quantile(const KaplanMeierCurve& curve, double alpha) {
  if (curve.target() != CurveTarget::event_survival) {
    throw InvalidArgumentError("km_quantile needs an event-survival curve");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("quantile level must lie in (0,1), got " + std::to_string(alpha));
  }
  const auto& times = curve.jump_times();
  const auto& values = curve.survival_values();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (1.0 - values[k] >= alpha - 1e-12) return times[k];
  }
  throw UnreachableQuantileError(alpha, curve.max_distribution());
}

/// delta_i / max(G(y*_i -), g_min); censored rows get exactly 0.
inline std::vector<double> ipw_weights(std::span<const CensoredSample> samples,
                                       const KaplanMeierCurve& censoring_curve, double g_min = 0.05) {
  if (censoring_curve.target() != CurveTarget::censoring_survival) {
    throw InvalidArgumentError("ipw_weights needs a censoring-survival curve");
  }
  if (!(g_min > 0.0 && g_min <= 1.0)) throw DomainError("weight floor must lie in (0,1]");
  detail::validate_samples(samples);
  std::vector<double> weights(samples.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].delta == 1) {
      weights[i] = 1.0 / std::max(censoring_curve.left_limit(samples[i].y_star), g_min);
    }
  }
  return weights;
}

enum class KernelKind { epanechnikov, gaussian, uniform };

struct KernelSpec {
  KernelKind kind = KernelKind::epanechnikov;
  double bandwidth = 0.25;
};

inline double kernel_value(KernelKind kind, double u) noexcept {
  switch (kind) {
    case KernelKind::epanechnikov: return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelKind::gaussian: return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    case KernelKind::uniform: return std::abs(u) <= 1.0 ? 0.5 : 0.0;
  }
  return 0.0;
}

/// Local reverse Kaplan-Meier G(t | x) with Nadaraya-Watson weights. Samples
/// are sorted once; each evaluation point then costs O(n).
///
/// The normalizing constant of the Nadaraya-Watson weights cancels in every
/// factor 1 - B_j / sum_{k at risk} B_k, so raw kernel values are used.
/// Censorings tied at one time are merged into a single factor.
class LocalKaplanMeier {
 public:
  LocalKaplanMeier(std::span<const CensoredSample> samples, std::span<const double> covariate_values)
      : samples_(samples.begin(), samples.end()), covariates_(covariate_values.begin(), covariate_values.end()) {
    if (samples_.size() != covariates_.size()) {
      throw InvalidArgumentError("samples and covariate values differ in length");
    }
    if (samples_.empty()) throw EmptyInputError("local Kaplan-Meier needs at least one observation");
    detail::validate_samples(samples_);
    groups_ = detail::group_by_time(samples_);
    group_of_.resize(samples_.size());
    for (std::size_t g = 0; g < groups_.times.size(); ++g) {
      for (std::size_t k = groups_.start[g]; k < groups_.start[g + 1]; ++k) group_of_[groups_.order[k]] = g;
    }
  }

  /// Replaces the conditioning covariate, keeping the time ordering.
  void set_covariate(std::span<const double> covariate_values) {
    if (covariate_values.size() != samples_.size()) {
      throw InvalidArgumentError("samples and covariate values differ in length");
    }
    covariates_.assign(covariate_values.begin(), covariate_values.end());
  }

  /// G(t | x0), right-continuous in t.
  double at(double x0, const KernelSpec& kernel, double t) {
    prepare(x0, kernel);
    const auto end = static_cast<std::size_t>(
        std::upper_bound(groups_.times.begin(), groups_.times.end(), t) - groups_.times.begin());
    return product_before(end);
  }

  /// delta_i / max(G(y*_i - | x_i), g_min) for every observation.
  std::vector<double> ipw_weights(const KernelSpec& kernel, double g_min) {
    std::vector<double> weights(samples_.size(), 0.0);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (samples_[i].delta != 1) continue;
      prepare(covariates_[i], kernel);
      weights[i] = 1.0 / std::max(product_before(group_of_[i]), g_min);
    }
    return weights;
  }

 private:
  void prepare(double x0, const KernelSpec& kernel) {
    if (!(kernel.bandwidth > 0.0)) throw DomainError("kernel bandwidth must be positive");
    const std::size_t groups = groups_.times.size();
    group_mass_.assign(groups, 0.0);
    censored_mass_.assign(groups, 0.0);
    double total = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t k = groups_.start[g]; k < groups_.start[g + 1]; ++k) {
        const std::size_t idx = groups_.order[k];
        const double kv = kernel_value(kernel.kind, (x0 - covariates_[idx]) / kernel.bandwidth);
        group_mass_[g] += kv;
        if (samples_[idx].delta == 0) censored_mass_[g] += kv;
      }
      total += group_mass_[g];
    }
    if (!(total > 0.0)) {
      throw DegenerateNeighborhoodError("kernel weights vanish at x0 = " + std::to_string(x0));
    }
    risk_mass_.assign(groups + 1, 0.0);
    for (std::size_t g = groups; g-- > 0;) risk_mass_[g] = risk_mass_[g + 1] + group_mass_[g];
  }

  // Product of the factors of groups [0, end).
  double product_before(std::size_t end) const {
    double g_hat = 1.0;
    for (std::size_t g = 0; g < end; ++g) {
      if (censored_mass_[g] > 0.0) g_hat *= (risk_mass_[g] - censored_mass_[g]) / risk_mass_[g];
    }
    return std::clamp(g_hat, 0.0, 1.0);
  }

  std::vector<CensoredSample> samples_;
  std::vector<double> covariates_;
  detail::TimeGroups groups_;
  std::vector<std::size_t> group_of_;
  std::vector<double> group_mass_, censored_mass_, risk_mass_;
};

inline double local_km(std::span<const CensoredSample> samples, std::span<const double> covariate_values,
                       double x0, const KernelSpec& kernel, double t) {
  LocalKaplanMeier local(samples, covariate_values);
  return local.at(x0, kernel, t);
}

inline std::vector<double> local_ipw_weights(std::span<const CensoredSample> samples,
                                             std::span<const double> covariate_values, const KernelSpec& kernel,
                                             double g_min = 0.05) {
  if (!(g_min > 0.0 && g_min <= 1.0)) throw DomainError("weight floor must lie in (0,1]");
  LocalKaplanMeier local(samples, covariate_values);
  return local.ipw_weights(kernel, g_min);
}

}  // namespace qasis
