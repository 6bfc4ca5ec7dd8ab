#pragma once

// Seeded generators for the simulation designs: an AR(1) Gaussian covariate
// matrix and four response models (additive, heteroscedastic index, complex
// heteroscedastic, and a censored variant of the additive model).
//
// Draw order per instance: the covariate matrix row by row, then one error
// per row, then (censored design only) a mixture component uniform and a
// normal draw per row.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qasis/errors.hpp"
#include "qasis/rng.hpp"
#include "qasis/survival.hpp"

namespace qasis {

struct DesignSpec {
  std::size_t n = 400;
  std::size_t p = 1000;
  double rho = 0.0;  // corr(X_i, X_j) = rho^|i-j|
  std::uint64_t seed = 0;
};

/// Rows i.i.d. N(0, Sigma), Sigma_ij = rho^|i-j|, via
/// X_1 = Z_1, X_j = rho X_{j-1} + sqrt(1 - rho^2) Z_j.
inline Eigen::MatrixXd sample_ar1_gaussian(std::size_t n, std::size_t p, double rho, CounterRng& rng) {
  if (n < 1 || p < 1) throw InvalidArgumentError("design needs n >= 1 and p >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("rho must lie in [0,1)");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double prev = normal(rng);
    X(i, 0) = prev;
    for (Eigen::Index j = 1; j < X.cols(); ++j) {
      prev = rho * prev + innovation * normal(rng);
      X(i, j) = prev;
    }
  }
  return X;
}

inline Eigen::MatrixXd sample_ar1_gaussian(const DesignSpec& spec) {
  CounterRng rng(spec.seed);
  return sample_ar1_gaussian(spec.n, spec.p, spec.rho, rng);
}

// Additive component functions.
inline double g1(double x) { return x; }
inline double g2(double x) { return (2.0 * x - 1.0) * (2.0 * x - 1.0); }
inline double g3(double x) {
  const double s = std::sin(2.0 * std::numbers::pi * x);
  return s / (2.0 - s);
}
inline double g4(double x) {
  const double s = std::sin(2.0 * std::numbers::pi * x);
  const double c = std::cos(2.0 * std::numbers::pi * x);
  return 0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s;
}

enum class ExampleId { e1a, e1b, e1c, e2, e3a, e3b, e4 };

inline const char* to_string(ExampleId id) {
  switch (id) {
    case ExampleId::e1a: return "1a";
    case ExampleId::e1b: return "1b";
    case ExampleId::e1c: return "1c";
    case ExampleId::e2: return "2";
    case ExampleId::e3a: return "3a";
    case ExampleId::e3b: return "3b";
    case ExampleId::e4: return "4";
  }
  return "unknown";
}

inline ExampleId parse_example(const std::string& name) {
  if (name == "1a") return ExampleId::e1a;
  if (name == "1b") return ExampleId::e1b;
  if (name == "1c") return ExampleId::e1c;
  if (name == "2") return ExampleId::e2;
  if (name == "3a") return ExampleId::e3a;
  if (name == "3b") return ExampleId::e3b;
  if (name == "4") return ExampleId::e4;
  throw InvalidArgumentError("unknown example '" + name + "' (expected 1a, 1b, 1c, 2, 3a, 3b or 4)");
}

struct ExampleSize {
  std::size_t n;
  std::size_t p;
};

inline ExampleSize default_size(ExampleId id) {
  switch (id) {
    case ExampleId::e2: return {200, 2000};
    case ExampleId::e3a:
    case ExampleId::e3b: return {400, 5000};
    default: return {400, 1000};
  }
}

/// True active sets (0-based feature indices). Models whose active set is the
/// same at every level keep both lists equal.
struct ActiveSets {
  std::vector<std::size_t> at_median;
  std::vector<std::size_t> elsewhere;

  const std::vector<std::size_t>& at(double alpha) const {
    return std::abs(alpha - 0.5) < 1e-12 ? at_median : elsewhere;
  }
  /// Variables active at some level.
  const std::vector<std::size_t>& any_level() const { return elsewhere; }
};

struct ExampleInstance {
  ExampleId id = ExampleId::e1b;
  Eigen::MatrixXd X;                     // raw covariates, n x p
  std::vector<double> y;                 // response (latent response for the censored design)
  std::vector<CensoredSample> censored;  // observed (y*, delta); censored design only
  ActiveSets active;

  bool is_censored() const { return !censored.empty(); }
};

namespace detail {

inline std::vector<std::size_t> index_range(std::size_t first, std::size_t last) {
  std::vector<std::size_t> out;
  for (std::size_t j = first; j <= last; ++j) out.push_back(j);
  return out;
}

inline void require_columns(std::size_t p, std::size_t needed, ExampleId id) {
  if (p < needed) {
    throw InvalidArgumentError(std::string("example ") + to_string(id) + " needs p >= " + std::to_string(needed));
  }
}

inline std::vector<double> additive_response(const Eigen::MatrixXd& X, CounterRng& rng, bool cauchy) {
  std::vector<double> y(static_cast<std::size_t>(X.rows()));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::cauchy_distribution<double> heavy(0.0, 1.0);
  const double scale = std::sqrt(1.74);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double eps = cauchy ? heavy(rng) : normal(rng);
    y[static_cast<std::size_t>(i)] =
        5.0 * g1(X(i, 0)) + 3.0 * g2(X(i, 1)) + 4.0 * g3(X(i, 2)) + 6.0 * g4(X(i, 3)) + scale * eps;
  }
  return y;
}

}  // namespace detail

/// Active sets of each design, independent of the draw.
inline ActiveSets active_sets(ExampleId id) {
  ActiveSets a;
  switch (id) {
    case ExampleId::e1a:
    case ExampleId::e1b:
    case ExampleId::e1c:
    case ExampleId::e4:
      a.at_median = detail::index_range(0, 3);
      a.elsewhere = a.at_median;
      break;
    case ExampleId::e2:
      a.at_median = detail::index_range(0, 4);
      a.elsewhere = a.at_median;
      for (std::size_t j : {19, 20, 21}) a.elsewhere.push_back(j);
      break;
    case ExampleId::e3a:
    case ExampleId::e3b:
      a.at_median = {0, 1};
      a.elsewhere = {0, 1};
      for (std::size_t j = 17; j <= 29; ++j) a.elsewhere.push_back(j);
      break;
  }
  return a;
}

/// Additive model Y = 5 g1(X1) + 3 g2(X2) + 4 g3(X3) + 6 g4(X4) + sqrt(1.74) eps.
/// Case a: rho = 0; b: rho = 0.8; c: rho = 0.8 with Cauchy errors.
inline ExampleInstance gen_example1(char which_case, std::uint64_t seed, std::size_t n = 400, std::size_t p = 1000) {
  ExampleInstance inst;
  double rho = 0.8;
  switch (which_case) {
    case 'a': inst.id = ExampleId::e1a; rho = 0.0; break;
    case 'b': inst.id = ExampleId::e1b; break;
    case 'c': inst.id = ExampleId::e1c; break;
    default: throw InvalidArgumentError(std::string("example 1 has cases a, b, c; got ") + which_case);
  }
  detail::require_columns(p, 4, inst.id);
  CounterRng rng(seed);
  inst.X = sample_ar1_gaussian(n, p, rho, rng);
  inst.y = detail::additive_response(inst.X, rng, which_case == 'c');
  inst.active = active_sets(inst.id);
  return inst;
}

/// Index model Y = 2(X1 + 0.8 X2 + 0.6 X3 + 0.4 X4 + 0.2 X5) + exp(X20 + X21 + X22) eps.
inline ExampleInstance gen_example2(std::uint64_t seed, std::size_t n = 200, std::size_t p = 2000) {
  ExampleInstance inst;
  inst.id = ExampleId::e2;
  detail::require_columns(p, 22, inst.id);
  CounterRng rng(seed);
  inst.X = sample_ar1_gaussian(n, p, 0.8, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  inst.y.resize(n);
  for (Eigen::Index i = 0; i < inst.X.rows(); ++i) {
    const auto& x = inst.X.row(i);
    const double location = 2.0 * (x(0) + 0.8 * x(1) + 0.6 * x(2) + 0.4 * x(3) + 0.2 * x(4));
    inst.y[static_cast<std::size_t>(i)] = location + std::exp(x(19) + x(20) + x(21)) * normal(rng);
  }
  inst.active = active_sets(inst.id);
  return inst;
}

/// Y = 2(X1^2 + X2^2) + 0.1 exp(X1 + X2 + X18 + ... + X30) eps (case a), or
/// with the location replaced by 2((X1 + 1)^2 + (X2 + 2)^2) (case b).
inline ExampleInstance gen_example3(char which_case, std::uint64_t seed, std::size_t n = 400,
                                    std::size_t p = 5000) {
  ExampleInstance inst;
  switch (which_case) {
    case 'a': inst.id = ExampleId::e3a; break;
    case 'b': inst.id = ExampleId::e3b; break;
    default: throw InvalidArgumentError(std::string("example 3 has cases a, b; got ") + which_case);
  }
  detail::require_columns(p, 30, inst.id);
  CounterRng rng(seed);
  inst.X = sample_ar1_gaussian(n, p, 0.8, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  inst.y.resize(n);
  for (Eigen::Index i = 0; i < inst.X.rows(); ++i) {
    const auto& x = inst.X.row(i);
    const double location = which_case == 'a'
                                ? 2.0 * (x(0) * x(0) + x(1) * x(1))
                                : 2.0 * ((x(0) + 1.0) * (x(0) + 1.0) + (x(1) + 2.0) * (x(1) + 2.0));
    double index = x(0) + x(1);
    for (Eigen::Index j = 17; j <= 29; ++j) index += x(j);
    inst.y[static_cast<std::size_t>(i)] = location + 0.1 * std::exp(index) * normal(rng);
  }
  inst.active = active_sets(inst.id);
  return inst;
}

/// Draw from 0.4 N(-5, 4) + 0.1 N(5, 1) + 0.5 N(55, 1); second parameters are variances.
inline double draw_censoring_time(CounterRng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = unit(rng);
  const double z = normal(rng);
  if (u < 0.4) return -5.0 + 2.0 * z;
  if (u < 0.5) return 5.0 + z;
  return 55.0 + z;
}

/// Latent response of case 1b censored by the normal mixture.
inline ExampleInstance gen_example4(std::uint64_t seed, std::size_t n = 400, std::size_t p = 1000) {
  ExampleInstance inst;
  inst.id = ExampleId::e4;
  detail::require_columns(p, 4, inst.id);
  CounterRng rng(seed);
  inst.X = sample_ar1_gaussian(n, p, 0.8, rng);
  inst.y = detail::additive_response(inst.X, rng, false);
  inst.censored.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = draw_censoring_time(rng);
    inst.censored[i] = {std::min(inst.y[i], c), inst.y[i] <= c ? 1 : 0};
  }
  inst.active = active_sets(inst.id);
  return inst;
}

/// Generates any design by id; size 0 means the design's default.
inline ExampleInstance generate(ExampleId id, std::uint64_t seed, std::size_t n = 0, std::size_t p = 0) {
  const auto size = default_size(id);
  if (n == 0) n = size.n;
  if (p == 0) p = size.p;
  switch (id) {
    case ExampleId::e1a: return gen_example1('a', seed, n, p);
    case ExampleId::e1b: return gen_example1('b', seed, n, p);
    case ExampleId::e1c: return gen_example1('c', seed, n, p);
    case ExampleId::e2: return gen_example2(seed, n, p);
    case ExampleId::e3a: return gen_example3('a', seed, n, p);
    case ExampleId::e3b: return gen_example3('b', seed, n, p);
    case ExampleId::e4: return gen_example4(seed, n, p);
  }
  throw InvalidArgumentError("unknown example");
}

}  // namespace qasis
