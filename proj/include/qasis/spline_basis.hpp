#pragma once

// Normalized B-spline basis on [0,1] and the per-feature design matrices used
// by the marginal fits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qasis/errors.hpp"

namespace qasis {

/// Clamped B-spline basis of a given degree on [0,1] with equally spaced
/// interior knots. Basis values are nonnegative and sum to one everywhere on
/// the unit interval.
class BSplineBasis {
 public:
  /// Builds `num_basis` functions of the given degree; this places
  /// num_basis - degree - 1 equally spaced interior knots.
  static BSplineBasis make(int num_basis, int degree) {
    if (degree < 0) throw InvalidArgumentError("spline degree must be nonnegative");
    if (num_basis < 2 || num_basis < degree + 1) {
      throw InvalidArgumentError("need num_basis >= max(2, degree + 1), got num_basis=" +
                                 std::to_string(num_basis) +
                                 " degree=" + std::to_string(degree));
    }
    const int interior = num_basis - degree - 1;
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(interior));
    for (int i = 1; i <= interior; ++i) knots.push_back(static_cast<double>(i) / (interior + 1));
    return BSplineBasis(degree, std::move(knots));
  }

  /// Arbitrary interior knots, strictly increasing inside (0,1).
  BSplineBasis(int degree, std::vector<double> interior_knots)
      : degree_(degree), interior_(std::move(interior_knots)) {
    if (degree_ < 0) throw InvalidArgumentError("spline degree must be nonnegative");
    for (std::size_t i = 0; i < interior_.size(); ++i) {
      if (!(interior_[i] > 0.0 && interior_[i] < 1.0) ||
          (i > 0 && !(interior_[i] > interior_[i - 1]))) {
        throw InvalidArgumentError("interior knots must be strictly increasing inside (0,1)");
      }
    }
    if (num_basis() < 2) throw InvalidArgumentError("basis needs at least two functions");
    knots_.assign(static_cast<std::size_t>(degree_ + 1), 0.0);
    knots_.insert(knots_.end(), interior_.begin(), interior_.end());
    knots_.insert(knots_.end(), static_cast<std::size_t>(degree_ + 1), 1.0);
  }

  int degree() const noexcept { return degree_; }
  int num_basis() const noexcept { return static_cast<int>(interior_.size()) + degree_ + 1; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }
  /// Full clamped knot vector (degree+1 copies of each boundary).
  const std::vector<double>& knots() const noexcept { return knots_; }

  std::vector<double> evaluate(double t) const {
    std::vector<double> out(static_cast<std::size_t>(num_basis()));
    evaluate_into(t, out);
    return out;
  }

  /// Writes all num_basis() values at t into `out`.
  void evaluate_into(double t, std::span<double> out) const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw DomainError("spline argument " + std::to_string(t) + " outside [0,1]");
    }
    if (out.size() != static_cast<std::size_t>(num_basis())) {
      throw InvalidArgumentError("output span has wrong length for basis");
    }
    std::fill(out.begin(), out.end(), 0.0);

    // Knot span k with knots[k] <= t < knots[k+1]; t == 1 uses the last span.
    const int p = degree_;
    const int last_span = num_basis() - 1;
    int k = p;
    while (k < last_span && t >= knots_[static_cast<std::size_t>(k + 1)]) ++k;

    // Triangular de Boor scheme for the p+1 functions nonzero on the span.
    double local[kMaxDegree + 1];
    double left[kMaxDegree + 1];
    double right[kMaxDegree + 1];
    if (p > kMaxDegree) throw InvalidArgumentError("spline degree too large");
    local[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = t - knots_[static_cast<std::size_t>(k + 1 - j)];
      right[j] = knots_[static_cast<std::size_t>(k + j)] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = local[r] / (right[r + 1] + left[j - r]);
        local[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      local[j] = saved;
    }
    for (int r = 0; r <= p; ++r) out[static_cast<std::size_t>(k - p + r)] = local[r];
  }

  static constexpr int kMaxDegree = 15;

 private:
  int degree_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

/// Stacks basis evaluations: row i is the basis at xs[i].
inline Eigen::MatrixXd design_matrix(const BSplineBasis& basis, std::span<const double> xs) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] >= 0.0 && xs[i] <= 1.0)) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::string msg = "design points outside [0,1] at indices";
    for (std::size_t k = 0; k < bad.size() && k < 10; ++k) msg += " " + std::to_string(bad[k]);
    if (bad.size() > 10) msg += " ...";
    throw DomainError(msg, std::move(bad));
  }
  const auto cols = static_cast<std::size_t>(basis.num_basis());
  // Row-major scratch so each evaluation writes contiguously.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    basis.evaluate_into(xs[i], std::span<double>(rows.row(static_cast<Eigen::Index>(i)).data(), cols));
  }
  return rows;
}

/// Min-max map of one covariate onto [0,1].
class FeatureScaler {
 public:
  static FeatureScaler fit(std::span<const double> xs) {
    if (xs.empty()) throw EmptyInputError("cannot fit a scaler on an empty column");
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return FeatureScaler(*lo, *hi);
  }

  FeatureScaler(double min, double max) : min_(min), max_(max) {
    if (!(max_ >= min_)) throw InvalidArgumentError("scaler needs max >= min");
  }

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  /// Constant column: every value maps to 0.5 and carries no marginal signal.
  bool degenerate() const noexcept { return max_ == min_; }

  double apply(double x) const noexcept {
    if (degenerate()) return 0.5;
    return std::clamp((x - min_) / (max_ - min_), 0.0, 1.0);
  }

  std::vector<double> apply(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return apply(x); });
    return out;
  }

 private:
  double min_;
  double max_;
};

}  // namespace qasis
