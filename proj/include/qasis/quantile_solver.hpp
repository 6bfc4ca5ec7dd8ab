#pragma once

// Weighted check-loss minimization (linear quantile regression over a fixed
// design) and the least-squares analogue.
//
// The quantile fit solves the bounded dual LP
//
//   max  y'a   s.t.  X'a = (1 - alpha) X'w,   0 <= a <= w
//
// with a Mehrotra predictor-corrector primal-dual iteration (Frisch-Newton).
// The primal coefficients are the multipliers of the equality constraints.
// Once the duality gap is closed the dual solution identifies the optimal
// face of the primal problem, and the coefficient vector of minimum Euclidean
// norm on that face is returned. For data in general position the face is a
// single vertex, so this reproduces the exact interpolating solution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qasis/errors.hpp"

namespace qasis {

/// rho_alpha(u) = u * (alpha - 1{u < 0}).
inline double check_loss(double u, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("quantile level must lie in (0,1), got " + std::to_string(alpha));
  }
  return u < 0.0 ? u * (alpha - 1.0) : u * alpha;
}

/// Smallest k in [1, n] with k / n >= alpha, tolerant to rounding in alpha * n.
inline std::size_t quantile_order(std::size_t n, double alpha) {
  const double target = alpha * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(target - 1e-9)));
  return std::min(k, n);
}

/// inf{y : F_n(y) >= alpha} for the empirical distribution of ys.
inline double sample_quantile(std::span<const double> ys, double alpha) {
  if (ys.empty()) throw EmptyInputError("sample quantile of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("quantile level must lie in (0,1), got " + std::to_string(alpha));
  }
  std::vector<double> sorted(ys.begin(), ys.end());
  const std::size_t k = quantile_order(sorted.size(), alpha);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   sorted.end());
  return sorted[k - 1];
}

struct CheckLossProblem {
  Eigen::MatrixXd design;    // n x N
  Eigen::VectorXd response;  // n
  Eigen::VectorXd weights;   // n, nonnegative; all ones for complete data
  double alpha = 0.5;
};

enum class FitStatus {
  converged,
  degenerate,       // design rank deficient on the positively weighted rows
  iteration_limit,  // duality gap still open after max_iterations
};

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::degenerate: return "degenerate";
    case FitStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct FitResult {
  Eigen::VectorXd coefficients;
  double objective = 0.0;
  FitStatus status = FitStatus::converged;
  int iterations = 0;
};

struct SolverOptions {
  double gap_tolerance = 1e-8;  // relative duality gap
  int max_iterations = 200;
};

/// sum_i w_i rho_alpha(y_i - x_i' beta)
inline double weighted_check_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& weights, double alpha,
                                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd r = response - design * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    total += weights[i] * (r[i] < 0.0 ? r[i] * (alpha - 1.0) : r[i] * alpha);
  }
  return total;
}

namespace detail {

inline void check_dimensions(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                             const Eigen::VectorXd& weights) {
  if (design.rows() != response.size() || design.rows() != weights.size()) {
    throw InvalidArgumentError("design has " + std::to_string(design.rows()) + " rows but response has " +
                               std::to_string(response.size()) + " and weights " +
                               std::to_string(weights.size()) + " entries");
  }
  if (design.cols() < 1) throw InvalidArgumentError("design needs at least one column");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw DomainError("weights must be finite and nonnegative", {static_cast<std::size_t>(i)});
    }
  }
}

struct Compacted {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::VectorXd weights;
};

// Rows with zero weight contribute nothing and are dropped.
inline Compacted drop_zero_weight_rows(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& weights) {
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(weights.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) keep.push_back(i);
  }
  Compacted c;
  if (keep.size() == static_cast<std::size_t>(weights.size())) {
    c.design = design;
    c.response = response;
    c.weights = weights;
    return c;
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  c.design.resize(m, design.cols());
  c.response.resize(m);
  c.weights.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    c.design.row(k) = design.row(keep[static_cast<std::size_t>(k)]);
    c.response[k] = response[keep[static_cast<std::size_t>(k)]];
    c.weights[k] = weights[keep[static_cast<std::size_t>(k)]];
  }
  return c;
}

struct IpmOutcome {
  Eigen::VectorXd beta;
  Eigen::ArrayXd dual;  // a in [0, w]
  int iterations = 0;
  bool converged = false;
};

// Primal-dual predictor-corrector on the bounded dual LP. Requires a full
// column rank design and strictly positive weights. The loops run over a
// row-major copy of the design so each iteration is a few fused passes.
inline IpmOutcome frisch_newton(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                double alpha, const SolverOptions& options) {
  const auto m = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = X;
  const double* xr = rows.data();
  auto row = [&](std::size_t i) { return xr + i * p; };
  auto dot_row = [&](std::size_t i, const double* v) {
    double acc = 0.0;
    const double* r = row(i);
    for (std::size_t k = 0; k < p; ++k) acc += r[k] * v[k];
    return acc;
  };

  std::vector<double> x(m), s(m), z(m), w(m), d(m), rd(m), rhat(m), inv_x(m), inv_s(m);
  std::vector<double> dx(m), dz(m), dw(m), dx_aff(m), dz_aff(m), dw_aff(m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = (1.0 - alpha) * u[static_cast<Eigen::Index>(i)];
    s[i] = alpha * u[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k < p; ++k) b[static_cast<Eigen::Index>(k)] += row(i)[k] * x[i];
  }

  // Weighted least squares start for the multipliers.
  Eigen::VectorXd lambda =
      -(X.transpose() * u.asDiagonal() * X).ldlt().solve(X.transpose() * u.cwiseProduct(y));
  {
    double spread = 0.0, ymax = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      rd[i] = y[static_cast<Eigen::Index>(i)] + dot_row(i, lambda.data());
      spread += std::abs(rd[i]);
      ymax = std::max(ymax, std::abs(y[static_cast<Eigen::Index>(i)]));
    }
    spread = std::max(spread / static_cast<double>(m), 1e-12 * (1.0 + ymax));
    for (std::size_t i = 0; i < m; ++i) {
      z[i] = std::max(-rd[i], 0.0) + 0.1 * spread;
      w[i] = std::max(rd[i], 0.0) + 0.1 * spread;
    }
  }

  double y_weighted_total = 0.0;
  for (std::size_t i = 0; i < m; ++i) y_weighted_total += u[static_cast<Eigen::Index>(i)] * y[static_cast<Eigen::Index>(i)];

  IpmOutcome out;
  Eigen::MatrixXd normal(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::VectorXd rp(static_cast<Eigen::Index>(p)), rhs(static_cast<Eigen::Index>(p)), dlambda, dlambda_aff;
  Eigen::LDLT<Eigen::MatrixXd> factor(static_cast<Eigen::Index>(p));
  const double two_m = 2.0 * static_cast<double>(m);

  // Newton direction for complementarity targets (cxz, csw) given per row.
  auto newton = [&](auto&& targets, std::vector<double>& ddx, std::vector<double>& ddz, std::vector<double>& ddw,
                    Eigen::VectorXd& ddl) {
    rhs = rp;
    for (std::size_t i = 0; i < m; ++i) {
      const auto [cxz, csw] = targets(i);
      rhat[i] = rd[i] - cxz * inv_x[i] + csw * inv_s[i];
      const double coef = d[i] * rhat[i];
      for (std::size_t k = 0; k < p; ++k) rhs[static_cast<Eigen::Index>(k)] += row(i)[k] * coef;
    }
    ddl = factor.solve(rhs);
    for (std::size_t i = 0; i < m; ++i) {
      const auto [cxz, csw] = targets(i);
      ddx[i] = d[i] * (dot_row(i, ddl.data()) - rhat[i]);
      ddz[i] = (cxz - z[i] * ddx[i]) * inv_x[i];
      ddw[i] = (csw + w[i] * ddx[i]) * inv_s[i];
    }
  };
  auto primal_step = [&](const std::vector<double>& ddx) {
    double step = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (ddx[i] < 0.0) step = std::min(step, -x[i] / ddx[i]);
      if (ddx[i] > 0.0) step = std::min(step, s[i] / ddx[i]);
    }
    return step;
  };
  auto dual_step = [&](const std::vector<double>& ddz, const std::vector<double>& ddw) {
    double step = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (ddz[i] < 0.0) step = std::min(step, -z[i] / ddz[i]);
      if (ddw[i] < 0.0) step = std::min(step, -w[i] / ddw[i]);
    }
    return step;
  };

  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    // Certificate: check loss at beta = -lambda against the dual objective.
    double primal = 0.0, dual = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[static_cast<Eigen::Index>(i)] + dot_row(i, lambda.data());
      primal += u[static_cast<Eigen::Index>(i)] * (r < 0.0 ? r * (alpha - 1.0) : r * alpha);
      dual += y[static_cast<Eigen::Index>(i)] * x[i];
    }
    dual -= (1.0 - alpha) * y_weighted_total;
    if (primal - dual <= options.gap_tolerance * (1.0 + std::abs(primal))) {
      out.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    rp = b;
    normal.setZero();
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* r = row(i);
      for (std::size_t k = 0; k < p; ++k) rp[static_cast<Eigen::Index>(k)] -= r[k] * x[i];
      rd[i] = -y[static_cast<Eigen::Index>(i)] - dot_row(i, lambda.data()) - z[i] + w[i];
      inv_x[i] = 1.0 / x[i];
      inv_s[i] = 1.0 / s[i];
      d[i] = 1.0 / (z[i] * inv_x[i] + w[i] * inv_s[i]);
      for (std::size_t a = 0; a < p; ++a) {
        const double da = d[i] * r[a];
        for (std::size_t c = 0; c <= a; ++c) normal(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) += da * r[c];
      }
      mu += x[i] * z[i] + s[i] * w[i];
    }
    mu /= two_m;
    factor.compute(normal.selfadjointView<Eigen::Lower>());

    // Affine predictor.
    newton([&](std::size_t i) { return std::pair{-x[i] * z[i], -s[i] * w[i]}; }, dx_aff, dz_aff, dw_aff,
           dlambda_aff);
    const double ap = primal_step(dx_aff);
    const double ad = dual_step(dz_aff, dw_aff);
    double mu_aff = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      mu_aff += (x[i] + ap * dx_aff[i]) * (z[i] + ad * dz_aff[i]) + (s[i] - ap * dx_aff[i]) * (w[i] + ad * dw_aff[i]);
    }
    mu_aff /= two_m;
    const double sigma_mu = std::pow(mu_aff / mu, 3.0) * mu;

    // Centering corrector.
    newton(
        [&](std::size_t i) {
          return std::pair{sigma_mu - x[i] * z[i] - dx_aff[i] * dz_aff[i],
                           sigma_mu - s[i] * w[i] + dx_aff[i] * dw_aff[i]};
        },
        dx, dz, dw, dlambda);
    const double step_p = std::min(1.0, 0.99995 * primal_step(dx));
    const double step_d = std::min(1.0, 0.99995 * dual_step(dz, dw));

    for (std::size_t i = 0; i < m; ++i) {
      x[i] += step_p * dx[i];
      s[i] = u[static_cast<Eigen::Index>(i)] - x[i];
      z[i] += step_d * dz[i];
      w[i] += step_d * dw[i];
    }
    lambda += step_d * dlambda;
  }
  out.beta = -lambda;
  out.dual = Eigen::Map<const Eigen::ArrayXd>(x.data(), static_cast<Eigen::Index>(m));
  return out;
}

// Minimum-norm point of {theta : G theta <= h} by Hildreth's dual coordinate
// ascent, finished with an exact solve on the detected active set.
inline bool min_norm_in_polyhedron(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, Eigen::VectorXd& theta) {
  const Eigen::Index rows = G.rows();
  const Eigen::Index dim = G.cols();
  theta = Eigen::VectorXd::Zero(dim);
  if (rows == 0) return true;
  const Eigen::VectorXd norms = G.rowwise().squaredNorm();
  Eigen::VectorXd mult = Eigen::VectorXd::Zero(rows);
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < rows; ++j) {
      if (norms[j] == 0.0) continue;
      const double slack = G.row(j).dot(theta) - h[j];
      const double next = std::max(0.0, mult[j] + slack / norms[j]);
      const double delta = next - mult[j];
      if (delta != 0.0) {
        theta -= delta * G.row(j).transpose();
        mult[j] = next;
      }
      worst = std::max(worst, slack);
    }
    if (worst <= 1e-13 * scale) break;
  }
  // Exact projection onto the affine hull of the active constraints.
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < rows; ++j) {
    if (mult[j] > 0.0) active.push_back(j);
  }
  if (!active.empty()) {
    Eigen::MatrixXd GA(static_cast<Eigen::Index>(active.size()), dim);
    Eigen::VectorXd hA(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      GA.row(static_cast<Eigen::Index>(k)) = G.row(active[k]);
      hA[static_cast<Eigen::Index>(k)] = h[active[k]];
    }
    const Eigen::VectorXd exact = GA.completeOrthogonalDecomposition().solve(hA);
    if (((G * exact - h).array() <= 1e-10 * scale).all()) theta = exact;
  }
  return ((G * theta - h).array() <= 1e-8 * scale).all();
}

// Minimum-norm coefficients on the optimal face identified by the dual
// solution: rows strictly inside (0, w) are interpolated, rows at the lower
// bound keep nonpositive residuals and rows at the upper bound nonnegative.
inline Eigen::VectorXd min_norm_on_optimal_face(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& u, const Eigen::ArrayXd& dual) {
  constexpr double kBoundTol = 1e-5;
  const Eigen::Index cols = X.cols();
  std::vector<Eigen::Index> fixed, lower, upper;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double ratio = dual[i] / u[i];
    if (ratio <= kBoundTol) {
      lower.push_back(i);
    } else if (ratio >= 1.0 - kBoundTol) {
      upper.push_back(i);
    } else {
      fixed.push_back(i);
    }
  }

  Eigen::MatrixXd XE(static_cast<Eigen::Index>(fixed.size()), cols);
  Eigen::VectorXd yE(static_cast<Eigen::Index>(fixed.size()));
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    XE.row(static_cast<Eigen::Index>(k)) = X.row(fixed[k]);
    yE[static_cast<Eigen::Index>(k)] = y[fixed[k]];
  }

  Eigen::VectorXd base = Eigen::VectorXd::Zero(cols);
  Eigen::MatrixXd null_basis = Eigen::MatrixXd::Identity(cols, cols);
  if (!fixed.empty()) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(XE);
    if (qr.rank() == cols) return qr.solve(yE);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(XE, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const Eigen::Index rank = svd.rank();
    base = svd.solve(yE);
    if (rank == cols) return base;
    null_basis = svd.matrixV().rightCols(cols - rank);
  }

  // Remaining freedom lives in the null space of the interpolated rows.
  const auto ineq = static_cast<Eigen::Index>(lower.size() + upper.size());
  Eigen::MatrixXd G(ineq, null_basis.cols());
  Eigen::VectorXd h(ineq);
  Eigen::Index row = 0;
  for (Eigen::Index i : lower) {  // x'beta >= y
    G.row(row) = -(X.row(i) * null_basis);
    h[row++] = X.row(i).dot(base) - y[i];
  }
  for (Eigen::Index i : upper) {  // x'beta <= y
    G.row(row) = X.row(i) * null_basis;
    h[row++] = y[i] - X.row(i).dot(base);
  }
  Eigen::VectorXd theta;
  min_norm_in_polyhedron(G, h, theta);
  return base + null_basis * theta;
}

}  // namespace detail

/// argmin_beta sum_i w_i rho_alpha(y_i - x_i' beta).
inline FitResult fit_weighted_qr(const CheckLossProblem& problem, const SolverOptions& options = {}) {
  detail::check_dimensions(problem.design, problem.response, problem.weights);
  if (!(problem.alpha > 0.0 && problem.alpha < 1.0)) {
    throw DomainError("quantile level must lie in (0,1), got " + std::to_string(problem.alpha));
  }
  const Eigen::Index cols = problem.design.cols();
  const auto c = detail::drop_zero_weight_rows(problem.design, problem.response, problem.weights);
  if (c.design.rows() == 0) throw InvalidArgumentError("all weights are zero");

  FitResult result;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.design);
  const Eigen::Index rank = qr.rank();

  if (rank == cols) {
    const auto ipm = detail::frisch_newton(c.design, c.response, c.weights, problem.alpha, options);
    result.iterations = ipm.iterations;
    result.status = ipm.converged ? FitStatus::converged : FitStatus::iteration_limit;
    result.coefficients = ipm.beta;
    const double ipm_obj =
        weighted_check_objective(c.design, c.response, c.weights, problem.alpha, ipm.beta);
    if (ipm.converged) {
      const Eigen::VectorXd polished =
          detail::min_norm_on_optimal_face(c.design, c.response, c.weights, ipm.dual);
      const double polished_obj =
          weighted_check_objective(c.design, c.response, c.weights, problem.alpha, polished);
      if (polished.allFinite() && polished_obj <= ipm_obj + 1e-10 * (1.0 + std::abs(ipm_obj))) {
        result.coefficients = polished;
      }
    }
  } else {
    // Fit on a maximal independent column subset, then take the minimum-norm
    // coefficients reproducing the same fitted values.
    result.status = FitStatus::degenerate;
    const auto perm = qr.colsPermutation().indices();
    Eigen::MatrixXd reduced(c.design.rows(), rank);
    for (Eigen::Index k = 0; k < rank; ++k) reduced.col(k) = c.design.col(perm[k]);
    Eigen::VectorXd embedded = Eigen::VectorXd::Zero(cols);
    if (rank > 0) {
      CheckLossProblem sub{reduced, c.response, c.weights, problem.alpha};
      const FitResult inner = fit_weighted_qr(sub, options);
      result.iterations = inner.iterations;
      for (Eigen::Index k = 0; k < rank; ++k) embedded[perm[k]] = inner.coefficients[k];
    }
    const Eigen::VectorXd fitted = c.design * embedded;
    result.coefficients = c.design.completeOrthogonalDecomposition().solve(fitted);
  }
  result.objective = weighted_check_objective(problem.design, problem.response, problem.weights,
                                              problem.alpha, result.coefficients);
  return result;
}

/// Weighted least squares; minimum-norm solution when rank deficient.
inline FitResult fit_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                   const Eigen::VectorXd& weights) {
  detail::check_dimensions(design, response, weights);
  const Eigen::VectorXd root = weights.cwiseSqrt();
  const Eigen::MatrixXd scaled = root.asDiagonal() * design;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(scaled);
  FitResult result;
  result.coefficients = cod.solve(root.cwiseProduct(response));
  result.status = cod.rank() == design.cols() ? FitStatus::converged : FitStatus::degenerate;
  const Eigen::VectorXd r = response - design * result.coefficients;
  result.objective = weights.dot(r.cwiseProduct(r));
  return result;
}

}  // namespace qasis
