#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qasis/errors.hpp"
#include "qasis/quantile_solver.hpp"
#include "qasis/spline_basis.hpp"

namespace {

double rho(double u, double a) { return u >= 0 ? a * u : (a - 1.0) * u; }

double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double a,
                 const Eigen::VectorXd& beta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += w[i] * rho(y[i] - X.row(i).dot(beta), a);
  return s;
}

// The weighted check-loss optimum is attained at a basic solution, i.e. a
// beta interpolating some N linearly independent rows. Enumerate them all.
double basic_solution_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             double a) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    Eigen::MatrixXd A(p, p);
    Eigen::VectorXd b(p);
    for (int r = 0; r < p; ++r) {
      A.row(r) = X.row(idx[static_cast<std::size_t>(r)]);
      b[r] = y[idx[static_cast<std::size_t>(r)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() == p) best = std::min(best, objective(X, y, w, a, lu.solve(b)));
    int k = p - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == n - p + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < p; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

qasis::CheckLossProblem random_spline_problem(std::mt19937_64& gen, int n, int num_basis, double alpha,
                                              bool weighted) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto basis = qasis::BSplineBasis::make(num_basis, std::min(3, num_basis - 1));
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = unif(gen);
  qasis::CheckLossProblem p;
  p.design = qasis::design_matrix(basis, xs);
  p.response.resize(n);
  p.weights.setOnes(n);
  for (int i = 0; i < n; ++i) {
    p.response[i] = std::sin(6.0 * xs[static_cast<std::size_t>(i)]) + normal(gen);
    if (weighted) p.weights[i] = unif(gen) < 0.3 ? 0.0 : 0.5 + 2.0 * unif(gen);
  }
  p.alpha = alpha;
  return p;
}

}  // namespace

TEST(CheckLoss, Examples) {
  EXPECT_DOUBLE_EQ(qasis::check_loss(2.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(qasis::check_loss(0.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(qasis::check_loss(-4.0, 0.25), 3.0);
  EXPECT_THROW(qasis::check_loss(1.0, 1.0), qasis::DomainError);
}

TEST(SampleQuantile, Examples) {
  EXPECT_EQ(qasis::sample_quantile(std::vector<double>{1, 2, 3, 4}, 0.5), 2.0);
  EXPECT_EQ(qasis::sample_quantile(std::vector<double>{7}, 0.1), 7.0);
  EXPECT_EQ(qasis::sample_quantile(std::vector<double>{7}, 0.9), 7.0);
  EXPECT_EQ(qasis::sample_quantile(std::vector<double>{3, 1, 2}, 0.9), 3.0);
  EXPECT_THROW(qasis::sample_quantile(std::vector<double>{}, 0.5), qasis::EmptyInputError);
}

TEST(SampleQuantile, IsLeftContinuousInverseOfEdf) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> ys(37);
  for (auto& y : ys) y = normal(gen);
  for (double a = 0.01; a < 1.0; a += 0.01) {
    const double q = qasis::sample_quantile(ys, a);
    const auto at_or_below = std::count_if(ys.begin(), ys.end(), [&](double y) { return y <= q; });
    const auto below = std::count_if(ys.begin(), ys.end(), [&](double y) { return y < q; });
    EXPECT_GE(static_cast<double>(at_or_below) / 37.0, a - 1e-12);
    EXPECT_LT(static_cast<double>(below) / 37.0, a);
  }
}

TEST(WeightedQr, InterceptOnlyMedian) {
  qasis::CheckLossProblem p{Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(0, 1, 2), Eigen::VectorXd::Ones(3), 0.5};
  const auto fit = qasis::fit_weighted_qr(p);
  EXPECT_EQ(fit.status, qasis::FitStatus::converged);
  EXPECT_NEAR(fit.coefficients[0], 1.0, 1e-9);
}

TEST(WeightedQr, WeightedMedianMatchesGridOracle) {
  const Eigen::Vector4d y(1, 2, 3, 4);
  const Eigen::Vector4d w(1, 1, 1, 3);
  qasis::CheckLossProblem p{Eigen::MatrixXd::Ones(4, 1), y, w, 0.5};
  const auto fit = qasis::fit_weighted_qr(p);

  // Grid oracle over [0, 5] in steps of 1e-3.
  double best_b = 0.0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 5000; ++k) {
    const double b = k * 1e-3;
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += w[i] * rho(y[i] - b, 0.5);
    if (s < best - 1e-12) {
      best = s;
      best_b = b;
    }
  }
  EXPECT_NEAR(best_b, 3.0, 1e-9);
  EXPECT_NEAR(fit.coefficients[0], best_b, 1e-7);
  EXPECT_NEAR(fit.objective, best, 1e-9);
}

TEST(WeightedQr, DimensionMismatchThrows) {
  qasis::CheckLossProblem p{Eigen::MatrixXd::Ones(3, 1), Eigen::Vector2d(0, 1), Eigen::VectorXd::Ones(3), 0.5};
  EXPECT_THROW(qasis::fit_weighted_qr(p), qasis::InvalidArgumentError);
}

TEST(WeightedQr, RandomTwentyByThreeMatchesOracle) {
  std::mt19937_64 gen(20);
  const auto p = random_spline_problem(gen, 20, 3, 0.5, false);
  const auto fit = qasis::fit_weighted_qr(p);
  const double oracle = basic_solution_oracle(p.design, p.response, p.weights, p.alpha);
  EXPECT_NEAR(fit.objective, oracle, 1e-6 * std::max(1.0, oracle));
}

TEST(WeightedQr, LpOracleEquivalenceOn200Problems) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> pick_basis(2, 5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int N = pick_basis(gen);
    int n_max = 40;
    while (binomial(n_max, N) > 2e5) --n_max;
    std::uniform_int_distribution<int> pick_n(N + 3, n_max);
    const int n = pick_n(gen);
    const double alpha = 0.05 + 0.9 * unif(gen);
    const auto p = random_spline_problem(gen, n, N, alpha, trial % 2 == 1);
    const auto fit = qasis::fit_weighted_qr(p);
    const double oracle = basic_solution_oracle(p.design, p.response, p.weights, alpha);
    const double attained = objective(p.design, p.response, p.weights, alpha, fit.coefficients);
    ASSERT_NEAR(attained, oracle, 1e-6 * std::max(1.0, std::abs(oracle))) << "trial " << trial;
    EXPECT_NEAR(fit.objective, attained, 1e-9 * std::max(1.0, attained));
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(WeightedQr, SubgradientBracket) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = 0.1 + 0.8 * (trial % 9) / 8.0;
    const auto p = random_spline_problem(gen, 120, 4, alpha, trial % 2 == 0);
    const auto fit = qasis::fit_weighted_qr(p);
    const Eigen::VectorXd r = p.response - p.design * fit.coefficients;
    const double total = p.weights.sum();
    double neg = 0.0, nonpos = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (r[i] < -1e-12) neg += p.weights[i];
      if (r[i] <= 1e-12) nonpos += p.weights[i];
    }
    EXPECT_LE(neg / total, alpha + 1e-12) << "trial " << trial;
    EXPECT_GE(nonpos / total, alpha - 1e-12) << "trial " << trial;
  }
}

TEST(WeightedQr, QuantileEquivariance) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_spline_problem(gen, 60, 3, 0.3 + 0.02 * trial, false);
    const auto base = qasis::fit_weighted_qr(p);
    const double a = 2.5, b = -1.75;
    auto q = p;
    q.response = a * p.response.array() + b;
    const auto moved = qasis::fit_weighted_qr(q);
    // The all-ones coefficient vector reproduces the constant 1.
    const Eigen::VectorXd expected = a * base.coefficients.array() + b;
    EXPECT_NEAR(moved.objective, a * base.objective, 1e-7 * std::max(1.0, a * base.objective));
    const Eigen::VectorXd fitted_expected = p.design * expected;
    const Eigen::VectorXd fitted = q.design * moved.coefficients;
    EXPECT_LT((fitted - fitted_expected).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(WeightedQr, Convexity) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto p = random_spline_problem(gen, 200, 4, 0.75, true);
  const auto fit = qasis::fit_weighted_qr(p);
  const double at_opt = objective(p.design, p.response, p.weights, p.alpha, fit.coefficients);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd v(4);
    for (int j = 0; j < 4; ++j) v[j] = normal(gen);
    v.normalize();
    const double moved = objective(p.design, p.response, p.weights, p.alpha, fit.coefficients + 1e-3 * v);
    EXPECT_LE(at_opt, moved + 1e-10);
  }
}

TEST(WeightedQr, ZeroWeightRowsAreIgnored) {
  std::mt19937_64 gen(4);
  auto p = random_spline_problem(gen, 50, 3, 0.5, false);
  auto q = p;
  for (Eigen::Index i = 0; i < 50; i += 3) {
    q.weights[i] = 0.0;
    q.response[i] = 1e6;  // would dominate if used
  }
  auto r = p;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < 50; ++i) {
    if (i % 3 != 0) keep.push_back(i);
  }
  r.design.resize(static_cast<Eigen::Index>(keep.size()), 3);
  r.response.resize(static_cast<Eigen::Index>(keep.size()));
  r.weights.setOnes(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    r.design.row(static_cast<Eigen::Index>(k)) = p.design.row(keep[k]);
    r.response[static_cast<Eigen::Index>(k)] = p.response[keep[k]];
  }
  const auto a = qasis::fit_weighted_qr(q);
  const auto b = qasis::fit_weighted_qr(r);
  EXPECT_NEAR(a.objective, b.objective, 1e-9);
}

TEST(WeightedQr, RankDeficientIsFlaggedNotThrown) {
  Eigen::MatrixXd X(6, 2);
  X.col(0).setOnes();
  X.col(1).setOnes();
  qasis::CheckLossProblem p{X, (Eigen::VectorXd(6) << 1, 2, 3, 4, 5, 6).finished(), Eigen::VectorXd::Ones(6), 0.5};
  const auto fit = qasis::fit_weighted_qr(p);
  EXPECT_EQ(fit.status, qasis::FitStatus::degenerate);
  // Minimum-norm split of the median across the two identical columns.
  EXPECT_NEAR(fit.coefficients[0], fit.coefficients[1], 1e-9);
  const double median_fit = fit.coefficients.sum();
  EXPECT_GE(median_fit, 3.0 - 1e-9);
  EXPECT_LE(median_fit, 4.0 + 1e-9);
}

TEST(WeightedQr, Deterministic) {
  std::mt19937_64 gen(8);
  const auto p = random_spline_problem(gen, 300, 3, 0.25, true);
  const auto a = qasis::fit_weighted_qr(p);
  const auto b = qasis::fit_weighted_qr(p);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(a.coefficients[j], b.coefficients[j]);
}

TEST(LeastSquares, MeanAndExactFit) {
  const auto mean_fit =
      qasis::fit_least_squares(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(0, 2, 4), Eigen::VectorXd::Ones(3));
  EXPECT_NEAR(mean_fit.coefficients[0], 2.0, 1e-12);

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::Vector4d y(3, -1, 2, 5);
  const auto exact = qasis::fit_least_squares(I, y, Eigen::VectorXd::Ones(4));
  EXPECT_LT((I * exact.coefficients - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LeastSquares, MatchesNormalEquations) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_spline_problem(gen, 20, 3, 0.5, true);
    const auto fit = qasis::fit_least_squares(p.design, p.response, p.weights);
    const Eigen::MatrixXd W = p.weights.asDiagonal();
    const Eigen::MatrixXd A = p.design.transpose() * W * p.design;
    const Eigen::VectorXd b = p.design.transpose() * W * p.response;
    const Eigen::VectorXd oracle = A.llt().solve(b);
    EXPECT_LT((fit.coefficients - oracle).cwiseAbs().maxCoeff(), 1e-10);
  }
}
