#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qasis/errors.hpp"
#include "qasis/quantile_solver.hpp"
#include "qasis/screening.hpp"
#include "qasis/simgen.hpp"

using qasis::Method;
using qasis::ScreeningConfig;

namespace {

Eigen::MatrixXd random_design(std::mt19937_64& gen, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = normal(gen);
  }
  return X;
}

std::vector<double> signal_response(const Eigen::MatrixXd& X, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y[static_cast<std::size_t>(i)] = 3.0 * X(i, 1) + 2.0 * std::sin(2.0 * X(i, 4)) + normal(gen);
  }
  return y;
}

}  // namespace

TEST(RankAndSelect, TieGoesToLowerIndex) {
  const std::vector<double> u{0.1, 0.5, 0.5};
  const auto s = qasis::rank_and_select(u, 2);
  EXPECT_EQ(s.ranking, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(s.selected, (std::vector<std::size_t>{1, 2}));
  const auto t = qasis::rank_and_select(u, 1, 0.3);
  EXPECT_EQ(t.selected, (std::vector<std::size_t>{1, 2}));
}

TEST(RankAndSelect, DefaultKeep) {
  EXPECT_EQ(qasis::default_keep(400), 66u);
  EXPECT_EQ(qasis::default_keep(160), 31u);
  EXPECT_EQ(qasis::default_keep(200), 37u);
}

TEST(ResolveBasis, DefaultRule) {
  const ScreeningConfig c;
  EXPECT_EQ(qasis::resolve_basis(c, 400).num_basis, 3);
  EXPECT_EQ(qasis::resolve_basis(c, 400).degree, 2);
  EXPECT_EQ(qasis::resolve_basis(c, 200).num_basis, 3);
  EXPECT_EQ(qasis::resolve_basis(c, 200).degree, 2);
  EXPECT_EQ(qasis::resolve_basis(c, 97).num_basis, 2);
  EXPECT_EQ(qasis::resolve_basis(c, 97).degree, 1);
  EXPECT_EQ(qasis::resolve_basis(c, 1024).num_basis, 4);
  EXPECT_EQ(qasis::resolve_basis(c, 1024).degree, 3);
  ScreeningConfig d;
  d.num_basis = 6;
  EXPECT_EQ(qasis::resolve_basis(d, 400).degree, 3);
}

TEST(MarginalUtility, ConstantColumnIsZero) {
  const std::vector<double> x(20, 3.0);
  std::vector<double> y(20);
  for (std::size_t i = 0; i < 20; ++i) y[i] = static_cast<double>(i);
  EXPECT_EQ(qasis::marginal_utility(x, y, ScreeningConfig{}), 0.0);
}

TEST(MarginalUtility, NoiselessLinearMatchesClosedForm) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t n = 400;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = unif(gen);
    y[i] = 10.0 * x[i];
  }
  ScreeningConfig c;
  c.num_basis = 3;
  const double med = qasis::sample_quantile(y, 0.5);
  double target = 0.0;
  for (double v : y) target += (v - med) * (v - med);
  target /= static_cast<double>(n);
  EXPECT_NEAR(qasis::marginal_utility(x, y, c), target, 1e-2 * target);
}

TEST(MarginalUtility, IndependentPairBelowPermutationNull) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = 400;
  std::vector<double> y(n), x(n);
  for (auto& v : y) v = normal(gen);
  for (auto& v : x) v = normal(gen);
  const ScreeningConfig c;
  const double observed = qasis::marginal_utility(x, y, c);
  std::vector<double> null;
  auto shuffled = x;
  for (int r = 0; r < 200; ++r) {
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    null.push_back(qasis::marginal_utility(shuffled, y, c));
  }
  std::sort(null.begin(), null.end());
  EXPECT_LT(observed, null[189]);  // 95th percentile
}

TEST(Screen, SingleFeature) {
  std::mt19937_64 gen(1);
  const auto X = random_design(gen, 30, 1);
  const auto y = signal_response(random_design(gen, 30, 5), gen);
  const auto r = qasis::screen(X, y, ScreeningConfig{});
  EXPECT_EQ(r.ranking, std::vector<std::size_t>{0});
  EXPECT_EQ(r.selected, std::vector<std::size_t>{0});
}

TEST(Screen, SelectedSizeEqualsKeep) {
  std::mt19937_64 gen(2);
  const auto X = random_design(gen, 100, 60);
  const auto y = signal_response(X, gen);
  ScreeningConfig c;
  const auto r = qasis::screen(X, y, c);
  EXPECT_EQ(r.keep, qasis::default_keep(100));
  EXPECT_EQ(r.selected.size(), r.keep);
  c.keep = 31;
  EXPECT_EQ(qasis::screen(X, y, c).selected.size(), 31u);
}

TEST(Screen, FindsSignalFeatures) {
  std::mt19937_64 gen(4);
  const auto X = random_design(gen, 200, 100);
  const auto y = signal_response(X, gen);
  for (auto m : {Method::qasis, Method::nis}) {
    ScreeningConfig c;
    c.method = m;
    const auto r = qasis::screen(X, y, c);
    EXPECT_TRUE(r.is_selected(1));
    EXPECT_EQ(r.ranking.front(), 1u);
  }
}

TEST(Screen, AffineResponseInvariance) {
  std::mt19937_64 gen(5);
  const auto X = random_design(gen, 120, 40);
  const auto y = signal_response(X, gen);
  const double a = 3.5, b = -7.0;
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = a * y[i] + b;
  for (double alpha : {0.25, 0.5, 0.75}) {
    ScreeningConfig c;
    c.alpha = alpha;
    const auto r1 = qasis::screen(X, y, c);
    const auto r2 = qasis::screen(X, z, c);
    EXPECT_EQ(r1.ranking, r2.ranking);
    EXPECT_EQ(r1.selected, r2.selected);
    for (std::size_t j = 0; j < r1.utilities.size(); ++j) {
      EXPECT_NEAR(r2.utilities[j], a * a * r1.utilities[j], 1e-8 * std::max(1e-12, a * a * r1.utilities[j]))
          << "feature " << j;
    }
  }
}

TEST(Screen, ColumnPermutationEquivariance) {
  std::mt19937_64 gen(6);
  const auto X = random_design(gen, 80, 25);
  const auto y = signal_response(X, gen);
  std::vector<Eigen::Index> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  Eigen::MatrixXd Xp(80, 25);
  for (Eigen::Index j = 0; j < 25; ++j) Xp.col(j) = X.col(perm[static_cast<std::size_t>(j)]);
  const auto r = qasis::screen(X, y, ScreeningConfig{});
  const auto rp = qasis::screen(Xp, y, ScreeningConfig{});
  for (std::size_t j = 0; j < 25; ++j) EXPECT_EQ(rp.utilities[j], r.utilities[static_cast<std::size_t>(perm[j])]);
}

TEST(Screen, BitDeterministicAcrossThreadCounts) {
  const auto inst = qasis::generate(qasis::ExampleId::e4, 99, 150, 120);
  for (auto m : {Method::qasis, Method::qasis_censored, Method::qasis_local, Method::nis}) {
    ScreeningConfig c;
    c.method = m;
    c.threads = 1;
    const auto base = qasis::screen(inst.X, inst.censored, c);
    for (unsigned t : {2u, 3u, 8u}) {
      c.threads = t;
      const auto other = qasis::screen(inst.X, inst.censored, c);
      EXPECT_EQ(other.ranking, base.ranking);
      EXPECT_EQ(other.utilities, base.utilities);
    }
  }
}

TEST(Screen, CensoredReducesToCompleteWithoutCensoring) {
  std::mt19937_64 gen(7);
  const auto X = random_design(gen, 100, 30);
  const auto y = signal_response(X, gen);
  std::vector<qasis::CensoredSample> samples;
  for (double v : y) samples.push_back({v, 1});
  for (double alpha : {0.3, 0.5}) {
    ScreeningConfig c;
    c.alpha = alpha;
    const auto complete = qasis::screen(X, y, c);
    c.method = Method::qasis_censored;
    const auto censored = qasis::screen(X, samples, c);
    c.method = Method::qasis_local;
    c.kernel = qasis::KernelKind::uniform;
    c.bandwidth = 1.0;
    const auto local = qasis::screen(X, samples, c);
    for (std::size_t j = 0; j < 30; ++j) {
      EXPECT_NEAR(censored.utilities[j], complete.utilities[j], 1e-10);
      EXPECT_NEAR(local.utilities[j], complete.utilities[j], 1e-10);
    }
  }
}

TEST(Screen, CensoredMethodsNeedIndicators) {
  std::mt19937_64 gen(8);
  const auto X = random_design(gen, 20, 3);
  const auto y = signal_response(random_design(gen, 20, 5), gen);
  ScreeningConfig c;
  c.method = Method::qasis_censored;
  EXPECT_THROW(qasis::screen(X, y, c), qasis::InvalidArgumentError);
}

TEST(Screen, UnreachableQuantilePropagates) {
  std::mt19937_64 gen(9);
  const auto X = random_design(gen, 20, 3);
  std::vector<qasis::CensoredSample> s;
  for (int i = 0; i < 20; ++i) s.push_back({static_cast<double>(i), i < 4 ? 1 : 0});
  ScreeningConfig c;
  c.method = Method::qasis_censored;
  c.alpha = 0.5;
  EXPECT_THROW(qasis::screen(X, s, c), qasis::UnreachableQuantileError);
}

TEST(Screen, TooFewRowsRejected) {
  std::mt19937_64 gen(10);
  const auto X = random_design(gen, 9, 3);
  const std::vector<double> y(9, 1.0);
  EXPECT_THROW(qasis::screen(X, y, ScreeningConfig{}), qasis::InvalidArgumentError);
}

TEST(Screen, ConstantColumnFlagged) {
  std::mt19937_64 gen(11);
  auto X = random_design(gen, 50, 4);
  X.col(2).setConstant(1.5);
  const auto y = signal_response(X, gen);
  const auto r = qasis::screen(X, y, ScreeningConfig{});
  EXPECT_EQ(r.status[2], qasis::FeatureStatus::constant);
  EXPECT_EQ(r.utilities[2], 0.0);
}

TEST(Screen, Example1bReplicationKeepsActiveInTop66) {
  const auto inst = qasis::generate(qasis::ExampleId::e1b, 12345);
  ScreeningConfig c;
  c.threads = 4;
  const auto r = qasis::screen(inst.X, inst.y, c);
  EXPECT_EQ(r.keep, 66u);
  for (std::size_t j : {0u, 1u, 2u, 3u}) EXPECT_TRUE(r.is_selected(j)) << "X" << j + 1;
}
