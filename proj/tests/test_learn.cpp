#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"

using namespace viewcast;

namespace {

FeatureMatrix matrix(std::size_t rows, std::size_t cols, const std::function<double(std::size_t, std::size_t)>& f) {
  FeatureMatrix m;
  for (std::size_t c = 0; c < cols; ++c) m.columns.push_back("x" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    m.row_ids.push_back("r" + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) m.values.push_back(f(r, c));
  }
  return m;
}

FeatureMatrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return matrix(rows, cols, [&](std::size_t, std::size_t) { return u(rng); });
}

// XOR-like target on the first two columns; the others are noise inputs.
std::vector<double> xor_target(const FeatureMatrix& m) {
  std::vector<double> y;
  for (std::size_t r = 0; r < m.rows(); ++r) y.push_back((m.at(r, 0) > 0) == (m.at(r, 1) > 0) ? 5.0 : -5.0);
  return y;
}

GbdtParams small_params() {
  GbdtParams p;
  p.n_trees = 60;
  p.max_depth = 3;
  p.learning_rate = 0.2;
  return p;
}

}  // namespace

TEST(Gbdt, ConstantTarget) {
  const auto X = uniform_matrix(50, 3, 1);
  const std::vector<double> y(50, 4.25);
  const auto m = fit_gbdt(X, y, small_params());
  for (double p : predict(m, X)) EXPECT_EQ(p, 4.25);
  for (double p : predict(m, uniform_matrix(20, 3, 2))) EXPECT_EQ(p, 4.25);
}

TEST(Gbdt, GeometricResidualDecay) {
  const auto X = matrix(2, 1, [](std::size_t r, std::size_t) { return static_cast<double>(r); });
  const std::vector<double> y{0, 10};
  GbdtParams p;
  p.n_trees = 50;
  p.max_depth = 1;
  p.learning_rate = 0.5;
  const auto m = fit_gbdt(X, y, p);
  const auto pred = predict(m, X);
  const double bound = 10.0 * std::pow(0.5, 50);
  EXPECT_LE(std::fabs(pred[0] - 0.0), bound);
  EXPECT_LE(std::fabs(pred[1] - 10.0), bound);
}

TEST(Gbdt, TrainingRmseNonIncreasing) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto X = uniform_matrix(400, 6, seed);
    auto y = xor_target(X);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : y) v += n(rng);
    for (std::size_t bins : {std::size_t{0}, std::size_t{16}}) {
      auto p = small_params();
      p.feature_subsample = 0.5;
      p.max_bins = bins;
      const auto m = fit_gbdt(X, y, p);
      ASSERT_EQ(m.gbdt.train_rmse.size(), 60u);
      for (std::size_t t = 1; t < m.gbdt.train_rmse.size(); ++t)
        EXPECT_LE(m.gbdt.train_rmse[t], m.gbdt.train_rmse[t - 1] + 1e-12);
      // the recorded curve is the RMSE of the truncated ensembles
      for (std::size_t t : {std::size_t{0}, std::size_t{29}, std::size_t{59}}) {
        double s = 0.0;
        for (std::size_t r = 0; r < X.rows(); ++r) {
          const double d = m.gbdt.predict(X.row(r), t + 1) - y[r];
          s += d * d;
        }
        EXPECT_NEAR(std::sqrt(s / static_cast<double>(X.rows())), m.gbdt.train_rmse[t], 1e-9);
      }
    }
  }
}

TEST(Gbdt, BeatsLinearOnNonlinearTarget) {
  const auto X = uniform_matrix(600, 4, 7);
  const auto y = xor_target(X);
  const auto Xt = uniform_matrix(600, 4, 8);
  const auto yt = xor_target(Xt);
  const auto g = fit_gbdt(X, y, small_params());
  const auto l = fit_linear(X, y);
  const auto base = fit_baseline_avg(y);
  const double rb = rmse(predict(base, Xt), yt);
  const double rg = rmse(predict(g, Xt), yt), rl = rmse(predict(l, Xt), yt);
  EXPECT_LT(nrmse(rg, rb), 0.9);
  EXPECT_LT(rg, rl);
  EXPECT_LT(rmse(predict(g, X), y), rmse(predict(l, X), y));
}

// Splits depend on order statistics only.
TEST(Gbdt, InvariantUnderMonotoneTransforms) {
  const auto X = uniform_matrix(300, 3, 11);
  auto y = xor_target(X);
  for (std::size_t r = 0; r < y.size(); ++r) y[r] += X.at(r, 2);
  auto Z = X;
  for (std::size_t r = 0; r < Z.rows(); ++r) {
    Z.at(r, 0) = std::exp(3.0 * Z.at(r, 0));
    Z.at(r, 1) = std::pow(Z.at(r, 1), 3);
    Z.at(r, 2) = 100.0 * Z.at(r, 2) - 7.0;
  }
  auto p = small_params();
  p.feature_subsample = 0.67;
  p.seed = 3;
  EXPECT_EQ(predict(fit_gbdt(X, y, p), X), predict(fit_gbdt(Z, y, p), Z));
}

TEST(Gbdt, ThreadsAndHistogramPathAgree) {
  const auto X = matrix(300, 5, [](std::size_t r, std::size_t c) { return static_cast<double>((r * (c + 3)) % 17); });
  std::vector<double> y;
  for (std::size_t r = 0; r < X.rows(); ++r) y.push_back(std::sin(static_cast<double>(r)) * 3 + X.at(r, 1));
  auto p = small_params();
  p.feature_subsample = 0.6;
  const auto a = fit_gbdt(X, y, p);
  p.threads = 4;
  EXPECT_EQ(fit_gbdt(X, y, p), a);
  // with at least as many bins as unique values the binned search is exact
  p.max_bins = 32;
  EXPECT_EQ(fit_gbdt(X, y, p).gbdt.trees, a.gbdt.trees);
}

TEST(Gbdt, Seeded) {
  const auto X = uniform_matrix(200, 8, 5);
  const auto y = xor_target(X);
  auto p = small_params();
  p.feature_subsample = 0.3;
  const auto a = fit_gbdt(X, y, p);
  EXPECT_EQ(fit_gbdt(X, y, p), a);
  p.seed = 99;
  EXPECT_NE(fit_gbdt(X, y, p).gbdt.trees, a.gbdt.trees);
}

TEST(Gbdt, MinSamplesLeaf) {
  const auto X = uniform_matrix(100, 2, 6);
  const auto y = xor_target(X);
  auto p = small_params();
  p.min_samples_leaf = 30;
  const auto m = fit_gbdt(X, y, p);
  const GbdtDataset data(X);
  for (const auto& tree : m.gbdt.trees) {
    std::map<int, int> leaf_rows;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      int i = 0;
      while (tree.nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = tree.nodes[static_cast<std::size_t>(i)];
        i = X.at(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
      }
      ++leaf_rows[i];
    }
    for (auto [_, n] : leaf_rows) EXPECT_GE(n, 30);
  }
}

TEST(Gbdt, Errors) {
  GbdtParams p;
  p.n_trees = 0;
  EXPECT_THROW(p.validate(), ConfigurationError);
  p = {};
  p.max_bins = 1;
  EXPECT_THROW(p.validate(), ConfigurationError);
  const auto X = uniform_matrix(1, 2, 1);
  EXPECT_THROW(fit_gbdt(X, std::vector<double>{1.0}, GbdtParams{}), FitError);
  auto bad = uniform_matrix(5, 1, 1);
  bad.at(2, 0) = std::nan("");
  EXPECT_THROW(GbdtDataset{bad}, ValidationError);
  const auto ok = uniform_matrix(5, 1, 1);
  EXPECT_THROW(fit_gbdt(ok, std::vector<double>{1, 2}, small_params()), ContractError);
}

TEST(Linear, ExactLine) {
  const auto X = matrix(5, 1, [](std::size_t r, std::size_t) { return static_cast<double>(r) - 1.5; });
  std::vector<double> y;
  for (std::size_t r = 0; r < 5; ++r) y.push_back(2.0 * X.at(r, 0) + 1.0);
  const auto m = fit_linear(X, y);
  EXPECT_NEAR(m.linear.coef[0], 2.0, 1e-10);
  EXPECT_NEAR(m.linear.intercept, 1.0, 1e-10);
}

TEST(Linear, ConstantColumn) {
  const auto X = matrix(4, 1, [](std::size_t, std::size_t) { return 3.0; });
  const std::vector<double> y{1, 2, 3, 6};
  const auto m = fit_linear(X, y);
  EXPECT_NEAR(m.linear.intercept, 3.0, 1e-12);
  EXPECT_NEAR(m.linear.coef[0], 0.0, 1e-12);
}

TEST(Linear, PlantedCoefficients) {
  const auto X = uniform_matrix(200, 12, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> beta(12);
  for (auto& b : beta) b = n(rng);
  const double intercept = -4.5;
  std::vector<double> y;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double s = intercept;
    for (std::size_t c = 0; c < 12; ++c) s += beta[c] * X.at(r, c);
    y.push_back(s);
  }
  const auto m = fit_linear(X, y);
  for (std::size_t c = 0; c < 12; ++c) EXPECT_NEAR(m.linear.coef[c], beta[c], 1e-8);
  EXPECT_NEAR(m.linear.intercept, intercept, 1e-8);
}

TEST(Baseline, Examples) {
  const auto X = uniform_matrix(7, 2, 1);
  const auto m = fit_baseline_avg(std::vector<double>{2, 4});
  for (double p : predict(m, X)) EXPECT_EQ(p, 3.0);
  EXPECT_EQ(predict(fit_baseline_avg(std::vector<double>{0}), X), std::vector<double>(7, 0.0));
  EXPECT_THROW(fit_baseline_avg(std::vector<double>{}), FitError);
  // the baseline ignores the schema
  EXPECT_EQ(predict(m, uniform_matrix(3, 5, 2)).size(), 3u);
}

TEST(Predict, SchemaAndEmpty) {
  const auto X = uniform_matrix(30, 3, 1);
  const auto m = fit_linear(X, xor_target(X));
  auto other = X;
  other.columns[0] = "renamed";
  EXPECT_THROW(predict(m, other), ContractError);
  auto empty = X;
  empty.row_ids.clear();
  empty.values.clear();
  EXPECT_TRUE(predict(m, empty).empty());
}

TEST(ModelIo, RoundTrip) {
  const auto X = uniform_matrix(120, 4, 31);
  const auto y = xor_target(X);
  for (const auto& m : {fit_gbdt(X, y, small_params()), fit_linear(X, y), fit_baseline_avg(y)}) {
    std::stringstream ss;
    write_model(ss, m);
    const auto back = read_model(ss);
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.columns, m.columns);
    EXPECT_EQ(predict(back, X), predict(m, X));
  }
  std::istringstream junk("not-a-model\n");
  EXPECT_THROW(read_model(junk), ParseError);
  std::istringstream truncated("viewcast-model 1\nkind gbdt\n");
  EXPECT_THROW(read_model(truncated), ParseError);
}
