#pragma once

// Regression models: gradient-boosted trees (squared loss), ordinary least
// squares and the training-mean baseline, behind one Model type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "viewcast/core.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/features.hpp"
#include "viewcast/parallel.hpp"

namespace viewcast {

struct GbdtParams {
  int n_trees = 1000;
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_samples_leaf = 1;
  double feature_subsample = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_bins = 0;  // 0: exact scan over unique values
  unsigned threads = 1;      // split search workers; results do not depend on it

  void validate() const {
    if (n_trees < 1) throw ConfigurationError("n_trees must be >= 1");
    if (max_depth < 1) throw ConfigurationError("max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigurationError("learning_rate must be in (0, 1]");
    if (min_samples_leaf < 1) throw ConfigurationError("min_samples_leaf must be >= 1");
    if (!(feature_subsample > 0.0 && feature_subsample <= 1.0))
      throw ConfigurationError("feature_subsample must be in (0, 1]");
    if (max_bins == 1) throw ConfigurationError("max_bins must be 0 (exact) or >= 2");
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbdtEnsemble {
  double base = 0.0;
  std::vector<RegressionTree> trees;  // leaf values already scaled by the learning rate
  std::vector<double> train_rmse;     // after each tree

  double predict(std::span<const double> row, std::size_t n_trees) const {
    double s = base;
    for (std::size_t t = 0; t < std::min(n_trees, trees.size()); ++t) s += trees[t].predict(row);
    return s;
  }
  double predict(std::span<const double> row) const { return predict(row, trees.size()); }

  friend bool operator==(const GbdtEnsemble& a, const GbdtEnsemble& b) { return a.base == b.base && a.trees == b.trees; }
};

/// Column-major copy of a feature matrix with per-column sort orders and
/// unique-value ranks, shared by every fit on the same rows.
class GbdtDataset {
public:
  /// max_bins = 0 keeps every unique value as a candidate threshold; otherwise
  /// values are grouped into at most max_bins count quantiles.
  explicit GbdtDataset(const FeatureMatrix& m, unsigned threads = 1, std::size_t max_bins = 0)
      : columns_(m.columns), n_(m.rows()), exact_(max_bins == 0), values_(m.cols()), order_(m.cols()),
        rank_(m.cols()), uniq_(m.cols()) {
    if (max_bins == 1) throw ConfigurationError("max_bins must be 0 (exact) or >= 2");
    parallel_for(m.cols(), threads, [&](std::size_t f) {
      auto& col = values_[f];
      col.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        col[i] = m.at(i, f);
        if (!std::isfinite(col[i])) throw ValidationError("feature '" + columns_[f] + "' has a non-finite value");
      }
      auto& ord = order_[f];
      ord.resize(n_);
      std::iota(ord.begin(), ord.end(), 0u);
      std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
      auto& rk = rank_[f];
      auto& uq = uniq_[f];
      rk.resize(n_);
      for (auto i : ord) {
        if (uq.empty() || col[i] != uq.back()) uq.push_back(col[i]);
        rk[i] = static_cast<std::uint32_t>(uq.size() - 1);
      }
      if (max_bins == 0 || uq.size() <= max_bins) return;
      // bin of a unique value from the share of rows strictly below it
      std::vector<std::uint32_t> below(uq.size() + 1, 0), bin_of(uq.size());
      for (auto r : rk) ++below[r + 1];
      for (std::size_t b = 0; b < uq.size(); ++b) below[b + 1] += below[b];
      std::vector<double> upper;
      std::vector<std::uint32_t> dense(uq.size());
      for (std::size_t b = 0; b < uq.size(); ++b) {
        bin_of[b] = static_cast<std::uint32_t>(static_cast<std::uint64_t>(below[b]) * max_bins / n_);
        if (b == 0 || bin_of[b] != bin_of[b - 1]) {
          upper.push_back(uq[b]);
        } else {
          upper.back() = uq[b];
        }
        dense[b] = static_cast<std::uint32_t>(upper.size() - 1);
      }
      for (auto& r : rk) r = dense[r];
      uq = std::move(upper);
    });
  }

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return columns_.size(); }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::span<const double> column(std::size_t f) const { return values_[f]; }
  std::span<const std::uint32_t> order(std::size_t f) const { return order_[f]; }
  /// Bin of each row: its rank among the sorted unique values when exact.
  std::span<const std::uint32_t> rank(std::size_t f) const { return rank_[f]; }
  /// Largest value of each bin, i.e. the split threshold after that bin.
  std::span<const double> unique_values(std::size_t f) const { return uniq_[f]; }
  bool exact() const noexcept { return exact_; }

private:
  std::vector<std::string> columns_;
  std::size_t n_;
  bool exact_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::vector<std::uint32_t>> rank_;
  std::vector<std::vector<double>> uniq_;
};

enum class ModelKind { Gbdt, Linear, BaselineAvg };

inline std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Gbdt: return "gbdt";
    case ModelKind::Linear: return "linear";
    case ModelKind::BaselineAvg: return "avg";
  }
  return "";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "gbdt") return ModelKind::Gbdt;
  if (s == "linear") return ModelKind::Linear;
  if (s == "avg" || s == "baseline_avg") return ModelKind::BaselineAvg;
  throw ConfigurationError("unknown model kind '" + std::string(s) + "'");
}

struct LinearState {
  double intercept = 0.0;
  std::vector<double> coef;

  friend bool operator==(const LinearState&, const LinearState&) = default;
};

struct Model {
  ModelKind kind = ModelKind::BaselineAvg;
  std::vector<std::string> columns;  // empty for the baseline, which ignores X
  std::string schema_digest;
  GbdtEnsemble gbdt;
  LinearState linear;
  double mean = 0.0;

  friend bool operator==(const Model&, const Model&) = default;
};

namespace detail {

inline void check_targets(std::size_t rows, std::span<const double> y) {
  if (y.size() != rows) throw ContractError("target length differs from matrix rows");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("non-finite target value");
}

struct SplitCandidate {
  double gain = 0.0;
  double threshold = 0.0;
  int feature = -1;
};

}  // namespace detail

/// Stagewise least-squares boosting. Each tree is grown level by level; every
/// node takes its best split over the sampled columns, scanning sorted unique
/// values (ties: lower threshold, then lower column). Leaves hold
/// learning_rate * mean residual. `cols` restricts the columns used (empty =
/// all); the model's schema is the selected columns in the given order.
inline Model fit_gbdt(const GbdtDataset& data, std::span<const double> y, const GbdtParams& params,
                      std::span<const std::size_t> cols = {}) {
  params.validate();
  const std::size_t n = data.rows();
  if (n < 2) throw FitError("gradient boosting needs at least 2 rows");
  detail::check_targets(n, y);

  std::vector<std::size_t> use;
  if (cols.empty()) {
    use.resize(data.cols());
    std::iota(use.begin(), use.end(), std::size_t{0});
  } else {
    use.assign(cols.begin(), cols.end());
  }
  Model model;
  model.kind = ModelKind::Gbdt;
  for (auto c : use) model.columns.push_back(data.columns().at(c));
  model.schema_digest = FeatureMatrix::schema_digest_of(model.columns);
  if (use.empty()) throw FitError("no feature columns");

  auto& ens = model.gbdt;
  double mean = 0.0;
  for (double v : y) mean += v;
  ens.base = mean / static_cast<double>(n);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ens.base;

  const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
  const std::size_t n_sub =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.feature_subsample * static_cast<double>(use.size()))));
  std::vector<int> node_of(n);
  std::vector<std::size_t> local(use.size());

  for (int t = 0; t < params.n_trees; ++t) {
    // local column positions (into `use`) sampled for this tree, ascending
    std::iota(local.begin(), local.end(), std::size_t{0});
    if (n_sub < use.size()) {
      std::mt19937_64 rng(substream_seed(params.seed, 0x6bd7, static_cast<std::uint64_t>(t)));
      for (std::size_t k = 0; k < n_sub; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, use.size() - 1);
        std::swap(local[k], local[pick(rng)]);
      }
      std::sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(n_sub));
    }
    const std::span<const std::size_t> sampled(local.data(), std::min(n_sub, use.size()));

    RegressionTree tree;
    tree.nodes.emplace_back();
    std::fill(node_of.begin(), node_of.end(), 0);
    std::vector<int> frontier{0};

    for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
      const std::size_t k_nodes = frontier.size();
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < k_nodes; ++k) slot[static_cast<std::size_t>(frontier[k])] = static_cast<int>(k);
      std::vector<double> node_sum(k_nodes, 0.0), node_sq(k_nodes, 0.0);
      std::vector<std::size_t> node_cnt(k_nodes, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const int k = slot[static_cast<std::size_t>(node_of[i])];
        if (k < 0) continue;
        node_sum[static_cast<std::size_t>(k)] += resid[i];
        node_sq[static_cast<std::size_t>(k)] += resid[i] * resid[i];
        ++node_cnt[static_cast<std::size_t>(k)];
      }

      std::vector<int> row_slot(n);
      for (std::size_t i = 0; i < n; ++i) row_slot[i] = slot[static_cast<std::size_t>(node_of[i])];

      // best[f][k]: best split of frontier node k on sampled column f. Both
      // paths visit candidate thresholds in increasing value order.
      std::vector<std::vector<detail::SplitCandidate>> best(sampled.size());
      parallel_for(sampled.size(), params.threads, [&](std::size_t fi) {
        const std::size_t f = use[sampled[fi]];
        auto& out = best[fi];
        out.assign(k_nodes, {});
        const auto uniq = data.unique_values(f);
        const std::size_t u = uniq.size();
        if (u < 2) return;
        auto consider = [&](std::size_t k, double sl, std::size_t nl, double thr) {
          const std::size_t nr = node_cnt[k] - nl;
          if (nl < min_leaf || nr < min_leaf) return;
          // equals sl^2/nl + sr^2/nr - s^2/n without the cancellation
          const double sr = node_sum[k] - sl;
          const double diff = sl * static_cast<double>(nr) - sr * static_cast<double>(nl);
          const double gain =
              diff * diff / (static_cast<double>(nl) * static_cast<double>(nr) * static_cast<double>(node_cnt[k]));
          if (gain > out[k].gain) out[k] = {gain, thr, static_cast<int>(sampled[fi])};
        };
        if (!data.exact() || k_nodes * u <= 2 * n) {
          // histogram over unique values: exact, and sequential in rows
          std::vector<double> hs(k_nodes * u, 0.0);
          std::vector<std::uint32_t> hc(k_nodes * u, 0);
          const auto rk = data.rank(f);
          for (std::size_t i = 0; i < n; ++i) {
            const int k = row_slot[i];
            if (k < 0) continue;
            const std::size_t cell = static_cast<std::size_t>(k) * u + rk[i];
            hs[cell] += resid[i];
            ++hc[cell];
          }
          for (std::size_t k = 0; k < k_nodes; ++k) {
            double sl = 0.0;
            std::size_t nl = 0;
            double last = 0.0;
            for (std::size_t b = 0; b < u; ++b) {
              const auto c = hc[k * u + b];
              if (c == 0) continue;
              if (nl > 0) consider(k, sl, nl, last);
              sl += hs[k * u + b];
              nl += c;
              last = uniq[b];
            }
          }
        } else {
          const auto col = data.column(f);
          std::vector<double> sum_l(k_nodes, 0.0), last(k_nodes, 0.0);
          std::vector<std::size_t> cnt_l(k_nodes, 0);
          for (auto i : data.order(f)) {
            const int ks = row_slot[i];
            if (ks < 0) continue;
            const auto k = static_cast<std::size_t>(ks);
            const double v = col[i];
            if (cnt_l[k] > 0 && v != last[k]) consider(k, sum_l[k], cnt_l[k], last[k]);
            sum_l[k] += resid[i];
            ++cnt_l[k];
            last[k] = v;
          }
        }
      });

      std::vector<int> next;
      for (std::size_t k = 0; k < k_nodes; ++k) {
        detail::SplitCandidate pick;
        for (const auto& b : best)
          if (b[k].gain > pick.gain) pick = b[k];
        // splits that only reshuffle rounding noise are skipped
        if (pick.feature < 0 || !(pick.gain > 1e-12 * node_sq[k])) continue;
        const int id = frontier[k];
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        nd.feature = pick.feature;
        nd.threshold = pick.threshold;
        nd.left = l;
        nd.right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node_of[i])];
        if (nd.feature < 0) continue;
        node_of[i] = data.column(use[static_cast<std::size_t>(nd.feature)])[i] <= nd.threshold ? nd.left : nd.right;
      }
      frontier = std::move(next);
    }

    std::vector<double> leaf_sum(tree.nodes.size(), 0.0);
    std::vector<std::size_t> leaf_cnt(tree.nodes.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      leaf_sum[static_cast<std::size_t>(node_of[i])] += resid[i];
      ++leaf_cnt[static_cast<std::size_t>(node_of[i])];
    }
    for (std::size_t id = 0; id < tree.nodes.size(); ++id)
      if (tree.nodes[id].feature < 0 && leaf_cnt[id] > 0)
        tree.nodes[id].value = params.learning_rate * leaf_sum[id] / static_cast<double>(leaf_cnt[id]);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] -= tree.nodes[static_cast<std::size_t>(node_of[i])].value;
      sse += resid[i] * resid[i];
    }
    ens.train_rmse.push_back(std::sqrt(sse / static_cast<double>(n)));
    ens.trees.push_back(std::move(tree));
  }
  return model;
}

inline Model fit_gbdt(const FeatureMatrix& X, std::span<const double> y, const GbdtParams& params) {
  if (X.rows() < 2) throw FitError("gradient boosting needs at least 2 rows");
  return fit_gbdt(GbdtDataset(X, params.threads, params.max_bins), y, params);
}

/// Least squares with intercept, least-norm when the centred design is rank deficient.
inline Model fit_linear(const FeatureMatrix& X, std::span<const double> y) {
  const std::size_t n = X.rows(), p = X.cols();
  if (n == 0) throw FitError("linear regression needs at least 1 row");
  detail::check_targets(n, y);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X.at(i, j);
    b(static_cast<Eigen::Index>(i)) = y[i];
  }
  const Eigen::RowVectorXd mu = A.colwise().mean();
  const double y_mean = b.mean();
  A.rowwise() -= mu;
  b.array() -= y_mean;

  Model model;
  model.kind = ModelKind::Linear;
  model.columns = X.columns;
  model.schema_digest = X.schema_digest();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (p > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    beta = cod.solve(b);
  }
  model.linear.coef.assign(beta.data(), beta.data() + beta.size());
  model.linear.intercept = y_mean - (p > 0 ? mu.dot(beta) : 0.0);
  return model;
}

inline Model fit_baseline_avg(std::span<const double> y) {
  if (y.empty()) throw FitError("baseline needs at least 1 target value");
  Model m;
  m.kind = ModelKind::BaselineAvg;
  double s = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("non-finite target value");
    s += v;
  }
  m.mean = s / static_cast<double>(y.size());
  return m;
}

inline double predict_row(const Model& m, std::span<const double> row) {
  switch (m.kind) {
    case ModelKind::Gbdt: return m.gbdt.predict(row);
    case ModelKind::Linear: {
      double s = m.linear.intercept;
      for (std::size_t j = 0; j < row.size(); ++j) s += m.linear.coef[j] * row[j];
      return s;
    }
    case ModelKind::BaselineAvg: return m.mean;
  }
  return 0.0;
}

inline std::vector<double> predict(const Model& m, const FeatureMatrix& X) {
  if (m.kind != ModelKind::BaselineAvg && X.schema_digest() != m.schema_digest)
    throw ContractError("feature matrix schema differs from the model's");
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(m, X.row(r));
  return out;
}

// -- persistence ---------------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline void write_model(std::ostream& out, const Model& m) {
  out << "viewcast-model " << kModelFormatVersion << '\n';
  out << "kind " << model_kind_name(m.kind) << '\n';
  out << "columns " << m.columns.size() << '\n';
  for (const auto& c : m.columns) out << c << '\n';
  out << "digest " << (m.schema_digest.empty() ? "-" : m.schema_digest) << '\n';
  switch (m.kind) {
    case ModelKind::BaselineAvg: out << "mean " << format_double(m.mean) << '\n'; break;
    case ModelKind::Linear:
      out << "intercept " << format_double(m.linear.intercept) << '\n';
      out << "coef";
      for (double c : m.linear.coef) out << ' ' << format_double(c);
      out << '\n';
      break;
    case ModelKind::Gbdt:
      out << "base " << format_double(m.gbdt.base) << '\n';
      out << "trees " << m.gbdt.trees.size() << '\n';
      for (const auto& t : m.gbdt.trees) {
        out << "tree " << t.nodes.size() << '\n';
        for (const auto& nd : t.nodes)
          out << nd.feature << ' ' << format_double(nd.threshold) << ' ' << nd.left << ' ' << nd.right << ' '
              << format_double(nd.value) << '\n';
      }
      break;
  }
}

inline Model read_model(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError("unexpected end of model file", line_no + 1);
    ++line_no;
    return std::istringstream(line);
  };
  auto expect = [&](std::istringstream& ss, std::string_view key) {
    std::string k;
    ss >> k;
    if (k != key) throw ParseError("expected '" + std::string(key) + "'", line_no);
  };
  auto number = [&](std::istringstream& ss) {
    std::string tok;
    if (!(ss >> tok)) throw ParseError("missing number", line_no);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ParseError("bad number '" + tok + "'", line_no);
    return v;
  };
  auto integer = [&](std::istringstream& ss) {
    long long v = 0;
    if (!(ss >> v)) throw ParseError("missing integer", line_no);
    return v;
  };

  Model m;
  {
    auto ss = next();
    expect(ss, "viewcast-model");
    if (integer(ss) != kModelFormatVersion) throw ParseError("unsupported model format version", line_no);
  }
  {
    auto ss = next();
    expect(ss, "kind");
    std::string k;
    ss >> k;
    m.kind = parse_model_kind(k);
  }
  {
    auto ss = next();
    expect(ss, "columns");
    const auto nc = integer(ss);
    for (long long i = 0; i < nc; ++i) {
      next();
      m.columns.push_back(line);
    }
  }
  {
    auto ss = next();
    expect(ss, "digest");
    ss >> m.schema_digest;
    if (m.schema_digest == "-") m.schema_digest.clear();
    if (m.kind != ModelKind::BaselineAvg && m.schema_digest != FeatureMatrix::schema_digest_of(m.columns))
      throw ParseError("schema digest does not match the column list", line_no);
  }
  switch (m.kind) {
    case ModelKind::BaselineAvg: {
      auto ss = next();
      expect(ss, "mean");
      m.mean = number(ss);
      break;
    }
    case ModelKind::Linear: {
      auto ss = next();
      expect(ss, "intercept");
      m.linear.intercept = number(ss);
      auto cs = next();
      expect(cs, "coef");
      for (std::size_t j = 0; j < m.columns.size(); ++j) m.linear.coef.push_back(number(cs));
      break;
    }
    case ModelKind::Gbdt: {
      auto bs = next();
      expect(bs, "base");
      m.gbdt.base = number(bs);
      auto ts = next();
      expect(ts, "trees");
      const auto nt = integer(ts);
      for (long long t = 0; t < nt; ++t) {
        auto hs = next();
        expect(hs, "tree");
        const auto nn = integer(hs);
        RegressionTree tree;
        for (long long k = 0; k < nn; ++k) {
          auto ns = next();
          TreeNode nd;
          nd.feature = static_cast<int>(integer(ns));
          nd.threshold = number(ns);
          nd.left = static_cast<int>(integer(ns));
          nd.right = static_cast<int>(integer(ns));
          nd.value = number(ns);
          const bool leaf = nd.feature < 0;
          if (!leaf && (nd.feature >= static_cast<int>(m.columns.size()) || nd.left <= k || nd.right <= k ||
                        nd.left >= nn || nd.right >= nn))
            throw ParseError("malformed tree node", line_no);
          tree.nodes.push_back(nd);
        }
        if (tree.nodes.empty()) throw ParseError("empty tree", line_no);
        m.gbdt.trees.push_back(std::move(tree));
      }
      break;
    }
  }
  return m;
}

}  // namespace viewcast
