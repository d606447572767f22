#pragma once

// Experiment runner: repeated three-way splits over a corpus, one model per
// (feature set, target, t_c, t_t, repeat) cell, and report CSV output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewcast/core.hpp"
#include "viewcast/corpus.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/eval.hpp"
#include "viewcast/features.hpp"
#include "viewcast/learn.hpp"
#include "viewcast/lim.hpp"
#include "viewcast/parallel.hpp"
#include "viewcast/synth.hpp"

namespace viewcast {

enum class ExperimentKind { Baselines, FeatureSets, GroupAblation, DelaySweep, PerDayCurves, NdcgStudy };

inline std::string_view experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Baselines: return "baselines";
    case ExperimentKind::FeatureSets: return "feature_sets";
    case ExperimentKind::GroupAblation: return "group_ablation";
    case ExperimentKind::DelaySweep: return "delay_sweep";
    case ExperimentKind::PerDayCurves: return "per_day_curves";
    case ExperimentKind::NdcgStudy: return "ndcg_study";
  }
  return "";
}

inline ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::Baselines, ExperimentKind::FeatureSets, ExperimentKind::GroupAblation,
                 ExperimentKind::DelaySweep, ExperimentKind::PerDayCurves, ExperimentKind::NdcgStudy})
    if (experiment_kind_name(k) == s) return k;
  throw ConfigurationError("unknown experiment kind '" + std::string(s) + "'");
}

/// Row label of the training-mean predictor.
inline const std::string kBaseAvgRow = "BASE.avg";

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FeatureSets;
  std::vector<std::string> corpus;       // event files; when empty `synth` is generated
  std::optional<SynthConfig> synth;
  int horizon_days = 27;
  std::vector<std::string> feature_sets;  // empty: the kind's default rows
  std::string reference;                  // empty: "API" (delay sweep: t_c = 1)
  std::vector<std::string> targets;       // empty: the kind's default targets
  SplitPlan split;
  ModelKind model = ModelKind::Gbdt;
  GbdtParams gbdt{.n_trees = 100, .max_depth = 4, .learning_rate = 0.15, .min_samples_leaf = 5,
                  .feature_subsample = 0.5, .seed = 7, .max_bins = 255, .threads = 1};
  std::vector<int> tree_grid;  // n_trees candidates chosen on repeat 0's validation third
  std::vector<LimConfig> lims = default_lim_configs({14, 27});
  std::vector<int> target_days;        // empty: 1..14
  std::vector<int> delay_target_days;  // delay sweep only; empty: {7, 14}
  std::vector<int> delays;             // delay sweep only; empty: 0..t_t-1
  bool include_missing_history = false;
  std::string output;  // CSV path; empty: <out-dir>/<kind>.csv
  unsigned threads = 1;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ConfigurationError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigurationError("unknown " + std::string(what) + " key '" + key + "'");
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, GbdtParams& p) {
  detail::check_keys(j,
                     {"n_trees", "max_depth", "learning_rate", "min_samples_leaf", "feature_subsample", "seed",
                      "max_bins", "threads"},
                     "gbdt params");
  if (j.contains("n_trees")) j.at("n_trees").get_to(p.n_trees);
  if (j.contains("max_depth")) j.at("max_depth").get_to(p.max_depth);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(p.learning_rate);
  if (j.contains("min_samples_leaf")) j.at("min_samples_leaf").get_to(p.min_samples_leaf);
  if (j.contains("feature_subsample")) j.at("feature_subsample").get_to(p.feature_subsample);
  if (j.contains("seed")) j.at("seed").get_to(p.seed);
  if (j.contains("max_bins")) j.at("max_bins").get_to(p.max_bins);
  if (j.contains("threads")) j.at("threads").get_to(p.threads);
  p.validate();
}

inline void to_json(nlohmann::json& j, const GbdtParams& p) {
  j = nlohmann::json{{"n_trees", p.n_trees},
                     {"max_depth", p.max_depth},
                     {"learning_rate", p.learning_rate},
                     {"min_samples_leaf", p.min_samples_leaf},
                     {"feature_subsample", p.feature_subsample},
                     {"seed", p.seed},
                     {"max_bins", p.max_bins}};
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  detail::check_keys(j,
                     {"kind", "corpus", "synth", "horizon_days", "feature_sets", "reference", "targets", "split",
                      "model", "gbdt", "tree_grid", "lims", "target_days", "delay_target_days", "delays",
                      "include_missing_history", "output", "threads"},
                     "experiment config");
  ExperimentConfig c;
  if (!j.contains("kind")) throw ConfigurationError("experiment config needs 'kind'");
  c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
  if (j.contains("corpus")) {
    const auto& cp = j.at("corpus");
    if (cp.is_string()) {
      c.corpus.push_back(cp.get<std::string>());
    } else {
      c.corpus = cp.get<std::vector<std::string>>();
    }
  }
  if (j.contains("synth")) c.synth = j.at("synth").get<SynthConfig>();
  if (j.contains("horizon_days")) j.at("horizon_days").get_to(c.horizon_days);
  if (j.contains("feature_sets")) c.feature_sets = j.at("feature_sets").get<std::vector<std::string>>();
  if (j.contains("reference")) j.at("reference").get_to(c.reference);
  if (j.contains("targets")) {
    c.targets = j.at("targets").get<std::vector<std::string>>();
    for (const auto& t : c.targets) parse_target(t);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::check_keys(s, {"seed", "repeats"}, "split plan");
    if (s.contains("seed")) s.at("seed").get_to(c.split.seed);
    if (s.contains("repeats")) s.at("repeats").get_to(c.split.repeats);
    c.split.validate();
  }
  if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("gbdt")) from_json(j.at("gbdt"), c.gbdt);
  if (j.contains("tree_grid")) c.tree_grid = j.at("tree_grid").get<std::vector<int>>();
  for (int t : c.tree_grid)
    if (t < 1) throw ConfigurationError("tree_grid entries must be >= 1");
  if (j.contains("lims")) c.lims = j.at("lims").get<std::vector<LimConfig>>();
  if (j.contains("target_days")) c.target_days = j.at("target_days").get<std::vector<int>>();
  if (j.contains("delay_target_days")) c.delay_target_days = j.at("delay_target_days").get<std::vector<int>>();
  if (j.contains("delays")) c.delays = j.at("delays").get<std::vector<int>>();
  if (j.contains("include_missing_history")) j.at("include_missing_history").get_to(c.include_missing_history);
  if (j.contains("output")) j.at("output").get_to(c.output);
  if (j.contains("threads")) j.at("threads").get_to(c.threads);
  if (c.corpus.empty() && !c.synth) throw ConfigurationError("experiment config needs 'corpus' or 'synth'");
  if (c.horizon_days < kMaxTargetDay) throw ConfigurationError("horizon_days must cover the 14 target days");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open experiment config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError("experiment config " + path.string() + ": " + e.what());
  }
  auto c = parse_experiment_config(j);
  // corpus paths are relative to the config file
  for (auto& p : c.corpus)
    if (std::filesystem::path(p).is_relative()) p = (path.parent_path() / p).string();
  return c;
}

inline Corpus load_experiment_corpus(const ExperimentConfig& c) {
  if (!c.corpus.empty()) return load_corpus(c.corpus, TimeGrid(c.horizon_days));
  if (!c.synth) throw ConfigurationError("experiment config needs 'corpus' or 'synth'");
  return generate_corpus(*c.synth).corpus;
}

// -- default grids --------------------------------------------------------------------

inline std::vector<std::string> default_rows(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Baselines:
      return {"API", "BASE.lit", "API_Sv", "API_Sa", "API_D", "API_Sa∪API_D", "API_Sv∪API_D", "API_Sv∪API_Sa"};
    case ExperimentKind::FeatureSets:
      return {"API", "API∪LOG", "API∪WEB", "ALL", "ALL∖WEB_nag", "API∪WEB_ag",
              "LOG", "WEB",     "WEB∪LOG", "WEB_ag∪LOG", "WEB_nag",  "WEB_ag"};
    case ExperimentKind::GroupAblation: {
      std::vector<std::string> rows{"API"};
      for (const char* g : {"tc", "sv", "uf", "ar", "se"}) {
        rows.push_back(std::string("API∖") + g);
        rows.push_back(std::string("ALL∖") + g);
      }
      return rows;
    }
    case ExperimentKind::DelaySweep: return {"ALL"};
    case ExperimentKind::PerDayCurves: return {"API", "API∪LOG", "API∪WEB", "ALL"};
    case ExperimentKind::NdcgStudy: return {"API", "ALL∖WEB_nag", "ALL", "LOG", "WEB_ag", "WEB", "WEB∪LOG"};
  }
  return {};
}

inline std::vector<Target> default_targets(ExperimentKind k) {
  if (k == ExperimentKind::GroupAblation)
    return {{TargetKind::ViewsCumulative, true}, {TargetKind::ViewsCumulative, false}};
  if (k == ExperimentKind::PerDayCurves) return {{TargetKind::ViewsCumulative, false}};
  return {{TargetKind::ViewsCumulative, true},
          {TargetKind::ViewsDaily, true},
          {TargetKind::ViewsCumulative, false},
          {TargetKind::ViewsDaily, false}};
}

/// Per-cell raw outcomes, indexed [row][target][pair][repeat].
struct CellGrid {
  std::vector<std::string> rows;
  std::vector<Target> targets;
  std::vector<std::pair<Day, Day>> pairs;  // (t_c, t_t)
  int repeats = 0;
  std::vector<double> rmse, nrmse, ndcg;

  std::size_t index(std::size_t row, std::size_t target, std::size_t pair, std::size_t repeat) const {
    return ((row * targets.size() + target) * pairs.size() + pair) * static_cast<std::size_t>(repeats) + repeat;
  }

  std::vector<double> repeats_of(const std::vector<double>& metric, std::size_t row, std::size_t target,
                                 std::size_t pair) const {
    std::vector<double> out(static_cast<std::size_t>(repeats));
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = metric[index(row, target, pair, r)];
    return out;
  }
};

class ExperimentRunner {
public:
  ExperimentRunner(const Corpus& corpus, ExperimentConfig cfg) : corpus_(corpus), cfg_(std::move(cfg)) {
    cfg_.split.validate();
    cfg_.gbdt.validate();
    for (std::size_t i = 0; i < corpus_.size(); ++i)
      if (cfg_.include_missing_history || corpus_.video(i).timeline.has_history) eligible_.push_back(i);
    if (eligible_.size() < 3) throw SizeError("experiment needs at least 3 videos with a views history");
    for (int r = 0; r < cfg_.split.repeats; ++r) splits_.push_back(split_indices(eligible_.size(), cfg_.split, r));
    for (std::size_t i = 0; i < eligible_.size(); ++i) ids_.push_back(corpus_.video(eligible_[i]).id().str());
  }

  const ExperimentConfig& config() const noexcept { return cfg_; }
  std::span<const std::size_t> eligible() const noexcept { return eligible_; }

  /// Evaluates every (row, target, pair, repeat) cell. Rows are feature-set
  /// expressions or "BASE.avg".
  CellGrid evaluate(const std::vector<std::string>& rows, const std::vector<Target>& targets,
                    const std::vector<std::pair<Day, Day>>& pairs, bool want_ndcg) {
    CellGrid g;
    g.rows = rows;
    g.targets = targets;
    g.pairs = pairs;
    g.repeats = cfg_.split.repeats;
    const std::size_t n_cells = rows.size() * targets.size() * pairs.size() * static_cast<std::size_t>(g.repeats);
    g.rmse.assign(n_cells, 0.0);
    g.nrmse.assign(n_cells, 0.0);
    g.ndcg.assign(want_ndcg ? n_cells : 0, 0.0);
    for (const auto& [tc, tt] : pairs) (void)PredictionTask{Target{}, tc, tt};

    // resolve feature sets; LIM columns only when some row asks for them
    std::vector<std::optional<FeatureSpec>> specs(rows.size());
    bool need_lim = false;
    {
      const auto probe = make_universe(corpus_.categories(), dummy_lims());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] == kBaseAvgRow) continue;
        specs[i] = resolve_feature_spec(rows[i], probe);
        need_lim = need_lim || specs[i]->uses_lim();
      }
    }
    if (need_lim) ensure_lims();
    const auto plain = make_universe(corpus_.categories());
    const auto universe = need_lim ? make_universe(corpus_.categories(), lims_.front()) : plain;
    std::vector<std::vector<std::size_t>> spec_cols(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!specs[i]) continue;
      for (const auto& c : specs[i]->columns)
        spec_cols[i].push_back(static_cast<std::size_t>(
            std::lower_bound(universe.columns.begin(), universe.columns.end(), c) - universe.columns.begin()));
    }

    // chosen n_trees per (row, target, pair), fixed on repeat 0
    tuned_.assign(rows.size() * targets.size() * pairs.size(), cfg_.gbdt.n_trees);

    std::map<Day, std::vector<std::size_t>> pairs_by_tc;
    for (std::size_t p = 0; p < pairs.size(); ++p) pairs_by_tc[pairs[p].first].push_back(p);

    for (const auto& [tc, pair_ids] : pairs_by_tc) {
      const auto base = build_universe_matrix(corpus_, plain, tc, {}, eligible_, cfg_.threads);
      auto run_repeat = [&](std::size_t r) {
        evaluate_repeat(g, r, tc, pair_ids, base, plain, universe, need_lim, specs, spec_cols, want_ndcg);
      };
      std::size_t first = 0;
      if (!cfg_.tree_grid.empty() && cfg_.model == ModelKind::Gbdt) {
        run_repeat(0);
        first = 1;
      }
      parallel_for(static_cast<std::size_t>(g.repeats) - first, cfg_.threads,
                   [&](std::size_t k) { run_repeat(k + first); });
    }
    return g;
  }

  /// Runs the configured experiment and returns its report rows in a fixed order.
  std::vector<MetricResult> run() {
    switch (cfg_.kind) {
      case ExperimentKind::DelaySweep: return run_delay_sweep();
      case ExperimentKind::NdcgStudy: return run_table(true);
      case ExperimentKind::PerDayCurves: return run_per_day();
      default: return run_table(false);
    }
  }

  std::vector<Target> targets() const {
    if (cfg_.targets.empty()) return default_targets(cfg_.kind);
    std::vector<Target> out;
    for (const auto& t : cfg_.targets) out.push_back(parse_target(t));
    return out;
  }

  std::vector<std::string> rows() const { return cfg_.feature_sets.empty() ? default_rows(cfg_.kind) : cfg_.feature_sets; }

  std::vector<int> target_days() const {
    if (!cfg_.target_days.empty()) return cfg_.target_days;
    std::vector<int> d;
    for (int t = 1; t <= kMaxTargetDay; ++t) d.push_back(t);
    return d;
  }

private:
  std::span<const InfluenceSet> dummy_lims() {
    // names only: resolution needs the LIM column layout, not trained values
    if (layout_.empty())
      for (const auto& c : cfg_.lims) {
        InfluenceSet s;
        s.config = c;
        layout_.push_back(std::move(s));
      }
    if (layout_.size() != kLimModelCount) return {};
    return layout_;
  }

  void ensure_lims() {
    if (cfg_.lims.size() != kLimModelCount)
      throw ConfigurationError("WEB_nag feature sets need exactly 12 LIM configs");
    if (!lims_.empty()) return;
    const std::size_t R = static_cast<std::size_t>(cfg_.split.repeats), M = cfg_.lims.size();
    std::vector<InfluenceSet> flat(R * M);
    parallel_for(R * M, cfg_.threads, [&](std::size_t k) {
      const auto r = k / M, m = k % M;
      std::vector<std::size_t> videos;
      for (auto pos : splits_[r].validation) videos.push_back(eligible_[pos]);
      auto sys = build_design(corpus_, cfg_.lims[m], videos);
      flat[k] = sys.empty() ? empty_set(cfg_.lims[m], sys) : solve_lim(sys, cfg_.lims[m]);
    });
    lims_.resize(R);
    for (std::size_t r = 0; r < R; ++r)
      lims_[r].assign(std::make_move_iterator(flat.begin() + static_cast<std::ptrdiff_t>(r * M)),
                      std::make_move_iterator(flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * M)));
  }

  static InfluenceSet empty_set(const LimConfig& c, const SparseSystem& sys) {
    InfluenceSet s;
    s.config = c;
    s.converged = true;
    for (const auto& h : sys.hosts) s.functions.push_back({h, std::vector<double>(static_cast<std::size_t>(c.L), 0.0)});
    s.reindex();
    return s;
  }

  // Universe rows for `positions` (into eligible_) at t_c, LIM block appended when needed.
  FeatureMatrix compose(const FeatureMatrix& base, const FeatureUniverse& plain, const FeatureUniverse& universe,
                        const std::vector<std::size_t>& positions, Day tc, std::size_t repeat, bool need_lim) const {
    auto part = select_rows(base, positions);
    if (!need_lim) return part;
    std::vector<std::size_t> videos;
    for (auto p : positions) videos.push_back(eligible_[p]);
    const auto block = lim_feature_block(corpus_, lims_[repeat], tc, videos);
    FeatureMatrix m;
    m.t_c = tc;
    m.row_ids = std::move(part.row_ids);
    m.columns = universe.columns;
    const std::size_t nc = universe.columns.size();
    m.values.assign(positions.size() * nc, 0.0);
    std::vector<std::size_t> from_plain(plain.columns.size()), from_lim(block.cols());
    auto pos = [&](const std::string& c) {
      return static_cast<std::size_t>(std::lower_bound(universe.columns.begin(), universe.columns.end(), c) -
                                      universe.columns.begin());
    };
    for (std::size_t i = 0; i < plain.columns.size(); ++i) from_plain[i] = pos(plain.columns[i]);
    for (std::size_t i = 0; i < block.cols(); ++i) from_lim[i] = pos(block.names[i]);
    for (std::size_t r = 0; r < positions.size(); ++r) {
      for (std::size_t i = 0; i < plain.columns.size(); ++i) m.values[r * nc + from_plain[i]] = part.at(r, i);
      for (std::size_t i = 0; i < block.cols(); ++i) m.values[r * nc + from_lim[i]] = block.at(r, i);
    }
    return m;
  }

  std::vector<double> targets_for(const std::vector<std::size_t>& positions, const Target& t, Day tt) const {
    std::vector<double> y;
    y.reserve(positions.size());
    for (auto p : positions) y.push_back(target_value(corpus_.video(eligible_[p]).timeline, t, tt));
    return y;
  }

  void evaluate_repeat(CellGrid& g, std::size_t r, Day tc, const std::vector<std::size_t>& pair_ids,
                       const FeatureMatrix& base, const FeatureUniverse& plain, const FeatureUniverse& universe,
                       bool need_lim, const std::vector<std::optional<FeatureSpec>>& specs,
                       const std::vector<std::vector<std::size_t>>& spec_cols, bool want_ndcg) {
    const auto& sp = splits_[r];
    const bool tune = r == 0 && !cfg_.tree_grid.empty() && cfg_.model == ModelKind::Gbdt;
    const auto train = compose(base, plain, universe, sp.train, tc, r, need_lim);
    const auto test = compose(base, plain, universe, sp.test, tc, r, need_lim);
    std::optional<FeatureMatrix> valid;
    if (tune) valid = compose(base, plain, universe, sp.validation, tc, r, need_lim);
    std::optional<GbdtDataset> data;
    if (cfg_.model == ModelKind::Gbdt) data.emplace(train, 1, cfg_.gbdt.max_bins);
    std::vector<std::string> test_ids;
    for (auto p : sp.test) test_ids.push_back(ids_[p]);

    for (std::size_t row = 0; row < g.rows.size(); ++row) {
      std::optional<FeatureMatrix> test_x, valid_x, train_x;
      if (specs[row]) {
        test_x = select_columns(test, specs[row]->columns);
        if (tune) valid_x = select_columns(*valid, specs[row]->columns);
        if (cfg_.model == ModelKind::Linear) train_x = select_columns(train, specs[row]->columns);
      }
      for (std::size_t ti = 0; ti < g.targets.size(); ++ti) {
        const auto& target = g.targets[ti];
        for (auto p : pair_ids) {
          const Day tt = g.pairs[p].second;
          const auto y_train = targets_for(sp.train, target, tt);
          const auto y_test = targets_for(sp.test, target, tt);
          const auto avg = fit_baseline_avg(y_train);
          const std::vector<double> base_pred(y_test.size(), avg.mean);
          const double base_rmse = rmse(base_pred, y_test);
          std::vector<double> pred;
          if (!specs[row]) {
            pred = base_pred;
          } else if (cfg_.model == ModelKind::BaselineAvg) {
            pred = base_pred;
          } else if (cfg_.model == ModelKind::Linear) {
            pred = predict(fit_linear(*train_x, y_train), *test_x);
          } else {
            auto params = cfg_.gbdt;
            params.threads = 1;
            const std::size_t slot = (row * g.targets.size() + ti) * g.pairs.size() + p;
            if (tune) params.n_trees = *std::max_element(cfg_.tree_grid.begin(), cfg_.tree_grid.end());
            else params.n_trees = tuned_[slot];
            const auto model = fit_gbdt(*data, y_train, params, spec_cols[row]);
            if (tune) {
              const auto y_valid = targets_for(sp.validation, target, tt);
              int best_n = cfg_.tree_grid.front();
              double best = std::numeric_limits<double>::infinity();
              for (int n : cfg_.tree_grid) {
                std::vector<double> vp(y_valid.size());
                for (std::size_t i = 0; i < vp.size(); ++i)
                  vp[i] = model.gbdt.predict(valid_x->row(i), static_cast<std::size_t>(n));
                const double e = rmse(vp, y_valid);
                if (e < best) {
                  best = e;
                  best_n = n;
                }
              }
              tuned_[slot] = best_n;
              pred.resize(y_test.size());
              for (std::size_t i = 0; i < pred.size(); ++i)
                pred[i] = model.gbdt.predict(test_x->row(i), static_cast<std::size_t>(best_n));
            } else {
              pred = predict(model, *test_x);
            }
          }
          const auto idx = g.index(row, ti, p, r);
          g.rmse[idx] = rmse(pred, y_test);
          g.nrmse[idx] = pred == base_pred ? 1.0 : nrmse(g.rmse[idx], base_rmse);
          if (want_ndcg) g.ndcg[idx] = ndcg100(pred, y_test, test_ids);
        }
      }
    }
  }

  std::vector<std::pair<Day, Day>> current_pairs() const {
    std::vector<std::pair<Day, Day>> out;
    for (int t : target_days()) out.emplace_back(t, t);
    return out;
  }

  std::size_t reference_row(const std::vector<std::string>& rows) const {
    const std::string ref = cfg_.reference.empty() ? "API" : cfg_.reference;
    auto it = std::find(rows.begin(), rows.end(), ref);
    if (it == rows.end()) throw ConfigurationError("reference row '" + ref + "' is not among the feature sets");
    return static_cast<std::size_t>(it - rows.begin());
  }

  // Per-day rows plus the day average for each (row, target).
  std::vector<MetricResult> run_table(bool ndcg) {
    const auto rows = this->rows();
    const auto ref = reference_row(rows);
    const auto g = evaluate(rows, targets(), current_pairs(), ndcg);
    const auto& metric = ndcg ? g.ndcg : g.nrmse;
    const std::string day_name = ndcg ? "ndcg100" : "nrmse";
    const std::string avg_name = ndcg ? "mean_ndcg100" : "anrmse";
    const bool full_days = g.pairs.size() == static_cast<std::size_t>(kMaxTargetDay);
    std::vector<MetricResult> out;
    for (std::size_t row = 0; row < g.rows.size(); ++row)
      for (std::size_t ti = 0; ti < g.targets.size(); ++ti) {
        std::vector<double> avg_row(static_cast<std::size_t>(g.repeats), 0.0), avg_ref(avg_row.size(), 0.0);
        for (std::size_t p = 0; p < g.pairs.size(); ++p) {
          MetricResult m;
          m.metric = day_name;
          m.row = g.rows[row];
          m.target = target_name(g.targets[ti]);
          m.t_c = std::to_string(g.pairs[p].first);
          m.t_t = std::to_string(g.pairs[p].second);
          m.repeat_values = g.repeats_of(metric, row, ti, p);
          const auto refv = g.repeats_of(metric, ref, ti, p);
          compare_to_reference(m, refv);
          for (std::size_t r = 0; r < avg_row.size(); ++r) {
            avg_row[r] += m.repeat_values[r];
            avg_ref[r] += refv[r];
          }
          out.push_back(std::move(m));
        }
        MetricResult a;
        a.metric = avg_name;
        a.row = g.rows[row];
        a.target = target_name(g.targets[ti]);
        a.t_t = full_days ? "1-14" : "avg";
        for (std::size_t r = 0; r < avg_row.size(); ++r) {
          if (full_days && !ndcg) {
            // AnRMSE proper, checked against the day-by-day mean below
            std::vector<double> days;
            for (std::size_t p = 0; p < g.pairs.size(); ++p) days.push_back(metric[g.index(row, ti, p, r)]);
            avg_row[r] = anrmse(days);
            days.clear();
            for (std::size_t p = 0; p < g.pairs.size(); ++p) days.push_back(metric[g.index(ref, ti, p, r)]);
            avg_ref[r] = anrmse(days);
          } else {
            avg_row[r] /= static_cast<double>(g.pairs.size());
            avg_ref[r] /= static_cast<double>(g.pairs.size());
          }
        }
        a.repeat_values = avg_row;
        compare_to_reference(a, avg_ref);
        out.push_back(std::move(a));
      }
    return out;
  }

  std::vector<MetricResult> run_per_day() {
    const auto rows = this->rows();
    const auto ref = reference_row(rows);
    const auto g = evaluate(rows, targets(), current_pairs(), false);
    std::vector<MetricResult> out;
    for (std::size_t row = 0; row < g.rows.size(); ++row)
      for (std::size_t ti = 0; ti < g.targets.size(); ++ti)
        for (const auto* which : {&g.rmse, &g.nrmse})
          for (std::size_t p = 0; p < g.pairs.size(); ++p) {
            MetricResult m;
            m.metric = which == &g.rmse ? "rmse" : "nrmse";
            m.row = g.rows[row];
            m.target = target_name(g.targets[ti]);
            m.t_c = std::to_string(g.pairs[p].first);
            m.t_t = std::to_string(g.pairs[p].second);
            m.repeat_values = g.repeats_of(*which, row, ti, p);
            compare_to_reference(m, g.repeats_of(*which, ref, ti, p));
            out.push_back(std::move(m));
          }
    return out;
  }

  std::vector<MetricResult> run_delay_sweep() {
    auto rows = this->rows();
    if (rows.size() != 1) throw ConfigurationError("delay sweep takes exactly one feature set");
    const std::vector<int> tts = cfg_.delay_target_days.empty() ? std::vector<int>{7, 14} : cfg_.delay_target_days;
    std::vector<std::pair<Day, Day>> pairs;
    for (int tt : tts) {
      if (tt < 1 || tt > kMaxTargetDay) throw RangeError("delay sweep target day outside [1, 14]");
      std::vector<int> ds = cfg_.delays;
      if (ds.empty())
        for (int d = 0; d < tt; ++d) ds.push_back(d);
      if (std::find(ds.begin(), ds.end(), tt - 1) == ds.end()) ds.push_back(tt - 1);  // reference t_c = 1
      std::sort(ds.begin(), ds.end());
      for (int d : ds) {
        if (d < 0 || d >= tt) throw ContractError("crawl delay must satisfy 0 <= delta < t_t");
        pairs.emplace_back(tt - d, tt);
      }
    }
    const auto g = evaluate(rows, targets(), pairs, false);
    std::vector<MetricResult> out;
    for (std::size_t ti = 0; ti < g.targets.size(); ++ti)
      for (std::size_t p = 0; p < g.pairs.size(); ++p) {
        const Day tt = g.pairs[p].second;
        std::size_t ref = p;
        for (std::size_t q = 0; q < g.pairs.size(); ++q)
          if (g.pairs[q] == std::pair<Day, Day>{1, tt}) ref = q;
        MetricResult m;
        m.metric = "nrmse";
        m.row = g.rows[0];
        m.target = target_name(g.targets[ti]);
        m.t_c = std::to_string(g.pairs[p].first);
        m.t_t = std::to_string(tt);
        m.repeat_values = g.repeats_of(g.nrmse, 0, ti, p);
        compare_to_reference(m, g.repeats_of(g.nrmse, 0, ti, ref));
        out.push_back(std::move(m));
      }
    return out;
  }

  const Corpus& corpus_;
  ExperimentConfig cfg_;
  std::vector<std::size_t> eligible_;
  std::vector<std::string> ids_;
  std::vector<Split> splits_;
  std::vector<std::vector<InfluenceSet>> lims_;  // per repeat
  std::vector<InfluenceSet> layout_;
  std::vector<int> tuned_;
};

// -- reports ------------------------------------------------------------------------------

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline constexpr std::string_view kReportHeader =
    "experiment,row,target,t_c,t_t,metric,mean,rel_pct,p_value,repeat_values";

inline void write_report_csv(std::ostream& out, std::string_view experiment, const std::vector<MetricResult>& rows) {
  out << kReportHeader << '\n';
  for (const auto& m : rows) {
    std::string reps;
    for (std::size_t i = 0; i < m.repeat_values.size(); ++i) {
      if (i) reps += ';';
      reps += format_double(m.repeat_values[i]);
    }
    out << csv_field(std::string(experiment)) << ',' << csv_field(m.row) << ',' << csv_field(m.target) << ','
        << m.t_c << ',' << m.t_t << ',' << m.metric << ',' << format_double(m.mean) << ','
        << format_double(m.rel_pct) << ',' << format_double(m.p_value) << ',' << reps << '\n';
  }
}

/// Pivot of the day-averaged (or, for the delay sweep, per t_c) metric: one
/// line per row label, one column per target; cells "mean (rel%)", with "*"
/// when p < 0.05.
inline void write_report_table(std::ostream& out, std::string_view caption, const std::vector<MetricResult>& rows) {
  std::vector<std::string> labels, targets;
  std::map<std::pair<std::string, std::string>, const MetricResult*> cells;
  const bool has_avg = std::any_of(rows.begin(), rows.end(), [](const MetricResult& m) {
    return m.metric == "anrmse" || m.metric == "mean_ndcg100";
  });
  for (const auto& m : rows) {
    if (has_avg && m.metric != "anrmse" && m.metric != "mean_ndcg100") continue;
    if (!has_avg && m.metric == "rmse") continue;
    std::string label = m.row;
    if (!has_avg) label += " t_c=" + m.t_c + " t_t=" + m.t_t;
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    if (std::find(targets.begin(), targets.end(), m.target) == targets.end()) targets.push_back(m.target);
    cells[{label, m.target}] = &m;
  }
  out << "# " << caption << "\n\n| |";
  for (const auto& t : targets) out << ' ' << t << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < targets.size(); ++i) out << "---|";
  out << '\n';
  char buf[64];
  for (const auto& l : labels) {
    out << "| " << l << " |";
    for (const auto& t : targets) {
      auto it = cells.find({l, t});
      if (it == cells.end()) {
        out << " |";
        continue;
      }
      const auto& m = *it->second;
      std::snprintf(buf, sizeof buf, " %.4g (%+.2f%%)%s |", m.mean, m.rel_pct, m.p_value < 0.05 ? "*" : "");
      out << buf;
    }
    out << '\n';
  }
}

/// Two-column CSV "t_t,value" per (row, target, metric) curve of a per-day report.
inline std::vector<std::filesystem::path> write_curves(const std::filesystem::path& dir,
                                                       const std::vector<MetricResult>& rows) {
  std::map<std::string, std::vector<std::pair<int, double>>> curves;
  std::vector<std::string> order;
  for (const auto& m : rows) {
    if (m.metric != "rmse" && m.metric != "nrmse") continue;
    std::string key = m.metric + "_" + m.row + "_" + m.target;
    std::string safe;
    for (char c : key) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') ? c : '_';
    if (!curves.contains(safe)) order.push_back(safe);
    curves[safe].emplace_back(std::stoi(m.t_t), m.mean);
  }
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& name : order) {
    auto path = dir / ("curve_" + name + ".csv");
    std::ofstream f(path);
    f << "t_t,value\n";
    for (const auto& [t, v] : curves[name]) f << t << ',' << format_double(v) << '\n';
    written.push_back(path);
  }
  return written;
}

}  // namespace viewcast
