#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "viewcast/viewcast.hpp"

namespace fs = std::filesystem;
using namespace viewcast;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir = ".";
};

fs::path under(const Globals& g, const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(g.out_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigurationError("cannot write " + p.string());
  return out;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError(path + ": " + e.what());
  }
}

std::vector<InfluenceSet> read_lims(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  return read_influence_sets(in);
}

FeatureMatrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  return read_feature_csv(in);
}

std::vector<double> targets_of(const Corpus& c, const FeatureMatrix& m, const Target& t, Day tt) {
  std::vector<double> y;
  for (const auto& id : m.row_ids) {
    auto i = c.find(id);
    if (!i) throw ReferentialError("matrix row '" + id + "' is not in the corpus");
    y.push_back(target_value(c.video(*i).timeline, t, tt));
  }
  return y;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viewcast: early web video popularity prediction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the random seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic event corpus");
  std::string gen_config, gen_out = "events.ndjson", gen_truth;
  long long gen_videos = 0;
  gen->add_option("--config", gen_config, "Generator config (JSON)");
  gen->add_option("--n-videos", gen_videos, "Override the number of videos");
  gen->add_option("--out", gen_out, "Event file");
  gen->add_option("--truth", gen_truth, "Ground-truth influence functions (JSON)");

  // ingest
  auto* ing = app.add_subcommand("ingest", "Validate event files and write the canonical stream");
  std::vector<std::string> ing_events;
  std::string ing_out;
  int horizon = 27;
  ing->add_option("--events", ing_events, "Event files")->required();
  ing->add_option("--out", ing_out, "Canonical event file");
  ing->add_option("--horizon", horizon, "Days of the observation grid");

  // features
  auto* feat = app.add_subcommand("features", "Build a feature matrix");
  std::vector<std::string> feat_events;
  std::string feat_spec, feat_out = "features.csv", feat_lims;
  int feat_tc = 1;
  feat->add_option("--events", feat_events, "Event files")->required();
  feat->add_option("--spec", feat_spec, "Feature set name or expression")->required();
  feat->add_option("--tc", feat_tc, "Current day t_c")->required();
  feat->add_option("--lims", feat_lims, "Trained influence models (needed for WEB_nag)");
  feat->add_option("--out", feat_out, "Matrix CSV");
  feat->add_option("--horizon", horizon, "Days of the observation grid");

  // train-lim
  auto* tl = app.add_subcommand("train-lim", "Fit linear influence models");
  std::vector<std::string> tl_events;
  std::string tl_config, tl_out = "influence.ndjson";
  tl->add_option("--events", tl_events, "Event files")->required();
  tl->add_option("--config", tl_config, "LIM config or list of configs (JSON); default: the 12 standard models");
  tl->add_option("--out", tl_out, "Influence file");
  tl->add_option("--horizon", horizon, "Days of the observation grid");

  // train
  auto* tr = app.add_subcommand("train", "Fit a prediction model on a feature matrix");
  std::vector<std::string> tr_events;
  std::string tr_model = "gbdt", tr_matrix, tr_target, tr_out = "model.txt", tr_params;
  int tr_tt = 1;
  tr->add_option("--model", tr_model, "gbdt | linear | avg");
  tr->add_option("--matrix", tr_matrix, "Feature matrix CSV")->required();
  tr->add_option("--target", tr_target, "Views[c] | Views[d] | log(Views[c]) | log(Views[d])")->required();
  tr->add_option("--tt", tr_tt, "Target day t_t")->required();
  tr->add_option("--events", tr_events, "Event files holding the target views")->required();
  tr->add_option("--params", tr_params, "GBDT params (JSON)");
  tr->add_option("--out", tr_out, "Model file");
  tr->add_option("--horizon", horizon, "Days of the observation grid");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a model on a feature matrix");
  std::vector<std::string> ev_events;
  std::string ev_model, ev_matrix, ev_target, ev_baseline, ev_out;
  int ev_tt = 1;
  ev->add_option("--model", ev_model, "Model file")->required();
  ev->add_option("--matrix", ev_matrix, "Feature matrix CSV")->required();
  ev->add_option("--target", ev_target, "Target name")->required();
  ev->add_option("--tt", ev_tt, "Target day t_t")->required();
  ev->add_option("--events", ev_events, "Event files holding the target views")->required();
  ev->add_option("--baseline", ev_baseline, "BASE.avg model file for nRMSE");
  ev->add_option("--out", ev_out, "Predictions CSV");
  ev->add_option("--horizon", horizon, "Days of the observation grid");

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run an experiment grid and write its report");
  std::string ex_config;
  ex->add_option("--config", ex_config, "Experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      SynthConfig cfg;
      if (!gen_config.empty()) cfg = read_json(gen_config).get<SynthConfig>();
      if (g.seed) cfg.seed = *g.seed;
      if (gen_videos > 0) cfg.n_videos = gen_videos;
      validate(cfg);
      const auto res = generate_corpus(cfg);
      auto out = open_out(under(g, gen_out));
      write_events(res.corpus, out);
      if (!gen_truth.empty()) {
        nlohmann::json t;
        for (std::size_t h = 0; h < res.truth.hosts.size(); ++h)
          t["embed"][res.truth.hosts[h]] = res.truth.embed_influence[h];
        for (std::size_t h = 0; h < res.truth.hosts.size(); ++h)
          t["link"][res.truth.hosts[h]] = res.truth.link_influence[h];
        open_out(under(g, gen_truth)) << t.dump() << '\n';
      }
      std::cerr << "generated " << res.corpus.size() << " videos, " << res.corpus.hosts().size() << " hosts\n";
    } else if (*ing) {
      const auto c = load_corpus(ing_events, TimeGrid(horizon));
      std::size_t n_events = 0, with_embeds = 0;
      for_each_event(c, [&](const Event&) { ++n_events; });
      for (const auto& v : c.videos()) with_embeds += !v.embeds.empty();
      if (!ing_out.empty()) {
        auto out = open_out(under(g, ing_out));
        write_events(c, out);
      }
      nlohmann::ordered_json s{{"videos", c.size()},
                               {"hosts", c.hosts().size()},
                               {"events", n_events},
                               {"videos_with_embeds", with_embeds},
                               {"categories", c.categories().size()}};
      std::cout << s.dump(2) << '\n';
    } else if (*feat) {
      const auto c = load_corpus(feat_events, TimeGrid(horizon));
      std::vector<InfluenceSet> lims;
      if (!feat_lims.empty()) lims = read_lims(feat_lims);
      const auto m = build_feature_matrix(c, feat_spec, feat_tc, lims, {}, g.threads);
      auto out = open_out(under(g, feat_out));
      write_feature_csv(out, m);
      std::cerr << m.rows() << " rows x " << m.cols() << " columns\n";
    } else if (*tl) {
      const auto c = load_corpus(tl_events, TimeGrid(horizon));
      std::vector<LimConfig> cfgs = ExperimentConfig{}.lims;
      if (!tl_config.empty()) {
        const auto j = read_json(tl_config);
        cfgs = j.is_array() ? j.get<std::vector<LimConfig>>() : std::vector<LimConfig>{j.get<LimConfig>()};
      }
      auto out = open_out(under(g, tl_out));
      for (const auto& cfg : cfgs) {
        const auto set = train_lim(c, cfg, {}, {.threads = g.threads});
        write_influence_set(out, set);
        std::cerr << lim_column_stem(cfg) << ": " << set.iterations << " iterations, "
                  << (set.converged ? "converged" : "NOT converged") << ", residual " << set.residual_norm << '\n';
      }
    } else if (*tr) {
      const auto c = load_corpus(tr_events, TimeGrid(horizon));
      const auto m = read_matrix(tr_matrix);
      const auto y = targets_of(c, m, parse_target(tr_target), tr_tt);
      Model model;
      switch (parse_model_kind(tr_model)) {
        case ModelKind::Gbdt: {
          GbdtParams p;
          if (!tr_params.empty()) {
            const auto j = read_json(tr_params);
            from_json(j, p);
          }
          if (g.seed) p.seed = *g.seed;
          p.threads = g.threads;
          model = fit_gbdt(m, y, p);
          break;
        }
        case ModelKind::Linear: model = fit_linear(m, y); break;
        case ModelKind::BaselineAvg: model = fit_baseline_avg(y); break;
      }
      auto out = open_out(under(g, tr_out));
      write_model(out, model);
    } else if (*ev) {
      const auto c = load_corpus(ev_events, TimeGrid(horizon));
      const auto m = read_matrix(ev_matrix);
      std::ifstream min(ev_model);
      if (!min) throw ConfigurationError("cannot open " + ev_model);
      const auto model = read_model(min);
      const auto y = targets_of(c, m, parse_target(ev_target), ev_tt);
      const auto pred = predict(model, m);
      nlohmann::ordered_json s{{"rows", y.size()}, {"rmse", rmse(pred, y)}, {"ndcg100", ndcg100(pred, y, m.row_ids)}};
      if (!ev_baseline.empty()) {
        std::ifstream bin(ev_baseline);
        if (!bin) throw ConfigurationError("cannot open " + ev_baseline);
        const auto base = read_model(bin);
        s["nrmse"] = nrmse(rmse(pred, y), rmse(predict(base, m), y));
      }
      if (!ev_out.empty()) {
        auto out = open_out(under(g, ev_out));
        out << "video,prediction,actual\n";
        for (std::size_t i = 0; i < pred.size(); ++i)
          out << m.row_ids[i] << ',' << format_double(pred[i]) << ',' << format_double(y[i]) << '\n';
      }
      std::cout << s.dump(2) << '\n';
    } else if (*ex) {
      auto cfg = load_experiment_config(ex_config);
      if (g.seed) {
        cfg.split.seed = *g.seed;
        if (cfg.synth) cfg.synth->seed = *g.seed;
      }
      cfg.threads = g.threads;
      const auto corpus = load_experiment_corpus(cfg);
      ExperimentRunner runner(corpus, cfg);
      const auto rows = runner.run();
      const std::string kind(experiment_kind_name(cfg.kind));
      const auto csv = under(g, cfg.output.empty() ? kind + ".csv" : cfg.output);
      {
        auto out = open_out(csv);
        write_report_csv(out, kind, rows);
      }
      auto md = csv;
      md.replace_extension(".md");
      {
        auto out = open_out(md);
        write_report_table(out, kind, rows);
      }
      if (cfg.kind == ExperimentKind::PerDayCurves) write_curves(csv.parent_path() / (csv.stem().string() + "_curves"), rows);
      std::cerr << "wrote " << csv.string() << " (" << rows.size() << " rows)\n";
    }
  } catch (const viewcast::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
