#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"

using namespace viewcast;
using namespace vt;

namespace {
std::string dump(const Corpus& c) {
  std::ostringstream ss;
  write_events(c, ss);
  return ss.str();
}
}  // namespace

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  cfg.n_videos = 200;
  cfg.n_hosts = 50;
  cfg.missing_history_fraction = 0.1;
  const auto a = generate_corpus(cfg), b = generate_corpus(cfg);
  EXPECT_EQ(dump(a.corpus), dump(b.corpus));
  cfg.seed = 43;
  EXPECT_NE(dump(generate_corpus(cfg).corpus), dump(a.corpus));
}

// Noiseless views equal the sum of the planted influence functions over the
// video's recorded infections.
TEST(Synth, NoiselessViewsFollowForwardModel) {
  auto cfg = noiseless(300, 40);
  cfg.embed_fraction = 0.5;
  cfg.link_fraction = 0.4;
  const auto res = generate_corpus(cfg);
  const auto& c = res.corpus;
  const int M = c.grid().horizon_days();
  std::map<std::string, std::size_t> truth_index;
  for (std::size_t h = 0; h < res.truth.hosts.size(); ++h) truth_index[res.truth.hosts[h]] = h;
  std::size_t nonzero = 0;
  for (const auto& v : c.videos()) {
    std::vector<double> expect(static_cast<std::size_t>(M), 0.0);
    auto add = [&](const std::vector<WebRecord>& recs, const std::vector<std::vector<double>>& table) {
      for (const auto& r : recs) {
        const auto& f = table[truth_index.at(c.host_name(r.host))];
        for (std::size_t lag = 0; lag < f.size(); ++lag)
          if (r.day + static_cast<Day>(lag) < M) expect[static_cast<std::size_t>(r.day) + lag] += double(r.count) * f[lag];
      }
    };
    add(v.embeds, res.truth.embed_influence);
    add(v.links, res.truth.link_influence);
    for (int d = 0; d < M; ++d) {
      EXPECT_EQ(static_cast<double>(v.timeline.daily_views[static_cast<std::size_t>(d)]), expect[static_cast<std::size_t>(d)]);
      nonzero += expect[static_cast<std::size_t>(d)] != 0.0;
    }
  }
  EXPECT_GT(nonzero, 100u);
}

TEST(Synth, SnapshotInvariants) {
  SynthConfig cfg;
  cfg.n_videos = 100;
  cfg.n_hosts = 20;
  const auto c = generate_corpus(cfg).corpus;
  for (const auto& v : c.videos()) {
    ASSERT_EQ(v.snapshots.size(), static_cast<std::size_t>(c.grid().horizon_days() + 1));
    const ApiSnapshot* prev = nullptr;
    for (const auto& s : v.snapshots) {
      ASSERT_TRUE(s.has_value());
      if (s->rating_count > 0) {
        EXPECT_LE(s->min_rating, s->avg_rating);
        EXPECT_LE(s->avg_rating, s->max_rating);
      }
      if (prev) {
        EXPECT_GE(s->like_count, prev->like_count);
        EXPECT_GE(s->rating_count, prev->rating_count);
      }
      prev = &*s;
    }
  }
}

TEST(Synth, MissingHistoryFraction) {
  SynthConfig cfg;
  cfg.n_videos = 2000;
  cfg.n_hosts = 20;
  cfg.missing_history_fraction = 0.25;
  const auto c = generate_corpus(cfg).corpus;
  std::size_t missing = 0;
  for (const auto& v : c.videos()) missing += !v.timeline.has_history;
  EXPECT_NEAR(static_cast<double>(missing) / 2000.0, 0.25, 0.04);
}

TEST(Synth, ConfigValidationAndJson) {
  SynthConfig cfg;
  cfg.n_videos = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg = {};
  cfg.power_law_alpha = 1.0;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg = {};
  cfg.embed_fraction = 1.5;
  EXPECT_THROW(validate(cfg), ValidationError);

  cfg = {};
  cfg.seed = 7;
  cfg.base_interest.log_sd = 0.3;
  nlohmann::json j = cfg;
  const auto back = j.get<SynthConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_THROW(nlohmann::json::parse(R"({"n_vidoes": 3})").get<SynthConfig>(), ConfigurationError);
}

TEST(PowerLaw, ZetaSampleFit) {
  std::mt19937_64 rng(5);
  ZetaDistribution z(2.5);
  std::vector<std::int64_t> counts(100000);
  for (auto& c : counts) c = z(rng);
  const double a = fit_power_law_exponent(counts);
  EXPECT_GE(a, 2.3);
  EXPECT_LE(a, 2.7);
}

// Independent check of the estimator: the MLE sets the derivative of the
// log-likelihood to zero, i.e. -zeta'(a)/zeta(a) equals the mean log count.
// Both zeta sums are evaluated by brute force here.
TEST(PowerLaw, FitSolvesScoreEquation) {
  std::mt19937_64 rng(11);
  ZetaDistribution z(2.2);
  std::vector<std::int64_t> counts(20000);
  double mean_log = 0.0;
  for (auto& c : counts) {
    c = z(rng);
    mean_log += std::log(static_cast<double>(c));
  }
  mean_log /= static_cast<double>(counts.size());
  const double a = fit_power_law_exponent(counts);
  double zeta = 0.0, dzeta = 0.0;
  const int N = 2000000;
  for (int k = N; k >= 1; --k) {
    const double p = std::pow(k, -a);
    zeta += p;
    dzeta += p * std::log(static_cast<double>(k));
  }
  // tail beyond N by the integral approximation
  zeta += std::pow(N, 1.0 - a) / (a - 1.0);
  dzeta += std::pow(N, 1.0 - a) * (std::log(double(N)) / (a - 1.0) + 1.0 / ((a - 1.0) * (a - 1.0)));
  EXPECT_NEAR(dzeta / zeta, mean_log, 1e-4);
}

TEST(PowerLaw, Errors) {
  std::vector<std::int64_t> equal(500, 3);
  EXPECT_THROW(fit_power_law_exponent(equal), DegenerateError);
  std::vector<std::int64_t> two{1, 2};
  EXPECT_THROW(fit_power_law_exponent(two), SampleSizeError);
  EXPECT_THROW(ZetaDistribution(1.0), DomainError);
}
