#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace viewcast;
using namespace vt;

namespace {
std::vector<std::optional<ApiSnapshot>> like_snapshots(std::initializer_list<std::pair<int, std::int64_t>> likes, int m = 27) {
  std::vector<std::optional<ApiSnapshot>> s(static_cast<std::size_t>(m + 1));
  for (auto [d, n] : likes) {
    ApiSnapshot a;
    a.like_count = n;
    s[static_cast<std::size_t>(d)] = a;
  }
  return s;
}

WebRecord rec(Day d, std::uint32_t host, std::uint32_t page, std::int64_t count) { return {d, host, page, count}; }

std::set<std::string> set_of(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }
}  // namespace

TEST(StaticFeatures, Examples) {
  VideoMeta m;
  m.duration_s = 120;
  m.upload_dow = 2;
  m.category = 5;
  AuthorMeta a;
  a.author_age_days = 0;
  const std::vector<std::int64_t> vocab{1, 5, 9};
  const auto f = extract_static(m, a, vocab);
  EXPECT_EQ(named_value(f, "Dur"), 120.0);
  EXPECT_NEAR(named_value(f, "log(Dur)"), 6.918863237274595, 1e-12);
  EXPECT_EQ(named_value(f, "log(Dur)"), std::log2(121.0));
  for (int d = 0; d < 7; ++d) EXPECT_EQ(named_value(f, "UplDOW[" + std::to_string(d) + "]"), d == 2 ? 1.0 : 0.0);
  EXPECT_EQ(named_value(f, "AuthAge"), 0.0);
  EXPECT_EQ(named_value(f, "log(AuthAge)"), 0.0);
  EXPECT_EQ(named_value(f, "Cat[5]"), 1.0);
  EXPECT_EQ(named_value(f, "Cat[1]"), 0.0);
  EXPECT_EQ(named_value(f, "Cat[other]"), 0.0);
  m.category = 7;
  EXPECT_EQ(named_value(extract_static(m, a, vocab), "Cat[other]"), 1.0);
}

TEST(ApiDynamic, LikeDifference) {
  const auto s = like_snapshots({{1, 10}, {2, 25}});
  const auto f = extract_api_dynamic(s, 2);
  EXPECT_EQ(named_value(f, "LikeCnt[c]"), 25.0);
  EXPECT_EQ(named_value(f, "LikeCnt[d]"), 15.0);
  EXPECT_EQ(named_value(f, "log(LikeCnt[c])"), std::log2(26.0));
  EXPECT_EQ(named_value(f, "log(LikeCnt[d])"), 4.0);
}

TEST(ApiDynamic, UnratedSentinels) {
  const auto f = extract_api_dynamic(like_snapshots({{1, 3}}), 1);
  EXPECT_EQ(named_value(f, "MinRat"), kMissing);
  EXPECT_EQ(named_value(f, "MaxRat"), kMissing);
  EXPECT_EQ(named_value(f, "AvgRat"), kMissing);
  EXPECT_EQ(named_value(f, "RatCnt[c]"), 0.0);
}

TEST(ApiDynamic, BeforeFirstSnapshotIsAllSentinel) {
  const auto f = extract_api_dynamic(like_snapshots({{5, 3}}), 2);
  for (const auto& [name, v] : f) {
    if (name.starts_with("log(")) {
      EXPECT_EQ(v, -1.0) << name;  // signed log of -1
    } else {
      EXPECT_EQ(v, kMissing) << name;
    }
  }
  EXPECT_THROW(extract_api_dynamic(like_snapshots({}), 0), RangeError);
}

TEST(ApiDynamic, UsesLatestSnapshotNotLaterOnes) {
  const auto s = like_snapshots({{1, 10}, {4, 99}});
  const auto f = extract_api_dynamic(s, 3);
  EXPECT_EQ(named_value(f, "LikeCnt[c]"), 10.0);
  EXPECT_EQ(named_value(f, "LikeCnt[d]"), 0.0);
}

TEST(LogFeatures, Arithmetic) {
  const std::vector<std::int64_t> shows{4, 6}, clicks{1, 2}, visits{0, 0};
  const auto f = extract_log_features(shows, clicks, visits, 2);
  EXPECT_EQ(named_value(f, "ShowURL[c]"), 10.0);
  EXPECT_EQ(named_value(f, "ShowURL[d]"), 6.0);
  EXPECT_DOUBLE_EQ(named_value(f, "CTR[c]"), 0.3);
  EXPECT_DOUBLE_EQ(named_value(f, "CTR[d]"), 2.0 / 6.0);
  EXPECT_THROW(named_value(f, "log(CTR[c])"), SchemaError);
}

TEST(LogFeatures, NoEventsAndClamp) {
  const std::vector<std::int64_t> none(5, 0);
  for (const auto& [_, v] : extract_log_features(none, none, none, 3)) EXPECT_EQ(v, 0.0);
  const std::vector<std::int64_t> shows{0, 1}, clicks{3, 4};
  const auto f = extract_log_features(shows, clicks, none, 2);
  EXPECT_EQ(named_value(f, "CTR[c]"), 1.0);
  EXPECT_EQ(named_value(f, "CTR[d]"), 1.0);
}

TEST(WebFeatures, Counting) {
  // host A (0): p1 x2, p2 x1; host B (1): p3 x1; all on day 1
  const std::vector<WebRecord> emb{rec(1, 0, 1, 2), rec(1, 0, 2, 1), rec(1, 1, 3, 1)};
  const auto f = extract_web_agg(emb, {}, 5);
  EXPECT_EQ(named_value(f, "EmbCnt[c]"), 4.0);
  EXPECT_EQ(named_value(f, "EmbHCnt[c]"), 2.0);
  EXPECT_EQ(named_value(f, "MaxEPerH[c]"), 3.0);
  EXPECT_EQ(named_value(f, "AvgEPerH[c]"), 2.0);
  EXPECT_EQ(named_value(f, "MaxEPerP[c]"), 2.0);
  EXPECT_DOUBLE_EQ(named_value(f, "AvgEPerP[c]"), 4.0 / 3.0);
  EXPECT_EQ(named_value(f, "FirstEmb"), 4.0);
  EXPECT_EQ(named_value(f, "LastEmb"), 4.0);
  EXPECT_EQ(named_value(f, "AvgEmb"), 4.0);
  EXPECT_EQ(named_value(f, "EmbCnt[d]"), 0.0);  // nothing on day 4
}

TEST(WebFeatures, NoEmbeds) {
  const auto f = extract_web_agg({}, {}, 5);
  EXPECT_EQ(named_value(f, "EmbCnt[c]"), 0.0);
  EXPECT_EQ(named_value(f, "FirstEmb"), kMissing);
  EXPECT_EQ(named_value(f, "LastEmb"), kMissing);
  EXPECT_EQ(named_value(f, "AvgEmb"), kMissing);
  EXPECT_EQ(named_value(f, "FirstLink"), kMissing);
}

TEST(WebFeatures, Recency) {
  const std::vector<WebRecord> emb{rec(1, 0, 0, 1), rec(3, 0, 0, 1)};
  const auto f = extract_web_agg(emb, {}, 4);
  EXPECT_EQ(named_value(f, "FirstEmb"), 3.0);
  EXPECT_EQ(named_value(f, "LastEmb"), 1.0);
  EXPECT_EQ(named_value(f, "AvgEmb"), 2.0);
  EXPECT_EQ(named_value(f, "EmbCnt[d]"), 1.0);
  EXPECT_EQ(named_value(f, "EmbCnt[c]"), 2.0);
}

TEST(WebFeatures, LinksHaveNoPageLevelColumns) {
  const auto f = extract_web_agg({}, {}, 1);
  for (const auto& [n, _] : f) {
    EXPECT_EQ(n.find("MaxLPerP"), std::string::npos);
    EXPECT_EQ(n.find("AvgLPerP"), std::string::npos);
  }
}

TEST(FeatureSets, ApiSvColumns) {
  std::vector<Event> ev;
  for (const char* v : {"a", "b", "c"}) add_video(ev, v, {1, 2});
  const auto c = assemble_corpus(ev, TimeGrid(27));
  const auto m = build_feature_matrix(c, "API_Sv", 1);
  EXPECT_EQ(m.rows(), 3u);
  std::set<std::string> expect{"Dur",     "log(Dur)",      "TitleLen", "log(TitleLen)", "DescLen", "log(DescLen)",
                               "UplHour", "Cat[0]",        "Cat[other]"};
  for (int d = 0; d < 7; ++d) expect.insert("UplDOW[" + std::to_string(d) + "]");
  EXPECT_EQ(set_of(m.columns), expect);
  EXPECT_TRUE(std::is_sorted(m.columns.begin(), m.columns.end()));
}

TEST(FeatureSets, Algebra) {
  const std::vector<std::int64_t> cats{0, 1};
  const auto u = make_universe(cats);
  auto cols = [&](const char* e) { return set_of(resolve_feature_spec(e, u).columns); };
  const auto api = cols("API"), log = cols("LOG"), web_ag = cols("WEB_ag");
  std::set<std::string> uni = api;
  uni.insert(log.begin(), log.end());
  uni.insert(web_ag.begin(), web_ag.end());
  // ALL∖WEB_nag resolves without influence models
  EXPECT_EQ(cols("ALL∖WEB_nag"), uni);
  EXPECT_EQ(cols("ALL\\WEB_nag"), uni);
  EXPECT_EQ(cols("(API|LOG)+WEB_ag"), uni);

  auto without_uf = api;
  for (const char* b : {"MinRat", "MaxRat", "AvgRat", "LikeCnt", "DislCnt", "RatCnt", "CommCnt"})
    std::erase_if(without_uf, [&](const std::string& c) { return base_feature(c) == b; });
  EXPECT_EQ(cols("API∖uf"), without_uf);
  EXPECT_LT(without_uf.size(), api.size());

  EXPECT_EQ(cols("BASE.lit"), set_of(resolve_feature_spec("API_Svb|API_Sa|API_D", u).columns));
  EXPECT_EQ(cols("API_S∪API_D"), api);
  EXPECT_EQ(cols("Dur"), (std::set<std::string>{"Dur", "log(Dur)"}));

  EXPECT_THROW(resolve_feature_spec("ALL", u), ConfigurationError);      // needs LIM
  EXPECT_THROW(resolve_feature_spec("WEB_nag", u), ConfigurationError);  // needs LIM
  EXPECT_THROW(resolve_feature_spec("API∖API", u), ConfigurationError);  // empty
  EXPECT_THROW(resolve_feature_spec("NOPE", u), ConfigurationError);
  EXPECT_THROW(resolve_feature_spec("(API", u), ConfigurationError);
}

TEST(FeatureSets, GroupsPartitionTheirMembers) {
  const auto u = make_universe(std::vector<std::int64_t>{0});
  std::set<std::string> groups;
  for (const char* g : {"tc", "sv", "uf", "ar", "se"}) {
    const auto c = set_of(resolve_feature_spec(g, u).columns);
    for (const auto& x : c) EXPECT_TRUE(groups.insert(x).second) << x;
  }
  // the groups together cover the hosting-API set
  EXPECT_EQ(groups, set_of(resolve_feature_spec("API", u).columns));
}

TEST(FeatureMatrix, NoNanAndDeterministicOrder) {
  SynthConfig cfg;
  cfg.n_videos = 300;
  cfg.n_hosts = 30;
  cfg.embed_fraction = 0.5;
  const auto c = generate_corpus(cfg).corpus;
  for (Day t : {1, 5, 14}) {
    const auto m = build_feature_matrix(c, "ALL∖WEB_nag", t);
    EXPECT_TRUE(std::is_sorted(m.columns.begin(), m.columns.end()));
    EXPECT_TRUE(std::adjacent_find(m.columns.begin(), m.columns.end()) == m.columns.end());
    for (double v : m.values) ASSERT_TRUE(std::isfinite(v));
    EXPECT_EQ(m, build_feature_matrix(c, "ALL∖WEB_nag", t, {}, {}, 4));
  }
}

// Features at t_c must not see anything recorded at or after t_c.
TEST(FeatureMatrix, NoLeakageBeyondCurrentDay) {
  SynthConfig cfg;
  cfg.n_videos = 200;
  cfg.n_hosts = 25;
  cfg.embed_fraction = 0.6;
  cfg.link_fraction = 0.6;
  const auto full = generate_corpus(cfg).corpus;
  const Day t_c = 4;

  CorpusBuilder b(full.grid());
  for_each_event(full, [&](const Event& e) {
    switch (e.kind) {
      case EventKind::VideoMeta:
      case EventKind::AuthorMeta: b.add(e); break;
      case EventKind::ApiSnapshot:
        if (e.day <= t_c) b.add(e);
        break;
      case EventKind::ViewsDay: {
        // views are targets, not features; scramble the future ones
        Event s = e;
        if (e.day >= t_c) s.payload = ViewsDay{12345};
        b.add(s);
        break;
      }
      default:
        if (e.day < t_c) b.add(e);
    }
  });
  const auto cut = std::move(b).finish();

  EXPECT_EQ(build_feature_matrix(full, "ALL∖WEB_nag", t_c).values,
            build_feature_matrix(cut, "ALL∖WEB_nag", t_c).values);

  // LIM columns with fixed models also only use infections before t_c
  auto cfgs = default_lim_configs({14, 27}, 50);
  std::vector<InfluenceSet> lims;
  for (const auto& lc : cfgs) lims.push_back(train_lim(full, lc));
  const auto a = lim_feature_block(full, lims, t_c), z = lim_feature_block(cut, lims, t_c);
  EXPECT_EQ(a.values, z.values);
}

TEST(FeatureMatrix, CsvRoundTrip) {
  SynthConfig cfg;
  cfg.n_videos = 50;
  cfg.n_hosts = 10;
  const auto c = generate_corpus(cfg).corpus;
  const auto m = build_feature_matrix(c, "API∪LOG", 3);
  std::stringstream ss;
  write_feature_csv(ss, m);
  EXPECT_EQ(read_feature_csv(ss, 3), m);

  std::istringstream unsorted("video,b,a\nv,1,2\n");
  EXPECT_THROW(read_feature_csv(unsorted), ParseError);
  std::istringstream bad("video,a\nv,x\n");
  EXPECT_THROW(read_feature_csv(bad), ParseError);
  std::istringstream ragged("video,a,b\nv,1\n");
  EXPECT_THROW(read_feature_csv(ragged), ParseError);
}

TEST(FeatureMatrix, SelectColumnsRejectsUnknown) {
  FeatureMatrix m;
  m.columns = {"a"};
  m.row_ids = {"v"};
  m.values = {1.0};
  const std::vector<std::string> want{"b"};
  EXPECT_THROW(select_columns(m, want), SchemaError);
}
