#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace viewcast;
using namespace vt;

TEST(ParseEvent, Embed) {
  const auto e = parse_event_line(R"({"kind":"embed","video":"v1","day":3,"host":"h7","page":"p9","count_on_page":1})");
  EXPECT_EQ(e.kind, EventKind::Embed);
  EXPECT_EQ(e.video, "v1");
  EXPECT_EQ(e.day, 3);
  EXPECT_EQ(std::get<WebEvent>(e.payload), (WebEvent{"h7", "p9", 1}));
}

TEST(ParseEvent, ViewsDay) {
  const auto e = parse_event_line(R"({"kind":"views_day","video":"v1","day":0,"views":120})");
  EXPECT_EQ(e.kind, EventKind::ViewsDay);
  EXPECT_EQ(std::get<ViewsDay>(e.payload).views, 120);
}

TEST(ParseEvent, Rejects) {
  EXPECT_THROW(parse_event_line(R"({"kind":"embed","video":"v1","day":-1,"host":"h","page":"p","count_on_page":1})"),
               Error);
  EXPECT_THROW(parse_event_line(R"({"kind":"views_day","video":"v1","day":0,"views":-3})"), Error);
  EXPECT_THROW(parse_event_line(R"({"kind":"nope","video":"v1","day":0})"), Error);
  EXPECT_THROW(parse_event_line(R"({"kind":"embed","video":"v1","day":0,"host":"","page":"p","count_on_page":1})"),
               Error);
  EXPECT_THROW(parse_event_line("{not json"), ParseError);
  EXPECT_THROW(parse_event_line(R"({"kind":"views_day","video":"","day":0,"views":1})"), Error);
}

TEST(ParseEvent, ErrorCarriesLine) {
  std::istringstream in(R"({"kind":"views_day","video":"v1","day":0,"views":1})"
                        "\n\n{bad\n");
  try {
    read_event_stream(in, [](const Event&) {});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseEvent, RatingsMustBeOrdered) {
  ApiSnapshot s;
  s.rating_count = 3;
  s.min_rating = 4;
  s.max_rating = 2;
  s.avg_rating = 3;
  EXPECT_THROW(validate_event(Event{EventKind::ApiSnapshot, "v", 1, s}), Error);
}

TEST(Serialize, RoundTripsEveryKind) {
  ApiSnapshot s;
  s.like_count = 4;
  s.rating_count = 2;
  s.min_rating = 3;
  s.max_rating = 5;
  s.avg_rating = 4.5;
  const std::vector<Event> evs = {
      meta_event("v1", 3),
      author_event("v1"),
      {EventKind::ApiSnapshot, "v1", 2, s},
      views_event("v1", 1, 12),
      {EventKind::SearchShow, "v1", 1, LogCount{5}},
      {EventKind::SearchClick, "v1", 1, LogCount{2}},
      {EventKind::BrowseVisit, "v1", 4, LogCount{7}},
      web_event(EventKind::Embed, "v1", 2, "h", "p", 3),
      web_event(EventKind::Link, "v1", 2, "h", "q", 1),
  };
  for (const auto& e : evs) EXPECT_EQ(parse_event_line(serialize_event(e)), e);
}

TEST(Corpus, AssemblesViews) {
  std::vector<Event> ev;
  add_video(ev, "v1", {120, 30});
  const auto c = assemble_corpus(ev, TimeGrid(27));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.video(0).timeline.daily_views[0], 120);
  EXPECT_EQ(c.video(0).timeline.daily_views[1], 30);
  EXPECT_EQ(c.video(0).timeline.daily_views[2], 0);  // missing days are zero
  EXPECT_EQ(c.video(0).timeline.daily_views.size(), 27u);
}

TEST(Corpus, EmptyStream) {
  const auto c = assemble_corpus({}, TimeGrid(27));
  EXPECT_TRUE(c.empty());
}

TEST(Corpus, UnknownVideoIsReferentialError) {
  std::vector<Event> ev{web_event(EventKind::Embed, "ghost", 0, "h", "p")};
  EXPECT_THROW(assemble_corpus(ev, TimeGrid(27)), ReferentialError);
}

TEST(Corpus, RejectsDuplicatesAndOutOfGrid) {
  std::vector<Event> ev;
  add_video(ev, "v1", {1});
  ev.push_back(views_event("v1", 0, 5));
  EXPECT_THROW(assemble_corpus(ev, TimeGrid(27)), DuplicationError);
  std::vector<Event> ev2;
  add_video(ev2, "v1", {});
  ev2.push_back(web_event(EventKind::Embed, "v1", 28, "h", "p"));
  EXPECT_THROW(assemble_corpus(ev2, TimeGrid(27)), RangeError);
}

TEST(Corpus, VideoWithoutViewsHasNoHistory) {
  std::vector<Event> ev{meta_event("v1"), author_event("v1")};
  const auto c = assemble_corpus(ev, TimeGrid(27));
  EXPECT_FALSE(c.video(0).timeline.has_history);
}

TEST(Corpus, WebRecordsMergeAndHostTotalsAgree) {
  std::vector<Event> ev;
  add_video(ev, "v1", {1});
  add_video(ev, "v2", {1});
  ev.push_back(web_event(EventKind::Embed, "v1", 1, "B", "p1", 2));
  ev.push_back(web_event(EventKind::Embed, "v1", 1, "B", "p1", 1));
  ev.push_back(web_event(EventKind::Embed, "v2", 0, "A", "p2", 1));
  ev.push_back(web_event(EventKind::Link, "v2", 0, "C", "p3", 1));
  const auto c = assemble_corpus(ev, TimeGrid(27));
  ASSERT_EQ(c.hosts().size(), 3u);
  const auto& v1 = c.video(*c.find("v1"));
  ASSERT_EQ(v1.embeds.size(), 1u);
  EXPECT_EQ(v1.embeds[0].count, 3);
  EXPECT_EQ(c.host_embed_totals()[*c.host_index("B")], 3);
  EXPECT_EQ(c.host_embed_totals()[*c.host_index("A")], 1);
  EXPECT_EQ(c.host_embed_totals()[*c.host_index("C")], 0);
}

TEST(Corpus, EventStreamRoundTrip) {
  SynthConfig cfg;
  cfg.n_videos = 60;
  cfg.n_hosts = 20;
  cfg.embed_fraction = 0.5;
  const auto c = generate_corpus(cfg).corpus;
  std::stringstream ss;
  write_events(c, ss);
  CorpusBuilder b(c.grid());
  read_event_stream(ss, [&](const Event& e) { b.add(e); });
  EXPECT_EQ(std::move(b).finish(), c);
}

namespace {
Corpus hosts_corpus(int a_count, int b_count) {
  std::vector<Event> ev;
  add_video(ev, "v", {1});
  for (int i = 0; i < a_count; ++i) ev.push_back(web_event(EventKind::Embed, "v", 0, "A", "p" + std::to_string(i)));
  for (int i = 0; i < b_count; ++i) ev.push_back(web_event(EventKind::Embed, "v", 0, "B", "p" + std::to_string(i)));
  return assemble_corpus(ev, TimeGrid(27));
}
}  // namespace

TEST(TopHosts, Examples) {
  EXPECT_EQ(top_hosts(hosts_corpus(5, 9), 1), (std::vector<std::string>{"B"}));
  EXPECT_EQ(top_hosts(hosts_corpus(5, 5), 2), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(top_hosts(hosts_corpus(5, 9), 10).size(), 2u);
  EXPECT_THROW(top_hosts(hosts_corpus(1, 1), 0), DomainError);
}
