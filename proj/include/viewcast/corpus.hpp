#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "viewcast/core.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/events.hpp"

namespace viewcast {

/// Embed or link occurrence with host and page interned in the owning Corpus.
struct WebRecord {
  Day day = 0;
  std::uint32_t host = 0;
  std::uint32_t page = 0;
  std::int64_t count = 1;

  friend auto operator<=>(const WebRecord&, const WebRecord&) = default;
};

struct VideoRecord {
  VideoTimeline timeline;
  VideoMeta meta;
  AuthorMeta author;
  std::vector<std::optional<ApiSnapshot>> snapshots;  // indexed by grid moment 0..M
  std::vector<std::int64_t> search_shows;              // per day 0..M
  std::vector<std::int64_t> search_clicks;
  std::vector<std::int64_t> browse_visits;
  std::vector<WebRecord> embeds;  // sorted by (day, host, page)
  std::vector<WebRecord> links;

  const VideoId& id() const noexcept { return timeline.video; }

  friend bool operator==(const VideoRecord& a, const VideoRecord& b) {
    return a.timeline.video == b.timeline.video &&
           a.timeline.creation_offset == b.timeline.creation_offset &&
           a.timeline.daily_views == b.timeline.daily_views &&
           a.timeline.has_history == b.timeline.has_history && a.meta == b.meta &&
           a.author == b.author && a.snapshots == b.snapshots && a.search_shows == b.search_shows &&
           a.search_clicks == b.search_clicks && a.browse_visits == b.browse_visits &&
           a.embeds == b.embeds && a.links == b.links;
  }
};

/// Immutable collection of videos with their event streams on the day grid.
class Corpus {
public:
  Corpus() = default;

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const VideoRecord> videos() const noexcept { return videos_; }
  std::size_t size() const noexcept { return videos_.size(); }
  bool empty() const noexcept { return videos_.empty(); }
  const VideoRecord& video(std::size_t i) const { return videos_.at(i); }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = std::lower_bound(videos_.begin(), videos_.end(), id,
                               [](const VideoRecord& v, std::string_view key) { return v.id().str() < key; });
    if (it == videos_.end() || it->id().str() != id) return std::nullopt;
    return static_cast<std::size_t>(it - videos_.begin());
  }

  std::span<const std::string> hosts() const noexcept { return hosts_; }
  std::span<const std::string> pages() const noexcept { return pages_; }
  const std::string& host_name(std::uint32_t h) const { return hosts_.at(h); }

  /// Total embed count (sum of count_on_page) per interned host.
  std::span<const std::int64_t> host_embed_totals() const noexcept { return host_embeds_; }

  std::optional<std::uint32_t> host_index(std::string_view host) const {
    auto it = std::lower_bound(hosts_.begin(), hosts_.end(), host);
    if (it == hosts_.end() || *it != host) return std::nullopt;
    return static_cast<std::uint32_t>(it - hosts_.begin());
  }

  /// Sorted category ids seen at assembly.
  std::span<const std::int64_t> categories() const noexcept { return categories_; }

  friend bool operator==(const Corpus&, const Corpus&) = default;

private:
  friend class CorpusBuilder;

  TimeGrid grid_;
  std::vector<VideoRecord> videos_;
  std::vector<std::string> hosts_;
  std::vector<std::string> pages_;
  std::vector<std::int64_t> host_embeds_;
  std::vector<std::int64_t> categories_;
};

/// Single-writer reduction from an unordered event stream to a Corpus.
/// The result does not depend on the order in which events are added.
class CorpusBuilder {
public:
  explicit CorpusBuilder(TimeGrid grid) : grid_(grid) {}

  void add(const Event& e) {
    validate_event(e);
    if (!grid_.contains(e.day))
      throw RangeError("event day " + std::to_string(e.day) + " beyond grid horizon (video " + e.video + ")");
    Partial& p = partial(e.video);
    const auto d = static_cast<std::size_t>(e.day);
    switch (e.kind) {
      case EventKind::VideoMeta:
        if (p.meta) throw DuplicationError("duplicate video_meta for video " + e.video);
        p.meta = std::get<VideoMeta>(e.payload);
        break;
      case EventKind::AuthorMeta:
        if (p.author) throw DuplicationError("duplicate author_meta for video " + e.video);
        p.author = std::get<AuthorMeta>(e.payload);
        break;
      case EventKind::ViewsDay:
        if (e.day >= grid_.horizon_days())
          throw RangeError("views_day at day " + std::to_string(e.day) + " lies outside [0, horizon)");
        if (p.views_seen[d]) throw DuplicationError("duplicate views_day for video " + e.video);
        p.views_seen[d] = true;
        p.has_history = true;
        p.views[d] = std::get<ViewsDay>(e.payload).views;
        break;
      case EventKind::ApiSnapshot:
        if (p.snapshots[d]) throw DuplicationError("duplicate api_snapshot for video " + e.video);
        p.snapshots[d] = std::get<ApiSnapshot>(e.payload);
        break;
      case EventKind::SearchShow: p.shows[d] += std::get<LogCount>(e.payload).count; break;
      case EventKind::SearchClick: p.clicks[d] += std::get<LogCount>(e.payload).count; break;
      case EventKind::BrowseVisit: p.visits[d] += std::get<LogCount>(e.payload).count; break;
      case EventKind::Embed:
      case EventKind::Link: {
        const auto& w = std::get<WebEvent>(e.payload);
        auto& target = e.kind == EventKind::Embed ? p.embeds : p.links;
        target.push_back({e.day, intern(host_ids_, host_names_, w.host), intern(page_ids_, page_names_, w.page),
                          w.count_on_page});
        break;
      }
    }
  }

  Corpus finish() && {
    Corpus c;
    c.grid_ = grid_;

    // Interned ids are remapped to lexicographic order so the result is
    // independent of arrival order.
    auto host_map = sorted_remap(host_names_, c.hosts_);
    auto page_map = sorted_remap(page_names_, c.pages_);
    c.host_embeds_.assign(c.hosts_.size(), 0);

    std::vector<std::int64_t> cats;
    c.videos_.reserve(partials_.size());
    for (auto& [id, p] : partials_) {
      if (!p.meta) throw ReferentialError("video " + id + " referenced without a video_meta record");
      if (!p.author) throw ReferentialError("video " + id + " referenced without an author_meta record");
      VideoRecord v;
      v.timeline.video = VideoId(id);
      v.timeline.creation_offset = p.meta->upload_hour / 24.0;
      v.timeline.daily_views = std::move(p.views);
      v.timeline.has_history = p.has_history;
      v.meta = std::move(*p.meta);
      v.author = *p.author;
      v.snapshots = std::move(p.snapshots);
      v.search_shows = std::move(p.shows);
      v.search_clicks = std::move(p.clicks);
      v.browse_visits = std::move(p.visits);
      v.embeds = canonical(std::move(p.embeds), host_map, page_map);
      v.links = canonical(std::move(p.links), host_map, page_map);
      for (const auto& e : v.embeds) c.host_embeds_[e.host] += e.count;
      cats.push_back(v.meta.category);
      c.videos_.push_back(std::move(v));
    }
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    c.categories_ = std::move(cats);
    return c;
  }

private:
  struct Partial {
    std::optional<VideoMeta> meta;
    std::optional<AuthorMeta> author;
    std::vector<std::int64_t> views;
    std::vector<bool> views_seen;
    bool has_history = false;
    std::vector<std::optional<ApiSnapshot>> snapshots;
    std::vector<std::int64_t> shows, clicks, visits;
    std::vector<WebRecord> embeds, links;
  };

  Partial& partial(const std::string& id) {
    auto it = partials_.find(id);
    if (it != partials_.end()) return it->second;
    const auto m = static_cast<std::size_t>(grid_.horizon_days());
    Partial p;
    p.views.assign(m, 0);
    p.views_seen.assign(m, false);
    p.snapshots.resize(m + 1);
    p.shows.assign(m + 1, 0);
    p.clicks.assign(m + 1, 0);
    p.visits.assign(m + 1, 0);
    return partials_.emplace(id, std::move(p)).first->second;
  }

  static std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& ids, std::vector<std::string>& names,
                              const std::string& key) {
    auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(names.size()));
    if (inserted) names.push_back(key);
    return it->second;
  }

  static std::vector<std::uint32_t> sorted_remap(const std::vector<std::string>& names, std::vector<std::string>& out) {
    std::vector<std::uint32_t> order(names.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return names[a] < names[b]; });
    std::vector<std::uint32_t> remap(names.size());
    out.clear();
    out.reserve(names.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) {
      remap[order[r]] = r;
      out.push_back(names[order[r]]);
    }
    return remap;
  }

  // Sorted by (day, host, page); records for the same triple are merged.
  static std::vector<WebRecord> canonical(std::vector<WebRecord> recs, const std::vector<std::uint32_t>& host_map,
                                          const std::vector<std::uint32_t>& page_map) {
    for (auto& r : recs) {
      r.host = host_map[r.host];
      r.page = page_map[r.page];
    }
    std::sort(recs.begin(), recs.end());
    std::vector<WebRecord> out;
    out.reserve(recs.size());
    for (const auto& r : recs) {
      if (!out.empty() && out.back().day == r.day && out.back().host == r.host && out.back().page == r.page)
        out.back().count += r.count;
      else
        out.push_back(r);
    }
    return out;
  }

  TimeGrid grid_;
  std::map<std::string, Partial> partials_;
  std::unordered_map<std::string, std::uint32_t> host_ids_, page_ids_;
  std::vector<std::string> host_names_, page_names_;
};

inline Corpus assemble_corpus(std::span<const Event> events, TimeGrid grid) {
  CorpusBuilder b(grid);
  for (const auto& e : events) b.add(e);
  return std::move(b).finish();
}

/// Loads and concatenates newline-delimited event files.
inline Corpus load_corpus(std::span<const std::string> paths, TimeGrid grid) {
  CorpusBuilder b(grid);
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open event file '" + path + "'");
    try {
      read_event_stream(in, [&](const Event& e) { b.add(e); });
    } catch (const ParseError& ex) {
      throw ParseError(path + ": " + ex.what(), ex.line());
    }
  }
  return std::move(b).finish();
}

/// Emits the corpus as a canonical event stream; assembling the output
/// reproduces the corpus.
inline void for_each_event(const Corpus& c, const std::function<void(const Event&)>& sink) {
  for (const auto& v : c.videos()) {
    const std::string& id = v.id().str();
    sink(Event{EventKind::VideoMeta, id, 0, v.meta});
    sink(Event{EventKind::AuthorMeta, id, 0, v.author});
    if (v.timeline.has_history)
      for (std::size_t d = 0; d < v.timeline.daily_views.size(); ++d)
        sink(Event{EventKind::ViewsDay, id, static_cast<Day>(d), ViewsDay{v.timeline.daily_views[d]}});
    for (std::size_t d = 0; d < v.snapshots.size(); ++d)
      if (v.snapshots[d]) sink(Event{EventKind::ApiSnapshot, id, static_cast<Day>(d), *v.snapshots[d]});
    auto logs = [&](EventKind k, const std::vector<std::int64_t>& counts) {
      for (std::size_t d = 0; d < counts.size(); ++d)
        if (counts[d] != 0) sink(Event{k, id, static_cast<Day>(d), LogCount{counts[d]}});
    };
    logs(EventKind::SearchShow, v.search_shows);
    logs(EventKind::SearchClick, v.search_clicks);
    logs(EventKind::BrowseVisit, v.browse_visits);
    for (const auto& w : v.embeds)
      sink(Event{EventKind::Embed, id, w.day, WebEvent{c.host_name(w.host), c.pages()[w.page], w.count}});
    for (const auto& w : v.links)
      sink(Event{EventKind::Link, id, w.day, WebEvent{c.host_name(w.host), c.pages()[w.page], w.count}});
  }
}

inline void write_events(const Corpus& c, std::ostream& out) {
  for_each_event(c, [&](const Event& e) { out << serialize_event(e) << '\n'; });
}

/// Hosts by descending total embed count, ties by host id; at most k.
inline std::vector<std::string> top_hosts(const Corpus& c, int k) {
  if (k < 1) throw DomainError("top_hosts requires k >= 1");
  auto totals = c.host_embed_totals();
  std::vector<std::uint32_t> idx(totals.size());
  for (std::uint32_t h = 0; h < idx.size(); ++h) idx[h] = h;
  // hosts are interned in lexicographic order, so index order is the tie-break
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return totals[a] > totals[b]; });
  if (idx.size() > static_cast<std::size_t>(k)) idx.resize(static_cast<std::size_t>(k));
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (auto h : idx) out.push_back(c.host_name(h));
  return out;
}

}  // namespace viewcast
