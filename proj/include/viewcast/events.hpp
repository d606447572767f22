#pragma once

// Event records and their newline-delimited JSON encoding.
//
// One record per line, keys in the fixed order
//   kind, video, day, <payload fields in declaration order>
// Days are already on the object-centric grid.

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewcast/core.hpp"
#include "viewcast/errors.hpp"

namespace viewcast {

struct VideoMeta {
  std::int64_t duration_s = 1;
  std::int64_t category = 0;
  std::int64_t title_len = 1;
  std::int64_t desc_len = 0;
  int upload_dow = 0;
  double upload_hour = 0.0;
  std::string author;

  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

struct AuthorMeta {
  std::int64_t author_age_days = 0;
  std::int64_t upload_count = 1;
  std::int64_t view_sum_s = 0;
  std::int64_t friend_count = 0;
  std::int64_t subscriber_count = 0;

  friend bool operator==(const AuthorMeta&, const AuthorMeta&) = default;
};

/// State of the hosting-API counters observed at grid moment `day`, i.e.
/// accumulated over [0, day). Rating fields are 0 while rating_count == 0.
struct ApiSnapshot {
  std::int64_t comment_count = 0;
  std::int64_t like_count = 0;
  std::int64_t dislike_count = 0;
  std::int64_t rating_count = 0;
  int min_rating = 0;
  int max_rating = 0;
  double avg_rating = 0.0;
  std::int64_t days_since_update = 0;

  friend bool operator==(const ApiSnapshot&, const ApiSnapshot&) = default;
};

struct ViewsDay {
  std::int64_t views = 0;
  friend bool operator==(const ViewsDay&, const ViewsDay&) = default;
};

/// Aggregated daily count from the search or browsing logs.
struct LogCount {
  std::int64_t count = 0;
  friend bool operator==(const LogCount&, const LogCount&) = default;
};

struct WebEvent {
  std::string host;
  std::string page;
  std::int64_t count_on_page = 1;

  friend bool operator==(const WebEvent&, const WebEvent&) = default;
};

enum class EventKind {
  VideoMeta,
  AuthorMeta,
  ApiSnapshot,
  ViewsDay,
  SearchShow,
  SearchClick,
  BrowseVisit,
  Embed,
  Link,
};

inline std::string_view kind_name(EventKind k) {
  switch (k) {
    case EventKind::VideoMeta: return "video_meta";
    case EventKind::AuthorMeta: return "author_meta";
    case EventKind::ApiSnapshot: return "api_snapshot";
    case EventKind::ViewsDay: return "views_day";
    case EventKind::SearchShow: return "search_show";
    case EventKind::SearchClick: return "search_click";
    case EventKind::BrowseVisit: return "browse_visit";
    case EventKind::Embed: return "embed";
    case EventKind::Link: return "link";
  }
  return "";
}

using EventPayload = std::variant<VideoMeta, AuthorMeta, ApiSnapshot, ViewsDay, LogCount, WebEvent>;

struct Event {
  EventKind kind = EventKind::ViewsDay;
  std::string video;
  Day day = 0;
  EventPayload payload;

  friend bool operator==(const Event&, const Event&) = default;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline EventKind kind_from_name(std::string_view name, std::size_t line) {
  for (int k = 0; k <= static_cast<int>(EventKind::Link); ++k)
    if (kind_name(static_cast<EventKind>(k)) == name) return static_cast<EventKind>(k);
  throw SchemaError((line ? "line " + std::to_string(line) + ": " : std::string()) +
                    "unknown event kind '" + std::string(name) + "'");
}

class FieldReader {
public:
  FieldReader(const ojson& obj, std::size_t line) : obj_(obj), line_(line) {}

  std::int64_t integer(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail_schema(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
  }

  double real(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number()) fail_schema(std::string("field '") + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail_validation(std::string("field '") + key + "' must be finite");
    return d;
  }

  std::string text(const char* key) const {
    const auto& v = at(key);
    if (!v.is_string()) fail_schema(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::int64_t count(const char* key) const {
    auto v = integer(key);
    if (v < 0) fail_validation(std::string("field '") + key + "' must be non-negative");
    return v;
  }

  [[noreturn]] void fail_schema(const std::string& msg) const { throw SchemaError(prefix() + msg); }
  [[noreturn]] void fail_validation(const std::string& msg) const {
    throw ValidationError(prefix() + msg);
  }

private:
  const ojson& at(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail_schema(std::string("missing field '") + key + "'");
    return *it;
  }
  std::string prefix() const { return line_ ? "line " + std::to_string(line_) + ": " : ""; }

  const ojson& obj_;
  std::size_t line_;
};

inline std::size_t payload_field_count(EventKind k) {
  switch (k) {
    case EventKind::VideoMeta: return 7;
    case EventKind::AuthorMeta: return 5;
    case EventKind::ApiSnapshot: return 8;
    case EventKind::ViewsDay: return 1;
    case EventKind::SearchShow:
    case EventKind::SearchClick:
    case EventKind::BrowseVisit: return 1;
    case EventKind::Embed:
    case EventKind::Link: return 3;
  }
  return 0;
}

}  // namespace detail

/// Checks the payload-level invariants. Throws ValidationError.
inline void validate_event(const Event& e, std::size_t line = 0) {
  auto bad = [&](const std::string& msg) {
    throw ValidationError((line ? "line " + std::to_string(line) + ": " : std::string()) + msg);
  };
  if (e.video.empty()) bad("video id must be non-empty");
  if (e.day < 0) bad("day must be >= 0");
  auto expect = [&](auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    if (!std::holds_alternative<T>(e.payload)) bad("payload does not match kind");
    return std::get<T>(e.payload);
  };
  switch (e.kind) {
    case EventKind::VideoMeta: {
      auto m = expect(static_cast<VideoMeta*>(nullptr));
      if (m.duration_s < 1) bad("duration_s must be >= 1");
      if (m.title_len < 1) bad("title_len must be >= 1");
      if (m.desc_len < 0) bad("desc_len must be >= 0");
      if (m.category < 0) bad("category must be >= 0");
      if (m.upload_dow < 0 || m.upload_dow > 6) bad("upload_dow must lie in 0..6");
      if (!(m.upload_hour >= 0.0 && m.upload_hour < 24.0)) bad("upload_hour must lie in [0, 24)");
      if (m.author.empty()) bad("author must be non-empty");
      break;
    }
    case EventKind::AuthorMeta: {
      auto a = expect(static_cast<AuthorMeta*>(nullptr));
      if (a.author_age_days < 0 || a.view_sum_s < 0 || a.friend_count < 0 || a.subscriber_count < 0)
        bad("author counts must be non-negative");
      if (a.upload_count < 1) bad("upload_count must be >= 1");
      break;
    }
    case EventKind::ApiSnapshot: {
      auto s = expect(static_cast<ApiSnapshot*>(nullptr));
      if (s.comment_count < 0 || s.like_count < 0 || s.dislike_count < 0 || s.rating_count < 0 ||
          s.days_since_update < 0)
        bad("snapshot counts must be non-negative");
      if (!std::isfinite(s.avg_rating)) bad("avg_rating must be finite");
      if (s.rating_count > 0) {
        if (s.min_rating < 1 || s.max_rating > 5 || s.min_rating > s.max_rating ||
            s.avg_rating < s.min_rating || s.avg_rating > s.max_rating)
          bad("ratings must satisfy 1 <= min <= avg <= max <= 5");
      } else if (s.min_rating < 0 || s.min_rating > 5 || s.max_rating < 0 || s.max_rating > 5 ||
                 s.avg_rating < 0.0 || s.avg_rating > 5.0) {
        bad("rating fields out of range");
      }
      break;
    }
    case EventKind::ViewsDay:
      if (expect(static_cast<ViewsDay*>(nullptr)).views < 0) bad("views must be non-negative");
      break;
    case EventKind::SearchShow:
    case EventKind::SearchClick:
    case EventKind::BrowseVisit:
      if (expect(static_cast<LogCount*>(nullptr)).count < 0) bad("count must be non-negative");
      break;
    case EventKind::Embed:
    case EventKind::Link: {
      auto w = expect(static_cast<WebEvent*>(nullptr));
      if (w.host.empty() || w.page.empty()) bad("host and page must be non-empty");
      if (w.count_on_page < 1) bad("count_on_page must be >= 1");
      break;
    }
  }
}

/// Decodes one record. `line_no` (1-based, 0 = unknown) is reported in errors.
inline Event parse_event_line(std::string_view line, std::size_t line_no = 0) {
  detail::ojson obj;
  try {
    obj = detail::ojson::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(ex.what(), line_no);
  }
  if (!obj.is_object()) throw ParseError("event record must be a JSON object", line_no);

  detail::FieldReader r(obj, line_no);
  Event e;
  e.kind = detail::kind_from_name(r.text("kind"), line_no);
  e.video = r.text("video");
  auto day = r.integer("day");
  if (day < 0) r.fail_validation("day must be >= 0");
  if (day > std::numeric_limits<Day>::max()) r.fail_validation("day out of range");
  e.day = static_cast<Day>(day);
  if (obj.size() != 3 + detail::payload_field_count(e.kind))
    r.fail_schema("unexpected field set for kind '" + std::string(kind_name(e.kind)) + "'");

  switch (e.kind) {
    case EventKind::VideoMeta: {
      VideoMeta m;
      m.duration_s = r.integer("duration_s");
      m.category = r.integer("category");
      m.title_len = r.integer("title_len");
      m.desc_len = r.integer("desc_len");
      m.upload_dow = static_cast<int>(r.integer("upload_dow"));
      m.upload_hour = r.real("upload_hour");
      m.author = r.text("author");
      e.payload = m;
      break;
    }
    case EventKind::AuthorMeta: {
      AuthorMeta a;
      a.author_age_days = r.count("author_age_days");
      a.upload_count = r.count("upload_count");
      a.view_sum_s = r.count("view_sum_s");
      a.friend_count = r.count("friend_count");
      a.subscriber_count = r.count("subscriber_count");
      e.payload = a;
      break;
    }
    case EventKind::ApiSnapshot: {
      ApiSnapshot s;
      s.comment_count = r.count("comment_count");
      s.like_count = r.count("like_count");
      s.dislike_count = r.count("dislike_count");
      s.rating_count = r.count("rating_count");
      s.min_rating = static_cast<int>(r.integer("min_rating"));
      s.max_rating = static_cast<int>(r.integer("max_rating"));
      s.avg_rating = r.real("avg_rating");
      s.days_since_update = r.count("days_since_update");
      e.payload = s;
      break;
    }
    case EventKind::ViewsDay:
      e.payload = ViewsDay{r.count("views")};
      break;
    case EventKind::SearchShow:
    case EventKind::SearchClick:
    case EventKind::BrowseVisit:
      e.payload = LogCount{r.count("count")};
      break;
    case EventKind::Embed:
    case EventKind::Link:
      e.payload = WebEvent{r.text("host"), r.text("page"), r.count("count_on_page")};
      break;
  }
  validate_event(e, line_no);
  return e;
}

inline std::string serialize_event(const Event& e) {
  validate_event(e);
  detail::ojson o;
  o["kind"] = kind_name(e.kind);
  o["video"] = e.video;
  o["day"] = e.day;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VideoMeta>) {
          o["duration_s"] = p.duration_s;
          o["category"] = p.category;
          o["title_len"] = p.title_len;
          o["desc_len"] = p.desc_len;
          o["upload_dow"] = p.upload_dow;
          o["upload_hour"] = p.upload_hour;
          o["author"] = p.author;
        } else if constexpr (std::is_same_v<T, AuthorMeta>) {
          o["author_age_days"] = p.author_age_days;
          o["upload_count"] = p.upload_count;
          o["view_sum_s"] = p.view_sum_s;
          o["friend_count"] = p.friend_count;
          o["subscriber_count"] = p.subscriber_count;
        } else if constexpr (std::is_same_v<T, ApiSnapshot>) {
          o["comment_count"] = p.comment_count;
          o["like_count"] = p.like_count;
          o["dislike_count"] = p.dislike_count;
          o["rating_count"] = p.rating_count;
          o["min_rating"] = p.min_rating;
          o["max_rating"] = p.max_rating;
          o["avg_rating"] = p.avg_rating;
          o["days_since_update"] = p.days_since_update;
        } else if constexpr (std::is_same_v<T, ViewsDay>) {
          o["views"] = p.views;
        } else if constexpr (std::is_same_v<T, LogCount>) {
          o["count"] = p.count;
        } else {
          o["host"] = p.host;
          o["page"] = p.page;
          o["count_on_page"] = p.count_on_page;
        }
      },
      e.payload);
  return o.dump();
}

/// Reads every non-blank line of `in`, numbering lines from 1.
template <typename Sink>
void read_event_stream(std::istream& in, Sink&& sink) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    sink(parse_event_line(line, line_no));
  }
}

}  // namespace viewcast
