#pragma once

// Object-centric day grid, popularity targets and prediction-task descriptors.

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "viewcast/errors.hpp"

namespace viewcast {

using Day = int;

/// Fixed one-day step over the grid {0..horizon_days}.
class TimeGrid {
public:
  static constexpr std::chrono::seconds tau{std::chrono::days{1}};

  explicit TimeGrid(int horizon_days = 27) : horizon_(horizon_days) {
    if (horizon_days < 1) throw DomainError("time grid horizon must be >= 1 day");
  }

  int horizon_days() const noexcept { return horizon_; }
  bool contains(Day d) const noexcept { return d >= 0 && d <= horizon_; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
  int horizon_;
};

class VideoId {
public:
  VideoId() = default;
  explicit VideoId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) throw DomainError("video id must be non-empty");
  }

  const std::string& str() const noexcept { return id_; }

  friend auto operator<=>(const VideoId&, const VideoId&) = default;

private:
  std::string id_;
};

struct VideoTimeline {
  VideoId video;
  double creation_offset = 0.0;  // t_o(v) in days, within [0, 1)
  std::vector<std::int64_t> daily_views;  // views over [d, d+1)
  bool has_history = true;
};

enum class TargetKind { ViewsCumulative, ViewsDaily };

struct Target {
  TargetKind kind = TargetKind::ViewsCumulative;
  bool log_transformed = false;

  friend bool operator==(const Target&, const Target&) = default;
};

inline constexpr std::array<Target, 4> kAllTargets{{
    {TargetKind::ViewsCumulative, false},
    {TargetKind::ViewsDaily, false},
    {TargetKind::ViewsCumulative, true},
    {TargetKind::ViewsDaily, true},
}};

inline std::string target_name(const Target& t) {
  std::string base = t.kind == TargetKind::ViewsCumulative ? "Views[c]" : "Views[d]";
  return t.log_transformed ? "log(" + base + ")" : base;
}

inline Target parse_target(std::string_view name) {
  for (const auto& t : kAllTargets)
    if (target_name(t) == name) return t;
  throw ConfigurationError("unknown target '" + std::string(name) + "'");
}

inline constexpr int kMaxTargetDay = 14;

struct PredictionTask {
  Target target;
  Day current_day = 1;
  Day target_day = 1;

  PredictionTask(Target tgt, Day t_c, Day t_t) : target(tgt), current_day(t_c), target_day(t_t) {
    if (t_t < 1 || t_t > kMaxTargetDay) throw RangeError("target day must lie in [1, 14]");
    if (t_c < 1 || t_c > t_t) throw RangeError("current day must lie in [1, target day]");
  }

  int delay() const noexcept { return target_day - current_day; }
  bool is_current() const noexcept { return current_day == target_day; }
};

/// log(x) := log2(x + 1)
inline double log_transform(double x) {
  if (!(x >= 0.0)) throw DomainError("log_transform requires a non-negative argument");
  return std::log2(x + 1.0);
}

inline double target_value(const VideoTimeline& tl, const Target& target, Day t) {
  if (t < 1 || static_cast<std::size_t>(t) > tl.daily_views.size())
    throw RangeError("target day " + std::to_string(t) + " outside the video timeline");
  double v = 0.0;
  if (target.kind == TargetKind::ViewsCumulative) {
    std::int64_t s = 0;
    for (Day d = 0; d < t; ++d) s += tl.daily_views[static_cast<std::size_t>(d)];
    v = static_cast<double>(s);
  } else {
    v = static_cast<double>(tl.daily_views[static_cast<std::size_t>(t - 1)]);
  }
  return target.log_transformed ? log_transform(v) : v;
}

using TimePoint = std::chrono::sys_seconds;

/// Start of the calendar day holding `t`, for a fixed UTC offset.
inline TimePoint day_zero_of(TimePoint t, std::chrono::seconds utc_offset = {}) {
  auto local = t + utc_offset;
  return std::chrono::floor<std::chrono::days>(local) - utc_offset;
}

/// Fraction of the creation day elapsed at upload time, t_o(v)/tau.
inline double creation_offset(TimePoint upload, std::chrono::seconds utc_offset = {}) {
  auto since = upload - day_zero_of(upload, utc_offset);
  return static_cast<double>(since.count()) / static_cast<double>(TimeGrid::tau.count());
}

inline Day event_day(TimePoint event, TimePoint video_day_zero) {
  if (event < video_day_zero) throw OrderingError("event precedes the video's day zero");
  return static_cast<Day>((event - video_day_zero) / TimeGrid::tau);
}

// -- small shared utilities -------------------------------------------------

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw DomainError("cannot format value");
  return std::string(buf.data(), end);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed of an independent random substream for (seed, stream, index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

}  // namespace viewcast
