#pragma once

#include <string>
#include <vector>

#include "viewcast/viewcast.hpp"

namespace vt {

using namespace viewcast;

inline Event meta_event(const std::string& v, std::int64_t category = 0) {
  VideoMeta m;
  m.duration_s = 60;
  m.category = category;
  m.title_len = 10;
  m.author = "a1";
  return {EventKind::VideoMeta, v, 0, m};
}

inline Event author_event(const std::string& v) { return {EventKind::AuthorMeta, v, 0, AuthorMeta{}}; }

inline Event views_event(const std::string& v, Day d, std::int64_t n) { return {EventKind::ViewsDay, v, d, ViewsDay{n}}; }

inline Event web_event(EventKind k, const std::string& v, Day d, const std::string& host, const std::string& page,
                       std::int64_t count = 1) {
  return {k, v, d, WebEvent{host, page, count}};
}

/// Video with metadata and the given daily views.
inline void add_video(std::vector<Event>& ev, const std::string& v, const std::vector<std::int64_t>& views) {
  ev.push_back(meta_event(v));
  ev.push_back(author_event(v));
  for (std::size_t d = 0; d < views.size(); ++d) ev.push_back(views_event(v, static_cast<Day>(d), views[d]));
}

inline SynthConfig noiseless(int n_videos, int n_hosts, std::uint64_t seed = 42) {
  SynthConfig c;
  c.seed = seed;
  c.n_videos = n_videos;
  c.n_hosts = n_hosts;
  c.noise_sigma = 0.0;
  c.base_interest.scale = 0.0;
  c.link_fraction = 0.0;
  c.negative_host_fraction = 0.0;
  c.host_zipf = 0.0;
  c.embed_fraction = 1.0;
  return c;
}

}  // namespace vt
