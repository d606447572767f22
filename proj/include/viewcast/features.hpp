#pragma once

// Aggregated features of a (video, t_c) instance and feature-matrix assembly.
//
// Windows: cumulative [c] covers days [0, t_c), daily [d] covers [t_c-1, t_c).
// Column naming: "X", "log(X)", "X[c]", "X[d]", "log(X[c])", "log(X[d])";
// one-hot columns are "Cat[<id>]", "Cat[other]" and "UplDOW[0..6]".
// Undefined values (no snapshot yet, no embeds yet, no ratings) are -1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "viewcast/core.hpp"
#include "viewcast/corpus.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/lim.hpp"
#include "viewcast/parallel.hpp"

namespace viewcast {

inline constexpr double kMissing = -1.0;

using NamedValues = std::vector<std::pair<std::string, double>>;

inline double named_value(const NamedValues& nv, std::string_view name) {
  for (const auto& [n, v] : nv)
    if (n == name) return v;
  throw SchemaError("no feature named '" + std::string(name) + "'");
}

enum class Mode { Raw, Log, Cum, Day, LogCum, LogDay };

inline std::string column_name(std::string_view base, Mode m) {
  std::string b(base);
  switch (m) {
    case Mode::Raw: return b;
    case Mode::Log: return "log(" + b + ")";
    case Mode::Cum: return b + "[c]";
    case Mode::Day: return b + "[d]";
    case Mode::LogCum: return "log(" + b + "[c])";
    case Mode::LogDay: return "log(" + b + "[d])";
  }
  return b;
}

/// Feature name a column derives from: "log(LikeCnt[c])" -> "LikeCnt".
inline std::string base_feature(std::string_view column) {
  if (column.starts_with("log(") && column.ends_with(")")) column = column.substr(4, column.size() - 5);
  return std::string(column.substr(0, column.find('[')));
}

namespace detail {

// Emission target; matrix assembly uses a positional sink that skips names.
struct NameSink {
  NamedValues* out;
  void operator()(std::string_view base, Mode m, double v) const { out->emplace_back(column_name(base, m), v); }
  void onehot(std::string_view base, std::string_view label, double v) const {
    out->emplace_back(std::string(base) + "[" + std::string(label) + "]", v);
  }
};

struct PositionSink {
  double* out;
  std::size_t k = 0;
  void operator()(std::string_view, Mode, double v) { out[k++] = v; }
  void onehot(std::string_view, std::string_view, double v) { out[k++] = v; }
};

template <typename Sink>
void emit_nl(Sink& s, std::string_view base, double v) {
  s(base, Mode::Raw, v);
  s(base, Mode::Log, signed_log(v));
}

template <typename Sink>
void emit_nlcd(Sink& s, std::string_view base, double c, double d) {
  s(base, Mode::Cum, c);
  s(base, Mode::Day, d);
  s(base, Mode::LogCum, signed_log(c));
  s(base, Mode::LogDay, signed_log(d));
}

inline const char* const kDowLabels[7] = {"0", "1", "2", "3", "4", "5", "6"};

template <typename Sink>
void static_features(Sink& s, const VideoMeta& meta, const AuthorMeta& author, std::span<const std::int64_t> vocab,
                     std::span<const std::string> vocab_labels) {
  emit_nl(s, "Dur", static_cast<double>(meta.duration_s));
  emit_nl(s, "TitleLen", static_cast<double>(meta.title_len));
  emit_nl(s, "DescLen", static_cast<double>(meta.desc_len));
  const bool known = std::binary_search(vocab.begin(), vocab.end(), meta.category);
  for (std::size_t i = 0; i < vocab.size(); ++i)
    s.onehot("Cat", vocab_labels[i], vocab[i] == meta.category ? 1.0 : 0.0);
  s.onehot("Cat", "other", known ? 0.0 : 1.0);
  for (int d = 0; d < 7; ++d) s.onehot("UplDOW", kDowLabels[d], meta.upload_dow == d ? 1.0 : 0.0);
  s("UplHour", Mode::Raw, meta.upload_hour);
  emit_nl(s, "AuthAge", static_cast<double>(author.author_age_days));
  emit_nl(s, "AUplCnt", static_cast<double>(author.upload_count));
  emit_nl(s, "AViewSum", static_cast<double>(author.view_sum_s));
  emit_nl(s, "FrndCnt", static_cast<double>(author.friend_count));
  emit_nl(s, "SubsCnt", static_cast<double>(author.subscriber_count));
}

template <typename Sink>
void api_dynamic_features(Sink& s, std::span<const std::optional<ApiSnapshot>> snaps, Day t_c) {
  const ApiSnapshot* cur = nullptr;
  for (Day d = std::min<Day>(t_c, static_cast<Day>(snaps.size()) - 1); d >= 0; --d)
    if (snaps[static_cast<std::size_t>(d)]) {
      cur = &*snaps[static_cast<std::size_t>(d)];
      break;
    }
  const ApiSnapshot* at_tc =
      t_c < static_cast<Day>(snaps.size()) && snaps[static_cast<std::size_t>(t_c)] ? &*snaps[static_cast<std::size_t>(t_c)] : nullptr;
  const ApiSnapshot* before = t_c - 1 < static_cast<Day>(snaps.size()) && snaps[static_cast<std::size_t>(t_c - 1)]
                                  ? &*snaps[static_cast<std::size_t>(t_c - 1)]
                                  : nullptr;
  auto counter = [&](std::string_view base, std::int64_t ApiSnapshot::*field) {
    if (!cur) return emit_nlcd(s, base, kMissing, kMissing);
    double daily = 0.0;
    if (at_tc && before) daily = static_cast<double>(std::max<std::int64_t>(0, at_tc->*field - before->*field));
    emit_nlcd(s, base, static_cast<double>(cur->*field), daily);
  };
  counter("CommCnt", &ApiSnapshot::comment_count);
  counter("LikeCnt", &ApiSnapshot::like_count);
  counter("DislCnt", &ApiSnapshot::dislike_count);
  counter("RatCnt", &ApiSnapshot::rating_count);
  const bool rated = cur && cur->rating_count > 0;
  s("MinRat", Mode::Raw, rated ? cur->min_rating : kMissing);
  s("MaxRat", Mode::Raw, rated ? cur->max_rating : kMissing);
  s("AvgRat", Mode::Raw, rated ? cur->avg_rating : kMissing);
  emit_nl(s, "Update", cur ? static_cast<double>(cur->days_since_update) : kMissing);
}

inline std::pair<double, double> window_sums(std::span<const std::int64_t> per_day, Day t_c) {
  double c = 0.0, d = 0.0;
  const auto n = std::min<std::size_t>(per_day.size(), static_cast<std::size_t>(t_c));
  for (std::size_t i = 0; i < n; ++i) c += static_cast<double>(per_day[i]);
  if (static_cast<std::size_t>(t_c - 1) < per_day.size()) d = static_cast<double>(per_day[static_cast<std::size_t>(t_c - 1)]);
  return {c, d};
}

inline double ctr(double clicks, double shows) { return shows > 0.0 ? std::min(1.0, clicks / shows) : 0.0; }

template <typename Sink>
void log_features(Sink& s, std::span<const std::int64_t> shows, std::span<const std::int64_t> clicks,
                  std::span<const std::int64_t> visits, Day t_c) {
  const auto [sc, sd] = window_sums(shows, t_c);
  const auto [cc, cd] = window_sums(clicks, t_c);
  const auto [vc, vd] = window_sums(visits, t_c);
  emit_nlcd(s, "ShowURL", sc, sd);
  emit_nlcd(s, "ClickURL", cc, cd);
  s("CTR", Mode::Cum, ctr(cc, sc));
  s("CTR", Mode::Day, ctr(cd, sd));
  emit_nlcd(s, "BrowVisit", vc, vd);
}

struct WebAgg {
  double count = 0, hosts = 0, max_per_host = 0, avg_per_host = 0, max_per_page = 0, avg_per_page = 0;
};

// Records must be sorted by (day, host, page).
inline WebAgg aggregate(std::span<const WebRecord> recs, Day from, Day to) {
  std::map<std::uint32_t, double> per_host;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> per_page;
  WebAgg a;
  for (const auto& r : recs) {
    if (r.day < from || r.day >= to) continue;
    const auto c = static_cast<double>(r.count);
    a.count += c;
    per_host[r.host] += c;
    per_page[{r.host, r.page}] += c;
  }
  if (a.count == 0.0) return a;
  a.hosts = static_cast<double>(per_host.size());
  for (const auto& [_, c] : per_host) a.max_per_host = std::max(a.max_per_host, c);
  for (const auto& [_, c] : per_page) a.max_per_page = std::max(a.max_per_page, c);
  a.avg_per_host = a.count / a.hosts;
  a.avg_per_page = a.count / static_cast<double>(per_page.size());
  return a;
}

template <typename Sink>
void recency(Sink& s, std::span<const WebRecord> recs, Day t_c, std::string_view first, std::string_view last,
             std::string_view avg) {
  double lo = kMissing, hi = kMissing, weighted = 0.0, total = 0.0;
  for (const auto& r : recs) {
    if (r.day >= t_c) break;
    const double age = t_c - r.day;
    if (lo == kMissing) lo = age;
    hi = age;
    weighted += age * static_cast<double>(r.count);
    total += static_cast<double>(r.count);
  }
  emit_nl(s, first, lo);
  emit_nl(s, last, hi);
  emit_nl(s, avg, total > 0.0 ? weighted / total : kMissing);
}

template <typename Sink>
void web_features(Sink& s, std::span<const WebRecord> embeds, std::span<const WebRecord> links, Day t_c) {
  const auto ec = aggregate(embeds, 0, t_c), ed = aggregate(embeds, t_c - 1, t_c);
  emit_nlcd(s, "EmbCnt", ec.count, ed.count);
  emit_nlcd(s, "EmbHCnt", ec.hosts, ed.hosts);
  emit_nlcd(s, "MaxEPerH", ec.max_per_host, ed.max_per_host);
  emit_nlcd(s, "AvgEPerH", ec.avg_per_host, ed.avg_per_host);
  emit_nlcd(s, "MaxEPerP", ec.max_per_page, ed.max_per_page);
  emit_nlcd(s, "AvgEPerP", ec.avg_per_page, ed.avg_per_page);
  recency(s, embeds, t_c, "FirstEmb", "LastEmb", "AvgEmb");
  const auto lc = aggregate(links, 0, t_c), ld = aggregate(links, t_c - 1, t_c);
  emit_nlcd(s, "LinkCnt", lc.count, ld.count);
  emit_nlcd(s, "LinkHCnt", lc.hosts, ld.hosts);
  emit_nlcd(s, "MaxLPerH", lc.max_per_host, ld.max_per_host);
  emit_nlcd(s, "AvgLPerH", lc.avg_per_host, ld.avg_per_host);
  recency(s, links, t_c, "FirstLink", "LastLink", "AvgLink");
}

inline std::vector<std::string> category_labels(std::span<const std::int64_t> vocab) {
  std::vector<std::string> out;
  for (auto c : vocab) out.push_back(std::to_string(c));
  return out;
}

inline void check_tc(Day t_c) {
  if (t_c < 1) throw RangeError("current day t_c must be >= 1");
}

}  // namespace detail

/// Static hosting-API features. Categories outside `vocab` (sorted) set Cat[other].
inline NamedValues extract_static(const VideoMeta& meta, const AuthorMeta& author, std::span<const std::int64_t> vocab) {
  NamedValues out;
  detail::NameSink s{&out};
  const auto labels = detail::category_labels(vocab);
  detail::static_features(s, meta, author, vocab, labels);
  return out;
}

/// `snapshots[d]` is the snapshot at grid moment d, if one was taken.
inline NamedValues extract_api_dynamic(std::span<const std::optional<ApiSnapshot>> snapshots, Day t_c) {
  detail::check_tc(t_c);
  NamedValues out;
  detail::NameSink s{&out};
  detail::api_dynamic_features(s, snapshots, t_c);
  return out;
}

/// Per-day counts, index d covering [d, d+1).
inline NamedValues extract_log_features(std::span<const std::int64_t> shows, std::span<const std::int64_t> clicks,
                                        std::span<const std::int64_t> visits, Day t_c) {
  detail::check_tc(t_c);
  NamedValues out;
  detail::NameSink s{&out};
  detail::log_features(s, shows, clicks, visits, t_c);
  return out;
}

/// Records sorted by (day, host, page) as stored in a Corpus.
inline NamedValues extract_web_agg(std::span<const WebRecord> embeds, std::span<const WebRecord> links, Day t_c) {
  detail::check_tc(t_c);
  NamedValues out;
  detail::NameSink s{&out};
  detail::web_features(s, embeds, links, t_c);
  return out;
}

// -- feature sets --------------------------------------------------------------

namespace detail {

inline const std::map<std::string, std::vector<std::string>, std::less<>>& named_sets() {
  static const auto sets = [] {
    std::map<std::string, std::vector<std::string>, std::less<>> m;
    m["API_Sv"] = {"Dur", "Cat", "TitleLen", "DescLen", "UplDOW", "UplHour"};
    m["API_Svb"] = {"Dur", "Cat", "TitleLen", "DescLen"};
    m["API_Sa"] = {"AuthAge", "AUplCnt", "AViewSum", "FrndCnt", "SubsCnt"};
    m["API_D"] = {"CommCnt", "LikeCnt", "DislCnt", "MinRat", "MaxRat", "AvgRat", "RatCnt", "Update"};
    m["LOG_S"] = {"ShowURL", "ClickURL", "CTR"};
    m["LOG_B"] = {"BrowVisit"};
    m["WEB_ag"] = {"EmbCnt",   "EmbHCnt",  "MaxEPerH", "AvgEPerH", "MaxEPerP", "AvgEPerP",
                   "FirstEmb", "LastEmb",  "AvgEmb",   "LinkCnt",  "LinkHCnt", "MaxLPerH",
                   "AvgLPerH", "FirstLink", "LastLink", "AvgLink"};
    m["WEB_nag"] = {"EmbedHost", "LinkHost"};
    auto join = [&](std::initializer_list<const char*> parts) {
      std::vector<std::string> out;
      for (auto p : parts) out.insert(out.end(), m.at(p).begin(), m.at(p).end());
      return out;
    };
    m["API_S"] = join({"API_Sv", "API_Sa"});
    m["API"] = join({"API_Sv", "API_Sa", "API_D"});
    m["BASE.lit"] = join({"API_Svb", "API_Sa", "API_D"});
    m["LOG"] = join({"LOG_S", "LOG_B"});
    m["WEB"] = join({"WEB_ag", "WEB_nag"});
    m["ALL"] = join({"API_Sv", "API_Sa", "API_D", "LOG_S", "LOG_B", "WEB_ag", "WEB_nag"});
    m["tc"] = {"UplHour", "Update", "UplDOW"};
    m["sv"] = {"Cat", "Dur", "TitleLen", "DescLen"};
    m["uf"] = {"MinRat", "MaxRat", "AvgRat", "LikeCnt", "DislCnt", "RatCnt", "CommCnt"};
    m["ar"] = {"AuthAge", "AUplCnt", "AViewSum"};
    m["se"] = {"FrndCnt", "SubsCnt"};
    return m;
  }();
  return sets;
}

class SetParser {
public:
  explicit SetParser(std::string_view s) : s_(s) {}

  std::set<std::string> parse() {
    auto v = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

private:
  std::set<std::string> expr() {
    auto acc = term();
    for (;;) {
      skip_ws();
      if (eat("∪") || eat("|") || eat("+")) {
        auto rhs = term();
        acc.insert(rhs.begin(), rhs.end());
      } else if (eat("∖") || eat("\\") || eat("-")) {
        for (const auto& x : term()) acc.erase(x);
      } else {
        return acc;
      }
    }
  }

  std::set<std::string> term() {
    skip_ws();
    if (eat("(")) {
      auto v = expr();
      skip_ws();
      if (!eat(")")) fail("missing ')'");
      return v;
    }
    if (eat("∅")) return {};
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.'))
      ++pos_;
    if (start == pos_) fail("expected a feature set name");
    const auto name = s_.substr(start, pos_ - start);
    const auto& sets = named_sets();
    if (auto it = sets.find(name); it != sets.end()) return {it->second.begin(), it->second.end()};
    // a single base feature is a singleton set
    for (const auto& [_, members] : sets)
      if (std::find(members.begin(), members.end(), name) != members.end()) return {std::string(name)};
    fail("unknown feature set '" + std::string(name) + "'");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    if (s_.substr(pos_).starts_with(tok)) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigurationError("feature set expression '" + std::string(s_) + "': " + msg);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Column layout available for a corpus: category vocabulary plus, when
/// influence models are supplied, the LIM block.
struct FeatureUniverse {
  std::vector<std::int64_t> categories;
  std::vector<std::string> lim_columns;
  std::vector<std::string> columns;  // every column, lexicographic

  bool has_lim() const noexcept { return !lim_columns.empty(); }
};

namespace detail {

inline std::vector<std::string> non_lim_columns(std::span<const std::int64_t> vocab) {
  NamedValues nv;
  NameSink s{&nv};
  const auto labels = category_labels(vocab);
  static_features(s, VideoMeta{}, AuthorMeta{}, vocab, labels);
  api_dynamic_features(s, std::span<const std::optional<ApiSnapshot>>{}, 1);
  log_features(s, {}, {}, {}, 1);
  web_features(s, {}, {}, 1);
  std::vector<std::string> out;
  for (auto& [n, _] : nv) out.push_back(std::move(n));
  return out;
}

inline std::vector<std::string> lim_block_columns(std::span<const InfluenceSet> sets) {
  std::vector<std::string> names;
  for (const auto& s : sets) {
    const auto stem = lim_column_stem(s.config);
    for (const char* suffix : {"[c]", "[d]"}) {
      names.push_back(stem + suffix);
      names.push_back("log(" + stem + suffix + ")");
    }
  }
  return names;
}

}  // namespace detail

inline FeatureUniverse make_universe(std::span<const std::int64_t> categories, std::span<const InfluenceSet> lims = {}) {
  FeatureUniverse u;
  u.categories.assign(categories.begin(), categories.end());
  std::sort(u.categories.begin(), u.categories.end());
  u.categories.erase(std::unique(u.categories.begin(), u.categories.end()), u.categories.end());
  if (!lims.empty()) {
    if (lims.size() != kLimModelCount)
      throw ConfigurationError("LIM feature block needs exactly 12 models, got " + std::to_string(lims.size()));
    u.lim_columns = detail::lim_block_columns(lims);
  }
  u.columns = detail::non_lim_columns(u.categories);
  u.columns.insert(u.columns.end(), u.lim_columns.begin(), u.lim_columns.end());
  std::sort(u.columns.begin(), u.columns.end());
  if (std::adjacent_find(u.columns.begin(), u.columns.end()) != u.columns.end())
    throw ConfigurationError("duplicate feature column names");
  return u;
}

inline FeatureUniverse make_universe(const Corpus& corpus, std::span<const InfluenceSet> lims = {}) {
  return make_universe(corpus.categories(), lims);
}

struct FeatureSpec {
  std::string name;                   // expression as given
  std::vector<std::string> features;  // base features, sorted
  std::vector<std::string> columns;   // resolved columns, lexicographic

  bool uses_lim() const {
    return std::any_of(features.begin(), features.end(),
                       [](const std::string& f) { return f == "EmbedHost" || f == "LinkHost"; });
  }
};

/// Resolves a feature-set expression such as "ALL∖WEB_nag" or "API|LOG".
/// Union: ∪ | +  Difference: ∖ \ -  Empty set: ∅. Parentheses group; evaluation is left to right.
inline FeatureSpec resolve_feature_spec(std::string_view expr, const FeatureUniverse& u) {
  FeatureSpec spec;
  spec.name = std::string(expr);
  const auto set = detail::SetParser(expr).parse();
  spec.features.assign(set.begin(), set.end());
  if (spec.features.empty()) throw ConfigurationError("feature set '" + spec.name + "' is empty");
  if (spec.uses_lim() && !u.has_lim())
    throw ConfigurationError("feature set '" + spec.name + "' needs WEB_nag columns but no influence models were supplied");
  for (const auto& c : u.columns)
    if (set.contains(base_feature(c))) spec.columns.push_back(c);
  return spec;
}

// -- matrices -------------------------------------------------------------------

struct FeatureMatrix {
  std::vector<std::string> row_ids;
  Day t_c = 1;
  std::vector<std::string> columns;
  std::vector<double> values;  // row-major

  std::size_t rows() const noexcept { return row_ids.size(); }
  std::size_t cols() const noexcept { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * columns.size(), columns.size()}; }

  std::optional<std::size_t> column_index(std::string_view name) const {
    auto it = std::lower_bound(columns.begin(), columns.end(), name);
    if (it == columns.end() || *it != name) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
  }

  std::string schema_digest() const { return schema_digest_of(columns); }

  static std::string schema_digest_of(std::span<const std::string> cols) {
    std::uint64_t h = fnv1a("");
    for (const auto& c : cols) h = fnv1a(c + "\n", h);
    return hex64(h);
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

inline FeatureMatrix select_columns(const FeatureMatrix& m, std::span<const std::string> columns) {
  FeatureMatrix out;
  out.row_ids = m.row_ids;
  out.t_c = m.t_c;
  out.columns.assign(columns.begin(), columns.end());
  std::vector<std::size_t> idx;
  for (const auto& c : columns) {
    auto i = m.column_index(c);
    if (!i) throw SchemaError("matrix has no column '" + c + "'");
    idx.push_back(*i);
  }
  out.values.resize(m.rows() * idx.size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t k = 0; k < idx.size(); ++k) out.values[r * idx.size() + k] = m.at(r, idx[k]);
  return out;
}

inline FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.t_c = m.t_c;
  out.columns = m.columns;
  out.values.reserve(rows.size() * m.cols());
  for (auto r : rows) {
    out.row_ids.push_back(m.row_ids.at(r));
    auto src = m.row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

/// Every universe column for `videos` (corpus indices; empty = all) at t_c.
inline FeatureMatrix build_universe_matrix(const Corpus& corpus, const FeatureUniverse& u, Day t_c,
                                           std::span<const InfluenceSet> lims = {},
                                           std::span<const std::size_t> videos = {}, unsigned threads = 1) {
  detail::check_tc(t_c);
  if (u.has_lim() && lims.size() != kLimModelCount)
    throw ConfigurationError("universe has LIM columns but influence models were not supplied");
  std::vector<std::size_t> all;
  if (videos.empty()) {
    all.resize(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    videos = all;
  }

  const auto local = detail::non_lim_columns(u.categories);
  std::vector<std::size_t> pos_local(local.size()), pos_lim(u.lim_columns.size());
  auto position = [&](const std::string& name) {
    return static_cast<std::size_t>(std::lower_bound(u.columns.begin(), u.columns.end(), name) - u.columns.begin());
  };
  for (std::size_t i = 0; i < local.size(); ++i) pos_local[i] = position(local[i]);
  for (std::size_t i = 0; i < u.lim_columns.size(); ++i) pos_lim[i] = position(u.lim_columns[i]);

  FeatureMatrix m;
  m.t_c = t_c;
  m.columns = u.columns;
  const std::size_t nc = u.columns.size();
  m.values.resize(videos.size() * nc);
  m.row_ids.resize(videos.size());
  const auto labels = detail::category_labels(u.categories);

  constexpr std::size_t chunk = 512;
  parallel_for((videos.size() + chunk - 1) / chunk, threads, [&](std::size_t b) {
    std::vector<double> buf(local.size());
    const std::size_t end = std::min(videos.size(), (b + 1) * chunk);
    for (std::size_t r = b * chunk; r < end; ++r) {
      const auto& v = corpus.video(videos[r]);
      m.row_ids[r] = v.id().str();
      detail::PositionSink s{buf.data()};
      detail::static_features(s, v.meta, v.author, u.categories, labels);
      detail::api_dynamic_features(s, v.snapshots, t_c);
      detail::log_features(s, v.search_shows, v.search_clicks, v.browse_visits, t_c);
      detail::web_features(s, v.embeds, v.links, t_c);
      double* row = &m.values[r * nc];
      for (std::size_t i = 0; i < buf.size(); ++i) row[pos_local[i]] = buf[i];
    }
  });

  if (u.has_lim()) {
    const auto block = lim_feature_block(corpus, lims, t_c, videos);
    for (std::size_t r = 0; r < videos.size(); ++r)
      for (std::size_t i = 0; i < block.cols(); ++i) m.values[r * nc + pos_lim[i]] = block.at(r, i);
  }
  return m;
}

/// Matrix with exactly the spec's columns. Influence models are required iff
/// the spec includes WEB_nag features.
inline FeatureMatrix build_feature_matrix(const Corpus& corpus, std::string_view spec_expr, Day t_c,
                                          std::span<const InfluenceSet> lims = {},
                                          std::span<const std::size_t> videos = {}, unsigned threads = 1) {
  detail::check_tc(t_c);
  const auto u = make_universe(corpus, lims);
  const auto spec = resolve_feature_spec(spec_expr, u);
  if (!spec.uses_lim()) {
    const auto plain = make_universe(corpus);
    return select_columns(build_universe_matrix(corpus, plain, t_c, {}, videos, threads), spec.columns);
  }
  return select_columns(build_universe_matrix(corpus, u, t_c, lims, videos, threads), spec.columns);
}

// -- persistence ---------------------------------------------------------------------

/// Header "video,<columns...>", then one row per video.
inline void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "video";
  for (const auto& c : m.columns) {
    if (c.find_first_of(",\"\n") != std::string::npos) throw SchemaError("column name not CSV-safe: " + c);
    out << ',' << c;
  }
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.row_ids[r];
    for (double v : m.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

inline FeatureMatrix read_feature_csv(std::istream& in, Day t_c = 1) {
  FeatureMatrix m;
  m.t_c = t_c;
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw ParseError("empty feature matrix", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto head = split(line);
  if (head.empty() || head[0] != "video") throw ParseError("first header cell must be 'video'", line_no);
  m.columns.assign(head.begin() + 1, head.end());
  if (!std::is_sorted(m.columns.begin(), m.columns.end()) ||
      std::adjacent_find(m.columns.begin(), m.columns.end()) != m.columns.end())
    throw ParseError("columns must be unique and sorted", line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != head.size()) throw ParseError("row has " + std::to_string(cells.size()) + " cells", line_no);
    m.row_ids.push_back(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[i].size() || !std::isfinite(v)) throw ParseError("bad number '" + cells[i] + "'", line_no);
      m.values.push_back(v);
    }
  }
  return m;
}

}  // namespace viewcast
