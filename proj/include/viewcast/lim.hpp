#pragma once

// Linear influence model over the bipartite host/viewer graph.
//
// Every host h owns an influence function I_h(0..L-1). A video's views on day
// d are modelled as the sum of m * I_h(d - d_h) over the infections (h, d_h)
// of that video with 0 <= d - d_h < L, where m is the number of pages the host
// used that day. Fitting is unconstrained least squares (negative influence
// allowed) over a sparse design with one column per (host, lag).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewcast/core.hpp"
#include "viewcast/corpus.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/parallel.hpp"

namespace viewcast {

enum class InfectionSource { Embed, Link };

inline std::string_view source_name(InfectionSource s) { return s == InfectionSource::Embed ? "embed" : "link"; }

inline InfectionSource parse_source(std::string_view s) {
  if (s == "embed") return InfectionSource::Embed;
  if (s == "link") return InfectionSource::Link;
  throw ConfigurationError("unknown infection source '" + std::string(s) + "'");
}

/// Pseudo-host absorbing infections by hosts outside the configured list.
inline const std::string kOtherHost = "<other>";

struct LimConfig {
  InfectionSource source = InfectionSource::Embed;
  int L = 10;
  int training_window_days = 28;
  int host_count = 1280;
  bool include_other_host = true;
  bool binary_design = false;  // 1 per infecting host-day instead of its page count
  double ridge = 0.0;

  void validate() const {
    if (L < 1) throw ConfigurationError("LIM domain size L must be >= 1");
    if (host_count < 1) throw ConfigurationError("LIM host_count must be >= 1");
    if (training_window_days < L) throw ConfigurationError("LIM training window must be >= L");
    if (!(ridge >= 0.0)) throw ConfigurationError("LIM ridge must be >= 0");
  }

  std::string canonical() const {
    return "source=" + std::string(source_name(source)) + ";L=" + std::to_string(L) +
           ";window=" + std::to_string(training_window_days) + ";hosts=" + std::to_string(host_count) +
           ";other=" + (include_other_host ? "1" : "0") + ";binary=" + (binary_design ? "1" : "0") +
           ";ridge=" + format_double(ridge);
  }

  std::string digest() const { return hex64(fnv1a(canonical())); }

  friend bool operator==(const LimConfig&, const LimConfig&) = default;
};

inline void to_json(nlohmann::json& j, const LimConfig& c) {
  j = nlohmann::json{{"source", source_name(c.source)},
                     {"L", c.L},
                     {"training_window_days", c.training_window_days},
                     {"host_count", c.host_count},
                     {"include_other_host", c.include_other_host},
                     {"binary_design", c.binary_design},
                     {"ridge", c.ridge}};
}

inline void from_json(const nlohmann::json& j, LimConfig& c) {
  if (!j.is_object()) throw ConfigurationError("LIM config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "source" && key != "L" && key != "training_window_days" && key != "host_count" &&
        key != "include_other_host" && key != "binary_design" && key != "ridge")
      throw ConfigurationError("unknown LIM config key '" + key + "'");
  if (j.contains("source")) c.source = parse_source(j.at("source").get<std::string>());
  if (j.contains("L")) j.at("L").get_to(c.L);
  if (j.contains("training_window_days")) j.at("training_window_days").get_to(c.training_window_days);
  if (j.contains("host_count")) j.at("host_count").get_to(c.host_count);
  if (j.contains("include_other_host")) j.at("include_other_host").get_to(c.include_other_host);
  if (j.contains("binary_design")) j.at("binary_design").get_to(c.binary_design);
  if (j.contains("ridge")) j.at("ridge").get_to(c.ridge);
  c.validate();
}

/// The twelve models of the non-aggregated web block:
/// {embed, link} x L in {1, 10, 20} x two training windows.
inline std::vector<LimConfig> default_lim_configs(std::pair<int, int> windows = {28, 56}, int host_count = 1280) {
  std::vector<LimConfig> out;
  for (auto src : {InfectionSource::Embed, InfectionSource::Link})
    for (int L : {1, 10, 20})
      for (int w : {windows.first, windows.second}) {
        LimConfig c;
        c.source = src;
        c.L = L;
        c.training_window_days = std::max(w, L);
        c.host_count = host_count;
        out.push_back(c);
      }
  return out;
}

/// Row (video, day) x column (host, lag) design with observed daily views.
struct SparseSystem {
  struct RowKey {
    std::uint32_t video;  // corpus index
    Day day;
  };

  int L = 1;
  std::vector<std::string> hosts;  // column blocks; column = host_index * L + lag
  std::vector<RowKey> rows;
  std::vector<std::size_t> row_ptr{0};  // CSR
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;
  std::vector<double> y;

  std::size_t n_rows() const noexcept { return rows.size(); }
  std::size_t n_cols() const noexcept { return hosts.size() * static_cast<std::size_t>(L); }
  std::size_t nnz() const noexcept { return values.size(); }
  bool empty() const noexcept { return rows.empty(); }

  /// Entry (row, col), 0 when absent.
  double entry(std::size_t row, std::size_t col) const {
    for (auto k = row_ptr[row]; k < row_ptr[row + 1]; ++k)
      if (col_idx[k] == col) return values[k];
    return 0.0;
  }
};

namespace detail {

inline const std::vector<WebRecord>& infections_of(const VideoRecord& v, InfectionSource s) {
  return s == InfectionSource::Embed ? v.embeds : v.links;
}

// Maps interned corpus hosts to column blocks; -1 drops the host.
inline std::vector<int> host_columns(const Corpus& corpus, const std::vector<std::string>& listed, bool other) {
  std::vector<int> map(corpus.hosts().size(), other ? static_cast<int>(listed.size()) : -1);
  for (std::size_t i = 0; i < listed.size(); ++i)
    if (auto h = corpus.host_index(listed[i])) map[*h] = static_cast<int>(i);
  return map;
}

}  // namespace detail

/// Builds the design over `videos` (corpus indices; empty = every video).
/// Videos without a views history carry no observations and are skipped.
inline SparseSystem build_design(const Corpus& corpus, const LimConfig& config,
                                 std::span<const std::size_t> videos = {}) {
  config.validate();
  SparseSystem sys;
  sys.L = config.L;
  if (corpus.empty()) return sys;

  sys.hosts = top_hosts(corpus, config.host_count);
  const auto col_of_host = detail::host_columns(corpus, sys.hosts, config.include_other_host);
  if (config.include_other_host) sys.hosts.push_back(kOtherHost);

  const int window = std::min(config.training_window_days, corpus.grid().horizon_days());
  const auto L = static_cast<std::size_t>(config.L);

  std::vector<std::size_t> all;
  if (videos.empty()) {
    all.resize(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    videos = all;
  }

  std::vector<std::pair<std::uint32_t, double>> row_entries;
  for (auto vi : videos) {
    const auto& v = corpus.video(vi);
    if (!v.timeline.has_history) continue;
    const auto& infs = detail::infections_of(v, config.source);
    for (Day d = 0; d < window; ++d) {
      row_entries.clear();
      std::vector<std::pair<std::uint32_t, Day>> seen;  // binary design: one unit per (host, day)
      for (const auto& inf : infs) {
        if (inf.day > d) break;  // sorted by day
        const auto lag = static_cast<std::size_t>(d - inf.day);
        if (lag >= L) continue;
        const int block = col_of_host[inf.host];
        if (block < 0) continue;
        if (config.binary_design) {
          std::pair<std::uint32_t, Day> key{inf.host, inf.day};
          if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
          seen.push_back(key);
        }
        row_entries.emplace_back(static_cast<std::uint32_t>(static_cast<std::size_t>(block) * L + lag),
                                 config.binary_design ? 1.0 : static_cast<double>(inf.count));
      }
      std::sort(row_entries.begin(), row_entries.end());
      for (std::size_t k = 0; k < row_entries.size(); ++k) {
        if (k > 0 && row_entries[k].first == sys.col_idx.back() && sys.row_ptr.back() < sys.col_idx.size()) {
          sys.values.back() += row_entries[k].second;
        } else {
          sys.col_idx.push_back(row_entries[k].first);
          sys.values.push_back(row_entries[k].second);
        }
      }
      sys.rows.push_back({static_cast<std::uint32_t>(vi), d});
      sys.row_ptr.push_back(sys.col_idx.size());
      sys.y.push_back(static_cast<double>(v.timeline.daily_views[static_cast<std::size_t>(d)]));
    }
  }
  return sys;
}

struct InfluenceFunction {
  std::string host;
  std::vector<double> values;
};

struct InfluenceSet {
  LimConfig config;
  std::vector<InfluenceFunction> functions;  // listed hosts in rank order, then the pseudo-host
  double residual_norm = 0.0;   // ||A x - y||
  double gradient_norm = 0.0;   // ||A^T (A x - y) + ridge x||, recomputed from scratch
  double aty_norm = 0.0;        // ||A^T y||
  int iterations = 0;
  bool converged = false;

  const InfluenceFunction* find(std::string_view host) const {
    if (index_.size() != functions.size()) reindex();
    auto it = index_.find(std::string(host));
    return it == index_.end() ? nullptr : &functions[it->second];
  }

  void reindex() const {
    index_.clear();
    for (std::size_t i = 0; i < functions.size(); ++i) index_.emplace(functions[i].host, i);
  }

private:
  mutable std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

struct CscView {
  std::vector<std::size_t> col_ptr;
  std::vector<std::uint32_t> row_idx;
  std::vector<double> values;
};

inline CscView transpose(const SparseSystem& s) {
  CscView t;
  const auto nc = s.n_cols();
  t.col_ptr.assign(nc + 1, 0);
  for (auto c : s.col_idx) ++t.col_ptr[c + 1];
  for (std::size_t c = 0; c < nc; ++c) t.col_ptr[c + 1] += t.col_ptr[c];
  t.row_idx.resize(s.nnz());
  t.values.resize(s.nnz());
  std::vector<std::size_t> fill(t.col_ptr.begin(), t.col_ptr.end() - 1);
  for (std::size_t r = 0; r < s.n_rows(); ++r)
    for (auto k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      auto pos = fill[s.col_idx[k]]++;
      t.row_idx[pos] = static_cast<std::uint32_t>(r);
      t.values[pos] = s.values[k];
    }
  return t;
}

// Fixed-size blocks keep every parallel product bit-identical for any thread count.
constexpr std::size_t kBlock = 4096;

inline void mul(const SparseSystem& s, std::span<const double> x, std::span<double> out, unsigned threads) {
  const std::size_t n = s.n_rows();
  parallel_for((n + kBlock - 1) / kBlock, threads, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      double acc = 0.0;
      for (auto k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) acc += s.values[k] * x[s.col_idx[k]];
      out[r] = acc;
    }
  });
}

inline void mul_t(const CscView& t, std::span<const double> r, std::span<double> out, unsigned threads) {
  const std::size_t n = out.size();
  parallel_for((n + kBlock - 1) / kBlock, threads, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t c = b * kBlock; c < end; ++c) {
      double acc = 0.0;
      for (auto k = t.col_ptr[c]; k < t.col_ptr[c + 1]; ++k) acc += t.values[k] * r[t.row_idx[k]];
      out[c] = acc;
    }
  });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  unsigned threads = 1;
};

/// Minimises ||A x - y||^2 + ridge ||x||^2 by conjugate gradients on the
/// normal equations (CGLS), starting from x = 0 so rank-deficient systems
/// return the least-norm solution. Convergence is declared only when the
/// gradient recomputed from scratch satisfies
///   ||A^T (y - A x) - ridge x|| <= tol ||A^T y||.
/// Otherwise the iterate with the smallest gradient is returned unconverged.
inline InfluenceSet solve_lim(const SparseSystem& full, const LimConfig& config, const SolveOptions& opt = {}) {
  if (full.empty()) throw ContractError("solve_lim requires a non-empty system");
  // rows without infections only add a constant to the objective
  SparseSystem sys;
  sys.L = full.L;
  sys.hosts = full.hosts;
  double idle_sq = 0.0;
  for (std::size_t r = 0; r < full.n_rows(); ++r) {
    if (full.row_ptr[r] == full.row_ptr[r + 1]) {
      idle_sq += full.y[r] * full.y[r];
      continue;
    }
    sys.rows.push_back(full.rows[r]);
    for (auto k = full.row_ptr[r]; k < full.row_ptr[r + 1]; ++k) {
      sys.col_idx.push_back(full.col_idx[k]);
      sys.values.push_back(full.values[k]);
    }
    sys.row_ptr.push_back(sys.col_idx.size());
    sys.y.push_back(full.y[r]);
  }
  const std::size_t m = sys.n_rows(), n = sys.n_cols();
  const double lambda = config.ridge;
  const unsigned th = std::max(1u, opt.threads);
  const auto t = detail::transpose(sys);

  std::vector<double> x(n, 0.0), r(sys.y), s(n), p(n), q(m);
  detail::mul_t(t, r, s, th);
  const double aty = std::sqrt(detail::dot(s, s));

  InfluenceSet out;
  out.config = config;
  out.aty_norm = aty;

  auto true_gradient = [&](std::vector<double>& res, std::vector<double>& grad) {
    detail::mul(sys, x, q, th);
    for (std::size_t i = 0; i < m; ++i) res[i] = sys.y[i] - q[i];
    detail::mul_t(t, res, grad, th);
    for (std::size_t j = 0; j < n; ++j) grad[j] -= lambda * x[j];
  };

  int iter = 0;
  bool converged = aty == 0.0;
  std::vector<double> best_x = x;
  double best_gamma = detail::dot(s, s);
  if (!converged) {
    p = s;
    double gamma = detail::dot(s, s);
    const double target = opt.tol * aty;
    while (iter < opt.max_iter) {
      ++iter;
      detail::mul(sys, p, q, th);
      double delta = detail::dot(q, q) + lambda * detail::dot(p, p);
      if (!(delta > 0.0)) break;
      const double alpha = gamma / delta;
      for (std::size_t j = 0; j < n; ++j) x[j] += alpha * p[j];
      for (std::size_t i = 0; i < m; ++i) r[i] -= alpha * q[i];
      detail::mul_t(t, r, s, th);
      for (std::size_t j = 0; j < n; ++j) s[j] -= lambda * x[j];
      double gamma_new = detail::dot(s, s);

      if (std::sqrt(gamma_new) <= target) {
        // the recurrences drift; confirm against a fresh gradient and restart if needed
        true_gradient(r, s);
        gamma_new = detail::dot(s, s);
        if (gamma_new < best_gamma) {
          best_gamma = gamma_new;
          best_x = x;
        }
        if (std::sqrt(gamma_new) <= target) {
          converged = true;
          break;
        }
        p = s;
        gamma = gamma_new;
        continue;
      }
      if (gamma_new < best_gamma) {
        best_gamma = gamma_new;
        best_x = x;
      }
      const double beta = gamma_new / gamma;
      for (std::size_t j = 0; j < n; ++j) p[j] = s[j] + beta * p[j];
      gamma = gamma_new;
    }
  }
  if (!converged) x = best_x;

  std::vector<double> res(m), grad(n);
  true_gradient(res, grad);
  out.residual_norm = std::sqrt(detail::dot(res, res) + idle_sq);
  out.gradient_norm = std::sqrt(detail::dot(grad, grad));
  out.iterations = iter;
  out.converged = converged || out.gradient_norm <= opt.tol * aty;

  const auto L = static_cast<std::size_t>(sys.L);
  out.functions.reserve(sys.hosts.size());
  for (std::size_t h = 0; h < sys.hosts.size(); ++h)
    out.functions.push_back({sys.hosts[h], std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(h * L),
                                                               x.begin() + static_cast<std::ptrdiff_t>((h + 1) * L))});
  out.reindex();
  return out;
}

inline InfluenceSet train_lim(const Corpus& corpus, const LimConfig& config, std::span<const std::size_t> videos = {},
                              const SolveOptions& opt = {}) {
  auto sys = build_design(corpus, config, videos);
  return solve_lim(sys, config, opt);
}

struct Infection {
  std::string host;
  Day day = 0;
  std::int64_t count = 1;
};

/// Predicted views over [t-1, t) from infections observed before t.
inline double predict_lim(const InfluenceSet& set, std::span<const Infection> infections, Day t) {
  if (t < 1) throw RangeError("predict_lim requires t >= 1");
  const InfluenceFunction* other = set.config.include_other_host ? set.find(kOtherHost) : nullptr;
  double total = 0.0;
  for (const auto& inf : infections) {
    const int lag = t - 1 - inf.day;
    if (lag < 0 || lag >= set.config.L) continue;
    const InfluenceFunction* f = set.find(inf.host);
    if (!f) f = other;
    if (!f) continue;
    const double mult = set.config.binary_design ? 1.0 : static_cast<double>(inf.count);
    total += mult * f->values[static_cast<std::size_t>(lag)];
  }
  return total;
}

inline std::vector<Infection> infections_of(const Corpus& corpus, const VideoRecord& v, InfectionSource source) {
  std::vector<Infection> out;
  for (const auto& w : detail::infections_of(v, source)) out.push_back({corpus.host_name(w.host), w.day, w.count});
  return out;
}

inline constexpr std::size_t kLimModelCount = 12;

/// Dense block of named columns, one row per video.
struct ColumnBlock {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major, rows x names.size()

  std::size_t cols() const noexcept { return names.size(); }
  std::size_t rows() const noexcept { return names.empty() ? 0 : values.size() / names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * names.size() + c]; }
};

inline std::string lim_column_stem(const LimConfig& c) {
  return std::string(c.source == InfectionSource::Embed ? "EmbedHost" : "LinkHost") + "[L=" + std::to_string(c.L) +
         ";W=" + std::to_string(c.training_window_days) + "]";
}

inline double signed_log(double x) { return x >= 0.0 ? log_transform(x) : -log_transform(-x); }

/// Per-video resolution of infections to function indices of one model.
class LimPredictor {
public:
  LimPredictor(const Corpus& corpus, const InfluenceSet& set) : set_(&set) {
    set.reindex();
    const InfluenceFunction* other = set.config.include_other_host ? set.find(kOtherHost) : nullptr;
    const std::ptrdiff_t other_idx = other ? other - set.functions.data() : -1;
    fn_of_host_.assign(corpus.hosts().size(), -1);
    for (std::size_t h = 0; h < corpus.hosts().size(); ++h) {
      const auto* f = set.find(corpus.host_name(static_cast<std::uint32_t>(h)));
      fn_of_host_[h] = f ? f - set.functions.data() : other_idx;
    }
  }

  /// Predicted daily views for days 0..t_c-1, i.e. predict_lim at t = 1..t_c.
  void daily(const VideoRecord& v, Day t_c, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const int L = set_->config.L;
    for (const auto& inf : detail::infections_of(v, set_->config.source)) {
      if (inf.day >= t_c) break;
      const auto fi = fn_of_host_[inf.host];
      if (fi < 0) continue;
      const auto& f = set_->functions[static_cast<std::size_t>(fi)].values;
      const double mult = set_->config.binary_design ? 1.0 : static_cast<double>(inf.count);
      for (int lag = 0; lag < L && inf.day + lag < t_c; ++lag)
        out[static_cast<std::size_t>(inf.day + lag)] += mult * f[static_cast<std::size_t>(lag)];
    }
  }

private:
  const InfluenceSet* set_;
  std::vector<std::ptrdiff_t> fn_of_host_;
};

/// Four columns per model: predicted cumulative and daily views at t_c, raw
/// and log-transformed. Requires exactly twelve models with distinct names.
inline ColumnBlock lim_feature_block(const Corpus& corpus, std::span<const InfluenceSet> sets, Day t_c,
                                     std::span<const std::size_t> videos = {}) {
  if (sets.size() != kLimModelCount)
    throw ConfigurationError("LIM feature block needs exactly 12 models, got " + std::to_string(sets.size()));
  if (t_c < 1) throw RangeError("current day must be >= 1");
  ColumnBlock block;
  for (const auto& s : sets) {
    const auto stem = lim_column_stem(s.config);
    for (const char* suffix : {"[c]", "[d]"}) {
      block.names.push_back(stem + suffix);
      block.names.push_back("log(" + stem + suffix + ")");
    }
  }
  {
    auto sorted = block.names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigurationError("LIM models must differ in (source, L, training window)");
  }

  std::vector<std::size_t> all;
  if (videos.empty()) {
    all.resize(corpus.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    videos = all;
  }
  std::vector<LimPredictor> predictors;
  predictors.reserve(sets.size());
  for (const auto& s : sets) predictors.emplace_back(corpus, s);

  block.values.resize(videos.size() * block.names.size());
  std::vector<double> daily(static_cast<std::size_t>(t_c));
  for (std::size_t r = 0; r < videos.size(); ++r) {
    const auto& v = corpus.video(videos[r]);
    double* row = &block.values[r * block.names.size()];
    for (std::size_t m = 0; m < predictors.size(); ++m) {
      predictors[m].daily(v, t_c, daily);
      double cum = 0.0;
      for (double d : daily) cum += d;
      const double day = daily.back();
      row[4 * m + 0] = cum;
      row[4 * m + 1] = signed_log(cum);
      row[4 * m + 2] = day;
      row[4 * m + 3] = signed_log(day);
    }
  }
  return block;
}

// -- persistence --------------------------------------------------------------

/// Header record with the config, then one record per host function.
inline void write_influence_set(std::ostream& out, const InfluenceSet& set) {
  const auto digest = set.config.digest();
  nlohmann::json head;
  to_json(head, set.config);
  head["record"] = "lim_model";
  head["config"] = digest;
  head["residual_norm"] = set.residual_norm;
  head["gradient_norm"] = set.gradient_norm;
  head["aty_norm"] = set.aty_norm;
  head["iterations"] = set.iterations;
  head["converged"] = set.converged;
  out << head.dump() << '\n';
  for (const auto& f : set.functions) {
    nlohmann::ordered_json rec;
    rec["host"] = f.host;
    rec["values"] = f.values;
    rec["config"] = digest;
    out << rec.dump() << '\n';
  }
}

inline std::vector<InfluenceSet> read_influence_sets(std::istream& in) {
  std::vector<InfluenceSet> sets;
  std::string line;
  std::size_t line_no = 0;
  std::string digest;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw ParseError(ex.what(), line_no);
    }
    if (j.contains("record")) {
      InfluenceSet s;
      auto cfg = j;
      for (const char* k : {"record", "config", "residual_norm", "gradient_norm", "aty_norm", "iterations", "converged"})
        cfg.erase(k);
      try {
        from_json(cfg, s.config);
      } catch (const ConfigurationError& ex) {
        throw ParseError(ex.what(), line_no);
      }
      digest = j.at("config").get<std::string>();
      if (digest != s.config.digest()) throw ParseError("LIM config digest mismatch", line_no);
      s.residual_norm = j.value("residual_norm", 0.0);
      s.gradient_norm = j.value("gradient_norm", 0.0);
      s.aty_norm = j.value("aty_norm", 0.0);
      s.iterations = j.value("iterations", 0);
      s.converged = j.value("converged", false);
      sets.push_back(std::move(s));
      continue;
    }
    if (sets.empty()) throw ParseError("host record before any LIM header", line_no);
    if (j.at("config").get<std::string>() != digest) throw ParseError("host record digest mismatch", line_no);
    InfluenceFunction f{j.at("host").get<std::string>(), j.at("values").get<std::vector<double>>()};
    if (f.values.size() != static_cast<std::size_t>(sets.back().config.L))
      throw ParseError("influence function length differs from L", line_no);
    sets.back().functions.push_back(std::move(f));
  }
  for (auto& s : sets) s.reindex();
  return sets;
}

}  // namespace viewcast
