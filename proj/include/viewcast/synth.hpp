#pragma once

// Seeded synthetic corpora with known ground truth.
//
// Daily views are the forward linear-influence model plus an intrinsic
// interest curve and Gaussian noise:
//   views(v, d) = round(max(0, intrinsic(v, d) + sum_e m_e * I_{h_e}(d - d_e) + N(0, sigma)))
// where the sum runs over embeds and links e of v with 0 <= d - d_e < L_true.
// Influence values are integers so the noiseless, intrinsic-free corpus
// follows the linear model exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewcast/core.hpp"
#include "viewcast/corpus.hpp"
#include "viewcast/errors.hpp"
#include "viewcast/events.hpp"

namespace viewcast {

struct BaseInterest {
  double scale = 40.0;   // median day-0 intrinsic views; 0 disables intrinsic interest
  double log_sd = 1.2;   // lognormal spread across videos
  double decay_min = 0.55;
  double decay_max = 0.95;
};

struct SynthConfig {
  std::uint64_t seed = 42;
  int n_videos = 50000;
  int n_hosts = 1500;
  double power_law_alpha = 2.2;
  int L_true = 10;
  BaseInterest base_interest;
  double noise_sigma = 2.0;
  double missing_history_fraction = 0.0;
  int horizon_days = 27;
  double embed_fraction = 0.10;

  double link_fraction = 0.15;
  double link_alpha = 2.5;
  double host_zipf = 0.8;               // host popularity exponent for placing embeds
  double negative_host_fraction = 0.05; // hosts whose influence is negative
  double influence_scale = 25.0;        // median peak influence per embed
  double link_influence_scale = 8.0;
  double embed_day_rate = 0.3;          // geometric rate of the embed day
  int max_web_events_per_video = 5000;
  int pages_per_host = 40;
  int n_categories = 15;
  double show_rate = 0.6;
  double browse_rate = 0.08;
};

inline void validate(const SynthConfig& c) {
  auto bad = [](const std::string& m) { throw ValidationError("synth config: " + m); };
  if (c.n_videos < 1 || c.n_hosts < 1 || c.L_true < 1 || c.horizon_days < 1 || c.n_categories < 1 ||
      c.pages_per_host < 1 || c.max_web_events_per_video < 1)
    bad("counts must be >= 1");
  if (!(c.power_law_alpha > 1.0) || !(c.link_alpha > 1.0)) bad("power-law exponents must exceed 1");
  if (!(c.noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
  if (!(c.missing_history_fraction >= 0.0 && c.missing_history_fraction <= 1.0))
    bad("missing_history_fraction must lie in [0, 1]");
  if (!(c.embed_fraction > 0.0 && c.embed_fraction <= 1.0)) bad("embed_fraction must lie in (0, 1]");
  if (!(c.link_fraction >= 0.0 && c.link_fraction <= 1.0)) bad("link_fraction must lie in [0, 1]");
  if (!(c.negative_host_fraction >= 0.0 && c.negative_host_fraction <= 1.0))
    bad("negative_host_fraction must lie in [0, 1]");
  if (!(c.embed_day_rate > 0.0 && c.embed_day_rate <= 1.0)) bad("embed_day_rate must lie in (0, 1]");
  const auto& b = c.base_interest;
  if (!(b.scale >= 0.0) || !(b.log_sd >= 0.0) || !(b.decay_min > 0.0) || !(b.decay_min <= b.decay_max) ||
      !(b.decay_max <= 1.0))
    bad("base_interest parameters out of range");
  if (!(c.host_zipf >= 0.0) || !(c.influence_scale >= 0.0) || !(c.link_influence_scale >= 0.0) ||
      !(c.show_rate >= 0.0) || !(c.browse_rate >= 0.0))
    bad("rates must be non-negative");
}

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"n_videos", c.n_videos},
                     {"n_hosts", c.n_hosts},
                     {"power_law_alpha", c.power_law_alpha},
                     {"L_true", c.L_true},
                     {"base_interest",
                      {{"scale", c.base_interest.scale},
                       {"log_sd", c.base_interest.log_sd},
                       {"decay_min", c.base_interest.decay_min},
                       {"decay_max", c.base_interest.decay_max}}},
                     {"noise_sigma", c.noise_sigma},
                     {"missing_history_fraction", c.missing_history_fraction},
                     {"horizon_days", c.horizon_days},
                     {"embed_fraction", c.embed_fraction},
                     {"link_fraction", c.link_fraction},
                     {"link_alpha", c.link_alpha},
                     {"host_zipf", c.host_zipf},
                     {"negative_host_fraction", c.negative_host_fraction},
                     {"influence_scale", c.influence_scale},
                     {"link_influence_scale", c.link_influence_scale},
                     {"embed_day_rate", c.embed_day_rate},
                     {"max_web_events_per_video", c.max_web_events_per_video},
                     {"pages_per_host", c.pages_per_host},
                     {"n_categories", c.n_categories},
                     {"show_rate", c.show_rate},
                     {"browse_rate", c.browse_rate}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  if (!j.is_object()) throw ConfigurationError("synth config must be a JSON object");
  static const char* known[] = {"seed", "n_videos", "n_hosts", "power_law_alpha", "L_true", "base_interest",
                                "noise_sigma", "missing_history_fraction", "horizon_days", "embed_fraction",
                                "link_fraction", "link_alpha", "host_zipf", "negative_host_fraction",
                                "influence_scale", "link_influence_scale", "embed_day_rate",
                                "max_web_events_per_video", "pages_per_host", "n_categories", "show_rate",
                                "browse_rate"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known))
      throw ConfigurationError("unknown synth config key '" + key + "'");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("seed", c.seed);
  get("n_videos", c.n_videos);
  get("n_hosts", c.n_hosts);
  get("power_law_alpha", c.power_law_alpha);
  get("L_true", c.L_true);
  if (j.contains("base_interest")) {
    const auto& b = j.at("base_interest");
    if (b.contains("scale")) b.at("scale").get_to(c.base_interest.scale);
    if (b.contains("log_sd")) b.at("log_sd").get_to(c.base_interest.log_sd);
    if (b.contains("decay_min")) b.at("decay_min").get_to(c.base_interest.decay_min);
    if (b.contains("decay_max")) b.at("decay_max").get_to(c.base_interest.decay_max);
  }
  get("noise_sigma", c.noise_sigma);
  get("missing_history_fraction", c.missing_history_fraction);
  get("horizon_days", c.horizon_days);
  get("embed_fraction", c.embed_fraction);
  get("link_fraction", c.link_fraction);
  get("link_alpha", c.link_alpha);
  get("host_zipf", c.host_zipf);
  get("negative_host_fraction", c.negative_host_fraction);
  get("influence_scale", c.influence_scale);
  get("link_influence_scale", c.link_influence_scale);
  get("embed_day_rate", c.embed_day_rate);
  get("max_web_events_per_video", c.max_web_events_per_video);
  get("pages_per_host", c.pages_per_host);
  get("n_categories", c.n_categories);
  get("show_rate", c.show_rate);
  get("browse_rate", c.browse_rate);
}

struct GroundTruth {
  std::vector<std::string> hosts;                 // host ids, most popular first
  std::vector<std::vector<double>> embed_influence;  // [host][lag], lag < L_true
  std::vector<std::vector<double>> link_influence;
  std::vector<std::vector<double>> intrinsic;     // [video][day]
  std::vector<std::vector<std::int64_t>> daily_views;  // [video][day], including missing-history videos
};

/// Discrete power law P(k) proportional to k^-a on k >= 1 (Devroye's rejection sampler).
class ZetaDistribution {
public:
  explicit ZetaDistribution(double a) : a_(a), b_(std::pow(2.0, a - 1.0)) {
    if (!(a > 1.0)) throw DomainError("zeta exponent must exceed 1");
  }

  template <typename Rng>
  std::int64_t operator()(Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    constexpr double kMax = 9.0e15;
    for (;;) {
      double u = 1.0 - unif(rng);  // (0, 1]
      double v = unif(rng);
      double x = std::floor(std::pow(u, -1.0 / (a_ - 1.0)));
      if (!(x < kMax)) continue;
      double t = std::pow(1.0 + 1.0 / x, a_ - 1.0);
      if (v * x * (t - 1.0) / (b_ - 1.0) <= t / b_) return static_cast<std::int64_t>(x);
    }
  }

private:
  double a_, b_;
};

namespace detail {

// Hurwitz zeta sum_{k>=0} (k + q)^-s for s > 1, q >= 1 via Euler-Maclaurin.
inline double hurwitz_zeta(double s, double q) {
  constexpr int kDirect = 12;
  double sum = 0.0;
  for (int k = 0; k < kDirect; ++k) sum += std::pow(q + k, -s);
  const double n = q + kDirect;
  sum += std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s);
  // Bernoulli corrections B_{2j}/(2j)! * s(s+1)...(s+2j-2) * n^{-s-2j+1}
  static constexpr double b2j[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730};
  double rising = s;       // s (s+1) ... (s + 2j - 2)
  double fact = 2.0;       // (2j)!
  double npow = std::pow(n, -s - 1.0);
  for (int j = 1; j <= 6; ++j) {
    sum += b2j[j - 1] / fact * rising * npow;
    rising *= (s + 2 * j - 1) * (s + 2 * j);
    fact *= (2.0 * j + 1) * (2.0 * j + 2);
    npow /= n * n;
  }
  return sum;
}

}  // namespace detail

/// Discrete maximum-likelihood power-law exponent for the counts >= x_min.
inline double fit_power_law_exponent(std::span<const std::int64_t> counts, std::int64_t x_min = 1) {
  if (x_min < 1) throw DomainError("x_min must be >= 1");
  std::size_t n = 0;
  double sum_log = 0.0;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
  for (auto c : counts) {
    if (c < x_min) continue;
    ++n;
    sum_log += std::log(static_cast<double>(c));
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (n < 100) throw SampleSizeError("power-law fit needs at least 100 counts >= x_min, got " + std::to_string(n));
  if (lo == hi) throw DegenerateError("power-law fit is degenerate: all counts are equal");

  const double q = static_cast<double>(x_min);
  auto nll = [&](double a) { return static_cast<double>(n) * std::log(detail::hurwitz_zeta(a, q)) + a * sum_log; };

  // the log-likelihood is concave in a; golden-section search
  double a = 1.0 + 1e-6, b = 30.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = nll(x1), f2 = nll(x2);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = nll(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = nll(x2);
    }
  }
  double est = 0.5 * (a + b);
  if (est > 29.9 || est < 1.0 + 1e-4) throw DegenerateError("power-law fit diverged to the search boundary");
  return est;
}

namespace detail {

struct AuthorProfile {
  AuthorMeta meta;
  double popularity = 1.0;
};

inline std::string padded(char prefix, long long i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

template <typename Rng>
std::int64_t poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

template <typename Rng>
std::int64_t binomial(Rng& rng, std::int64_t n, double p) {
  if (n <= 0 || !(p > 0.0)) return 0;
  return std::binomial_distribution<std::int64_t>(n, std::min(p, 1.0))(rng);
}

enum Stream : std::uint64_t { kVideoStream = 1, kHostStream = 2, kAuthorStream = 3, kGlobalStream = 4 };

}  // namespace detail

struct SynthResult {
  Corpus corpus;
  GroundTruth truth;
};

inline SynthResult generate_corpus(const SynthConfig& cfg) {
  validate(cfg);
  using Rng = std::mt19937_64;
  const int M = cfg.horizon_days;
  const int L = cfg.L_true;

  GroundTruth truth;
  truth.hosts.reserve(static_cast<std::size_t>(cfg.n_hosts));
  const int host_width = std::max(5, static_cast<int>(std::to_string(cfg.n_hosts).size()));
  for (int h = 0; h < cfg.n_hosts; ++h) truth.hosts.push_back(detail::padded('h', h, host_width));

  auto influence = [&](Rng& rng, double scale, bool negative) {
    std::lognormal_distribution<double> amp(std::log(std::max(scale, 1e-300)), 0.8);
    std::uniform_real_distribution<double> ratio(0.5, 0.9);
    double a = scale > 0.0 ? amp(rng) : 0.0;
    double r = ratio(rng);
    std::vector<double> f(static_cast<std::size_t>(L));
    for (int lag = 0; lag < L; ++lag) {
      double v = std::round(a * std::pow(r, lag));
      f[static_cast<std::size_t>(lag)] = negative ? -std::round(0.3 * v) : v;
    }
    return f;
  };
  for (int h = 0; h < cfg.n_hosts; ++h) {
    Rng rng(substream_seed(cfg.seed, detail::kHostStream, static_cast<std::uint64_t>(h)));
    bool negative = std::bernoulli_distribution(cfg.negative_host_fraction)(rng);
    truth.embed_influence.push_back(influence(rng, cfg.influence_scale, negative));
    truth.link_influence.push_back(influence(rng, cfg.link_influence_scale, negative));
  }

  std::vector<double> host_weights(static_cast<std::size_t>(cfg.n_hosts));
  for (int h = 0; h < cfg.n_hosts; ++h) host_weights[static_cast<std::size_t>(h)] = std::pow(h + 1.0, -cfg.host_zipf);

  std::vector<double> category_factor(static_cast<std::size_t>(cfg.n_categories));
  {
    Rng rng(substream_seed(cfg.seed, detail::kGlobalStream, 0));
    std::normal_distribution<double> n01(0.0, 0.35);
    for (auto& f : category_factor) f = std::exp(n01(rng));
  }

  const int n_authors = std::max(1, cfg.n_videos / 4);
  const int author_width = std::max(6, static_cast<int>(std::to_string(n_authors).size()));
  std::vector<detail::AuthorProfile> authors(static_cast<std::size_t>(n_authors));
  for (int a = 0; a < n_authors; ++a) {
    Rng rng(substream_seed(cfg.seed, detail::kAuthorStream, static_cast<std::uint64_t>(a)));
    std::normal_distribution<double> n01(0.0, 1.0);
    auto& p = authors[static_cast<std::size_t>(a)];
    double fame = n01(rng);
    p.meta.subscriber_count = static_cast<std::int64_t>(std::floor(std::exp(4.0 + 1.8 * fame + 0.5 * n01(rng))));
    p.meta.friend_count = static_cast<std::int64_t>(std::floor(std::exp(2.5 + 0.8 * fame + 0.8 * n01(rng))));
    p.meta.author_age_days = std::uniform_int_distribution<std::int64_t>(0, 3000)(rng);
    p.meta.upload_count = 1 + detail::poisson(rng, 5.0 + std::exp(2.0 + 0.6 * fame));
    p.popularity = std::exp(0.45 * fame);
    p.meta.view_sum_s = static_cast<std::int64_t>(
        std::floor(p.popularity * static_cast<double>(p.meta.upload_count) * 180.0 * std::exp(3.0 + 0.5 * n01(rng))));
  }

  const int video_width = std::max(7, static_cast<int>(std::to_string(cfg.n_videos).size()));
  CorpusBuilder builder{TimeGrid(M)};
  std::discrete_distribution<int> pick_host(host_weights.begin(), host_weights.end());
  ZetaDistribution embed_count(cfg.power_law_alpha);
  ZetaDistribution link_count(cfg.link_alpha);

  truth.intrinsic.resize(static_cast<std::size_t>(cfg.n_videos));
  truth.daily_views.resize(static_cast<std::size_t>(cfg.n_videos));

  for (int i = 0; i < cfg.n_videos; ++i) {
    Rng rng(substream_seed(cfg.seed, detail::kVideoStream, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    const std::string id = detail::padded('v', i, video_width);

    const int author_idx = std::uniform_int_distribution<int>(0, n_authors - 1)(rng);
    const auto& author = authors[static_cast<std::size_t>(author_idx)];
    VideoMeta meta;
    meta.duration_s = 1 + static_cast<std::int64_t>(std::floor(std::exp(5.3 + 0.9 * n01(rng))));
    meta.category = std::uniform_int_distribution<std::int64_t>(0, cfg.n_categories - 1)(rng);
    meta.title_len = std::uniform_int_distribution<std::int64_t>(5, 100)(rng);
    meta.desc_len = detail::poisson(rng, std::exp(4.0 + 1.2 * n01(rng)));
    meta.upload_dow = std::uniform_int_distribution<int>(0, 6)(rng);
    meta.upload_hour = std::floor(unif(rng) * 24.0 * 3600.0) / 3600.0;
    meta.author = detail::padded('a', author_idx, author_width);

    // intrinsic interest: lognormal level scaled by author and category, geometric decay
    const double quality = 0.5 + unif(rng);
    const double level = cfg.base_interest.scale * std::exp(cfg.base_interest.log_sd * n01(rng)) *
                         author.popularity * category_factor[static_cast<std::size_t>(meta.category)] *
                         (meta.upload_dow >= 5 ? 1.15 : 1.0) * std::sqrt(quality);
    const double decay = cfg.base_interest.decay_min +
                         (cfg.base_interest.decay_max - cfg.base_interest.decay_min) * unif(rng);
    auto& intrinsic = truth.intrinsic[static_cast<std::size_t>(i)];
    intrinsic.resize(static_cast<std::size_t>(M));
    for (int d = 0; d < M; ++d) intrinsic[static_cast<std::size_t>(d)] = level * std::pow(decay, d);

    // web infections
    auto draw_day = [&] {
      std::geometric_distribution<int> geo(cfg.embed_day_rate);
      for (;;) {
        int d = geo(rng);
        if (d < M) return d;
      }
    };
    struct Infection {
      int day;
      int host;
      int page;
    };
    auto draw_infections = [&](double fraction, ZetaDistribution& counts) {
      std::vector<Infection> out;
      if (!std::bernoulli_distribution(fraction)(rng)) return out;
      auto k = std::min<std::int64_t>(counts(rng), cfg.max_web_events_per_video);
      out.reserve(static_cast<std::size_t>(k));
      for (std::int64_t j = 0; j < k; ++j) {
        int day = draw_day();
        int host = pick_host(rng);
        int page = std::uniform_int_distribution<int>(0, cfg.pages_per_host - 1)(rng);
        out.push_back({day, host, page});
      }
      return out;
    };
    const auto embeds = draw_infections(cfg.embed_fraction, embed_count);
    const auto links = draw_infections(cfg.link_fraction, link_count);

    std::vector<double> signal(intrinsic);
    auto add_influence = [&](const std::vector<Infection>& infs, const std::vector<std::vector<double>>& table) {
      for (const auto& inf : infs) {
        const auto& f = table[static_cast<std::size_t>(inf.host)];
        for (int lag = 0; lag < L && inf.day + lag < M; ++lag)
          signal[static_cast<std::size_t>(inf.day + lag)] += f[static_cast<std::size_t>(lag)];
      }
    };
    add_influence(embeds, truth.embed_influence);
    add_influence(links, truth.link_influence);

    auto& views = truth.daily_views[static_cast<std::size_t>(i)];
    views.resize(static_cast<std::size_t>(M));
    for (int d = 0; d < M; ++d) {
      double x = signal[static_cast<std::size_t>(d)];
      if (cfg.noise_sigma > 0.0) x += cfg.noise_sigma * n01(rng);
      views[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::llround(std::max(0.0, x)));
    }

    const bool missing = cfg.missing_history_fraction > 0.0 &&
                         std::bernoulli_distribution(cfg.missing_history_fraction)(rng);

    builder.add(Event{EventKind::VideoMeta, id, 0, meta});
    builder.add(Event{EventKind::AuthorMeta, id, 0, author.meta});
    if (!missing)
      for (int d = 0; d < M; ++d)
        builder.add(Event{EventKind::ViewsDay, id, d, ViewsDay{views[static_cast<std::size_t>(d)]}});

    // hosting-API counters: binomial thinning of daily views
    const double p_like = 0.02 * quality, p_dislike = 0.003 * (2.0 - quality), p_comment = 0.004,
                 p_rating = 0.01;
    const double mean_rating = 1.5 + 2.0 * quality;
    ApiSnapshot snap;
    double rating_sum = 0.0;
    std::int64_t last_update = 0;
    for (int t = 0; t <= M; ++t) {
      if (t > 0) {
        const auto v = views[static_cast<std::size_t>(t - 1)];
        snap.like_count += detail::binomial(rng, v, p_like);
        snap.dislike_count += detail::binomial(rng, v, p_dislike);
        snap.comment_count += detail::binomial(rng, v, p_comment);
        const auto new_ratings = detail::binomial(rng, v, p_rating);
        if (new_ratings > 0) {
          const std::int64_t sampled = std::min<std::int64_t>(new_ratings, 32);
          double s = 0.0;
          int lo = 5, hi = 1;
          for (std::int64_t r = 0; r < sampled; ++r) {
            int rating = static_cast<int>(std::clamp(std::lround(mean_rating + n01(rng)), 1l, 5l));
            s += rating;
            lo = std::min(lo, rating);
            hi = std::max(hi, rating);
          }
          rating_sum += s * static_cast<double>(new_ratings) / static_cast<double>(sampled);
          if (snap.rating_count == 0) {
            snap.min_rating = lo;
            snap.max_rating = hi;
          } else {
            snap.min_rating = std::min(snap.min_rating, lo);
            snap.max_rating = std::max(snap.max_rating, hi);
          }
          snap.rating_count += new_ratings;
          double avg = std::round(rating_sum / static_cast<double>(snap.rating_count) * 1e4) / 1e4;
          snap.avg_rating = std::clamp(avg, static_cast<double>(snap.min_rating), static_cast<double>(snap.max_rating));
        }
        if (unif(rng) < 0.05) last_update = t - 1;
      }
      snap.days_since_update = t - last_update;
      builder.add(Event{EventKind::ApiSnapshot, id, t, snap});
    }

    // search shows track next-day views; clicks thin shows with a few unmatched clicks
    const double ctr = 0.05 + 0.3 * unif(rng);
    for (int d = 0; d < M; ++d) {
      const auto next = views[static_cast<std::size_t>(std::min(d + 1, M - 1))];
      const auto shows = detail::poisson(rng, cfg.show_rate * static_cast<double>(next));
      const auto clicks = detail::binomial(rng, shows, ctr) + detail::poisson(rng, 0.02);
      const auto visits = detail::poisson(rng, cfg.browse_rate * static_cast<double>(views[static_cast<std::size_t>(d)]));
      if (shows) builder.add(Event{EventKind::SearchShow, id, d, LogCount{shows}});
      if (clicks) builder.add(Event{EventKind::SearchClick, id, d, LogCount{clicks}});
      if (visits) builder.add(Event{EventKind::BrowseVisit, id, d, LogCount{visits}});
    }

    auto emit_web = [&](EventKind kind, const std::vector<Infection>& infs, char page_prefix) {
      for (const auto& inf : infs) {
        const auto& host = truth.hosts[static_cast<std::size_t>(inf.host)];
        std::string page = host + "/" + page_prefix + std::to_string(inf.page);
        builder.add(Event{kind, id, inf.day, WebEvent{host, std::move(page), 1}});
      }
    };
    emit_web(EventKind::Embed, embeds, 'e');
    emit_web(EventKind::Link, links, 'l');
  }

  return {std::move(builder).finish(), std::move(truth)};
}

}  // namespace viewcast
