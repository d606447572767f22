#pragma once

// Error and ranking metrics, random three-way splits and the paired t-test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "viewcast/core.hpp"
#include "viewcast/errors.hpp"

namespace viewcast {

inline double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw ContractError("rmse: length mismatch");
  if (pred.empty()) throw ContractError("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - actual[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size()));
}

inline double nrmse(double rmse_value, double baseline_rmse) {
  if (!(baseline_rmse > 0.0)) throw DegenerateError("baseline RMSE must be positive for normalisation");
  return rmse_value / baseline_rmse;
}

/// Mean over target days 1..14; every day must be present.
inline double anrmse(const std::map<int, double>& nrmse_by_day) {
  for (int d = 1; d <= kMaxTargetDay; ++d)
    if (!nrmse_by_day.contains(d)) throw CoverageError("AnRMSE: missing target day " + std::to_string(d));
  if (nrmse_by_day.size() != static_cast<std::size_t>(kMaxTargetDay))
    throw CoverageError("AnRMSE: target days outside 1..14");
  double s = 0.0;
  for (const auto& [_, v] : nrmse_by_day) s += v;
  return s / kMaxTargetDay;
}

inline double anrmse(std::span<const double> nrmse_days_1_to_14) {
  if (nrmse_days_1_to_14.size() != static_cast<std::size_t>(kMaxTargetDay))
    throw CoverageError("AnRMSE needs exactly 14 daily values");
  double s = 0.0;
  for (double v : nrmse_days_1_to_14) s += v;
  return s / kMaxTargetDay;
}

struct NdcgOptions {
  std::size_t k = 100;
  bool gain_times_target = false;  // multiply 1/(pos+1) by the target value
};

/// Indices sorted by value descending, ties by id ascending.
inline std::vector<std::size_t> rank_by(std::span<const double> values, std::span<const std::string> ids) {
  if (values.size() != ids.size()) throw ContractError("ranking: ids and values differ in length");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return ids[a] < ids[b];
  });
  return idx;
}

/// NDCG@k where a video's gain is 1/(pos+1) for its 0-based position in the
/// ideal ranking (by actual target) when pos < k, else 0; discount log2(i+1)
/// for 1-based predicted rank i.
inline double ndcg_at(std::span<const double> pred_scores, std::span<const double> actual,
                      std::span<const std::string> ids, const NdcgOptions& opt = {}) {
  if (pred_scores.size() != actual.size() || actual.size() != ids.size())
    throw ContractError("ndcg: length mismatch");
  if (actual.empty()) throw ContractError("ndcg: no videos");
  const auto ideal = rank_by(actual, ids);
  std::vector<double> gain(actual.size(), 0.0);
  const std::size_t k = std::min(opt.k, actual.size());
  for (std::size_t pos = 0; pos < k; ++pos) {
    double g = 1.0 / static_cast<double>(pos + 1);
    if (opt.gain_times_target) g *= actual[ideal[pos]];
    gain[ideal[pos]] = g;
  }
  const auto predicted = rank_by(pred_scores, ids);
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double disc = std::log2(static_cast<double>(i) + 2.0);
    dcg += gain[predicted[i]] / disc;
    idcg += gain[ideal[i]] / disc;
  }
  if (idcg == 0.0) return 1.0;  // only reachable with gain_times_target and all-zero targets
  return dcg / idcg;
}

inline double ndcg100(std::span<const double> pred_scores, std::span<const double> actual,
                      std::span<const std::string> ids, bool gain_times_target = false) {
  return ndcg_at(pred_scores, actual, ids, {100, gain_times_target});
}

struct SplitPlan {
  std::uint64_t seed = 42;
  int repeats = 20;

  void validate() const {
    if (repeats < 1) throw ConfigurationError("split plan needs repeats >= 1");
  }
};

/// Positions into the input list. The first third is the test part, the
/// second training, the third validation; remainders go to the earlier parts.
struct Split {
  std::vector<std::size_t> test, train, validation;
};

inline Split split_indices(std::size_t n, const SplitPlan& plan, int repeat_index) {
  plan.validate();
  if (repeat_index < 0 || repeat_index >= plan.repeats) throw RangeError("repeat index outside the split plan");
  if (n < 3) throw SizeError("a three-way split needs at least 3 videos");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(substream_seed(plan.seed, 0x53504c54, static_cast<std::uint64_t>(repeat_index)));
  for (std::size_t i = n - 1; i > 0; --i) {
    // plain modulo rather than uniform_int_distribution: the latter is not
    // specified exactly, so splits would differ between standard libraries
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(perm[i], perm[j]);
  }
  const std::size_t base = n / 3, rem = n % 3;
  const std::size_t n_test = base + (rem > 0), n_train = base + (rem > 1);
  Split s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_train));
  s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_train), perm.end());
  for (auto* part : {&s.test, &s.train, &s.validation}) std::sort(part->begin(), part->end());
  return s;
}

/// Two-sided paired t-test. Exactly equal samples give p = 1; a constant
/// non-zero difference gives p = 0.
inline double paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("paired t-test: length mismatch");
  if (a.size() < 2) throw SampleSizeError("paired t-test needs at least 2 pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) all_zero = false;
    ss += (d - mean) * (d - mean);
  }
  if (all_zero) return 1.0;
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return 0.0;
  const double t = mean / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

struct MetricResult {
  std::string metric;
  std::string row;  // feature set or group label
  std::string target;
  std::string t_c;  // empty for day-averaged metrics
  std::string t_t;
  std::vector<double> repeat_values;
  double mean = 0.0;
  double rel_pct = 0.0;
  double p_value = 1.0;
};

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw ContractError("mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Fills mean, rel_pct and p_value of `r` against reference repeats.
inline void compare_to_reference(MetricResult& r, std::span<const double> reference) {
  r.mean = mean_of(r.repeat_values);
  const double ref = mean_of(reference);
  r.rel_pct = ref != 0.0 ? 100.0 * (r.mean - ref) / ref : 0.0;
  r.p_value = r.repeat_values.size() >= 2 ? paired_ttest(r.repeat_values, reference) : 1.0;
}

}  // namespace viewcast
