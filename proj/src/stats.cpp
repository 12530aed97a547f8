#include "tcprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "tcprobe/errors.hpp"
#include "tcprobe/rng.hpp"

namespace tcprobe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view method_name(BootstrapMethod m) {
  return m == BootstrapMethod::bca ? "BCa" : "percentile-paired";
}

// Linear interpolation between order statistics (type 7).
double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return kNaN;
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> draw_groups(std::size_t n_groups, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> draw(n_groups);
  for (auto& g : draw) g = static_cast<std::size_t>(rng.index(n_groups));
  return draw;
}

double safe_eval(const GroupStatistic& statistic, std::span<const std::size_t> groups) {
  try {
    return statistic(groups);
  } catch (const SingleClassError&) {
    return kNaN;
  }
}

std::vector<double> bootstrap_values(std::size_t n_groups, const GroupStatistic& statistic, std::size_t n_resamples,
                                     std::uint64_t seed, const Exec& exec) {
  std::vector<double> values(n_resamples, kNaN);
  parallel_for(n_resamples, exec, [&](std::size_t b) {
    const auto draw = draw_groups(n_groups, derive_seed(seed, b));
    values[b] = safe_eval(statistic, draw);
  });
  return values;
}

std::vector<double> finite_sorted(const std::vector<double>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool all_equal(std::span<const double> sorted, double reference) {
  if (sorted.empty()) return true;
  const double tol = 1e-12 * std::max(1.0, std::abs(reference));
  return sorted.back() - sorted.front() <= tol && std::abs(sorted.front() - reference) <= tol;
}

void check_groups(std::size_t n_groups) {
  if (n_groups < 2) throw ValidationError("bootstrap: need at least 2 groups, got " + std::to_string(n_groups));
}

}  // namespace

double normal_cdf(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

// ---------------------------------------------------------------------------
// Ranks and AUROC
// ---------------------------------------------------------------------------

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t e = k + 1;
    while (e < n && values[order[e]] == values[order[k]]) ++e;
    // positions k..e-1 hold ranks k+1..e
    const double r = 0.5 * static_cast<double>(k + 1 + e);
    for (std::size_t t = k; t < e; ++t) ranks[order[t]] = r;
    k = e;
  }
  return ranks;
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ValidationError("auroc: scores and labels differ in length");
  std::size_t n1 = 0;
  for (auto l : labels) n1 += l ? 1 : 0;
  const std::size_t n0 = labels.size() - n1;
  if (n1 == 0 || n0 == 0) throw SingleClassError("auroc: labels contain a single class");
  const auto ranks = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (labels[k]) rank_sum += ranks[k];
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman_rho: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return kNaN;
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (rx[k] - mean) * (ry[k] - mean);
    sxx += (rx[k] - mean) * (rx[k] - mean);
    syy += (ry[k] - mean) * (ry[k] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

Json BootstrapResult::to_json() const {
  Json j = Json::object();
  j["point"] = point;
  j["lo"] = lo;
  j["hi"] = hi;
  j["n_resamples"] = n_resamples;
  j["n_valid"] = n_valid;
  j["method"] = method_name(method);
  j["resample_unit"] = resample_unit;
  j["degenerate"] = degenerate;
  if (method == BootstrapMethod::bca) {
    j["z0"] = z0;
    j["acceleration"] = acceleration;
  }
  return j;
}

BootstrapResult bca_ci(std::size_t n_groups, const GroupStatistic& statistic, std::size_t n_resamples,
                       std::uint64_t seed, const Exec& exec, double level) {
  check_groups(n_groups);
  if (n_resamples == 0) throw ValidationError("bca_ci: n_resamples must be positive");
  BootstrapResult r;
  r.method = BootstrapMethod::bca;
  r.n_resamples = n_resamples;
  std::vector<std::size_t> all(n_groups);
  std::iota(all.begin(), all.end(), std::size_t{0});
  r.point = statistic(all);
  r.resamples = bootstrap_values(n_groups, statistic, n_resamples, seed, exec);
  const auto sorted = finite_sorted(r.resamples);
  r.n_valid = sorted.size();
  if (sorted.empty() || all_equal(sorted, r.point)) {
    r.degenerate = true;
    r.lo = r.hi = r.point;
    return r;
  }

  const double b = static_cast<double>(sorted.size());
  const auto below = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), r.point) - sorted.begin());
  const auto not_above = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), r.point) - sorted.begin());
  const double prop = std::clamp((below + not_above) / (2.0 * b), 0.5 / b, 1.0 - 0.5 / b);
  r.z0 = normal_quantile(prop);

  std::vector<double> jack(n_groups, kNaN);
  parallel_for(n_groups, exec, [&](std::size_t leave) {
    std::vector<std::size_t> subset;
    subset.reserve(n_groups - 1);
    for (std::size_t g = 0; g < n_groups; ++g) {
      if (g != leave) subset.push_back(g);
    }
    jack[leave] = safe_eval(statistic, subset);
  });
  double jack_mean = 0.0;
  std::size_t jack_n = 0;
  for (double v : jack) {
    if (std::isfinite(v)) {
      jack_mean += v;
      ++jack_n;
    }
  }
  if (jack_n > 0) {
    jack_mean /= static_cast<double>(jack_n);
    double num = 0.0, den = 0.0;
    for (double v : jack) {
      if (!std::isfinite(v)) continue;
      const double dv = jack_mean - v;
      num += dv * dv * dv;
      den += dv * dv;
    }
    if (den > 0.0) r.acceleration = num / (6.0 * std::pow(den, 1.5));
  }

  const double alpha = 0.5 * (1.0 - level);
  auto adjusted = [&](double q) {
    const double zq = normal_quantile(q);
    const double shifted = r.z0 + zq;
    return normal_cdf(r.z0 + shifted / (1.0 - r.acceleration * shifted));
  };
  r.lo = quantile_sorted(sorted, adjusted(alpha));
  r.hi = quantile_sorted(sorted, adjusted(1.0 - alpha));
  // The adjusted quantiles can skip past the point on skewed draws.
  r.lo = std::min(r.lo, r.point);
  r.hi = std::max(r.hi, r.point);
  return r;
}

BootstrapResult percentile_ci(std::size_t n_groups, const GroupStatistic& statistic, std::size_t n_resamples,
                              std::uint64_t seed, const Exec& exec, double level) {
  check_groups(n_groups);
  BootstrapResult r;
  r.method = BootstrapMethod::percentile_paired;
  r.n_resamples = n_resamples;
  std::vector<std::size_t> all(n_groups);
  std::iota(all.begin(), all.end(), std::size_t{0});
  r.point = statistic(all);
  r.resamples = bootstrap_values(n_groups, statistic, n_resamples, seed, exec);
  const auto sorted = finite_sorted(r.resamples);
  r.n_valid = sorted.size();
  if (sorted.empty() || all_equal(sorted, r.point)) {
    r.degenerate = true;
    r.lo = r.hi = r.point;
    return r;
  }
  const double alpha = 0.5 * (1.0 - level);
  r.lo = quantile_sorted(sorted, alpha);
  r.hi = quantile_sorted(sorted, 1.0 - alpha);
  return r;
}

std::vector<std::vector<std::size_t>> rows_by_group(std::span<const std::size_t> group_of_row) {
  std::size_t n_groups = 0;
  for (auto g : group_of_row) n_groups = std::max(n_groups, g + 1);
  std::vector<std::vector<std::size_t>> out(n_groups);
  for (std::size_t r = 0; r < group_of_row.size(); ++r) out[group_of_row[r]].push_back(r);
  return out;
}

double grouped_auroc(std::span<const double> scores, std::span<const std::uint8_t> labels,
                     const std::vector<std::vector<std::size_t>>& rows_of_group,
                     std::span<const std::size_t> groups) {
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (auto g : groups) {
    for (auto r : rows_of_group[g]) {
      s.push_back(scores[r]);
      l.push_back(labels[r]);
    }
  }
  std::size_t n1 = 0;
  for (auto v : l) n1 += v ? 1 : 0;
  if (n1 == 0 || n1 == l.size()) return kNaN;
  return auroc(s, l);
}

Json PairedDelta::to_json() const {
  Json j = delta.to_json();
  j["auroc_a"] = auroc_a;
  j["auroc_b"] = auroc_b;
  j["p_delta_le_0"] = p_delta_le_0;
  j["count_delta_le_0"] = count_delta_le_0;
  return j;
}

PairedDelta paired_bootstrap_delta(std::span<const double> scores_a, std::span<const double> scores_b,
                                   std::span<const std::uint8_t> labels, std::span<const std::size_t> group_of_row,
                                   std::size_t n_resamples, std::uint64_t seed, const Exec& exec) {
  if (scores_a.size() != labels.size() || scores_b.size() != labels.size() || group_of_row.size() != labels.size()) {
    throw ValidationError("paired_bootstrap_delta: systems cover different rows or groups");
  }
  const auto groups = rows_by_group(group_of_row);
  check_groups(groups.size());
  PairedDelta out;
  out.auroc_a = auroc(scores_a, labels);
  out.auroc_b = auroc(scores_b, labels);
  const GroupStatistic stat = [&](std::span<const std::size_t> draw) {
    return grouped_auroc(scores_a, labels, groups, draw) - grouped_auroc(scores_b, labels, groups, draw);
  };
  out.delta = percentile_ci(groups.size(), stat, n_resamples, seed, exec);
  out.delta.point = out.auroc_a - out.auroc_b;
  for (double v : out.delta.resamples) {
    if (std::isfinite(v) && v <= 0.0) ++out.count_delta_le_0;
  }
  out.p_delta_le_0 = out.delta.n_valid == 0
                         ? 1.0
                         : static_cast<double>(out.count_delta_le_0) / static_cast<double>(out.delta.n_valid);
  return out;
}

// ---------------------------------------------------------------------------
// Permutation control
// ---------------------------------------------------------------------------

Json PermutationNull::to_json() const {
  Json j = Json::object();
  j["observed"] = observed;
  j["n_perms"] = n_perms;
  j["count_ge_observed"] = count_ge;
  j["p_value"] = p_value;
  j["p_smoothed"] = p_smoothed;
  j["null_mean"] = null_mean;
  j["null_max"] = null_max;
  return j;
}

PermutationNull permutation_control(std::span<const std::uint8_t> labels, const LabelPipeline& pipeline,
                                    std::size_t n_perms, std::uint64_t seed, const Exec& exec,
                                    std::optional<double> observed) {
  if (n_perms < 1) throw ValidationError("permutation_control: n_perms must be at least 1");
  PermutationNull out;
  out.n_perms = n_perms;
  out.observed = observed ? *observed : pipeline(labels);
  out.null_values.assign(n_perms, kNaN);
  parallel_for(n_perms, exec, [&](std::size_t p) {
    std::vector<std::uint8_t> shuffled(labels.begin(), labels.end());
    Rng rng(seed + p);
    rng.shuffle(std::span<std::uint8_t>(shuffled));
    out.null_values[p] = pipeline(shuffled);
  });
  double sum = 0.0;
  out.null_max = -std::numeric_limits<double>::infinity();
  for (double v : out.null_values) {
    sum += v;
    out.null_max = std::max(out.null_max, v);
    if (v >= out.observed) ++out.count_ge;
  }
  out.null_mean = sum / static_cast<double>(n_perms);
  out.p_value = static_cast<double>(out.count_ge) / static_cast<double>(n_perms);
  out.p_smoothed = static_cast<double>(out.count_ge + 1) / static_cast<double>(n_perms + 1);
  return out;
}

// ---------------------------------------------------------------------------
// Wilcoxon, Cohen's d, Fisher
// ---------------------------------------------------------------------------

Json WilcoxonResult::to_json() const {
  Json j = Json::object();
  j["w_plus"] = w_plus;
  j["n_used"] = n_used;
  j["n_zero"] = n_zero;
  j["p_greater"] = p_greater;
  j["p_less"] = p_less;
  j["p_two_sided"] = p_two_sided;
  j["exact"] = exact;
  j["degenerate"] = degenerate;
  return j;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs) {
  if (diffs.empty()) throw ValidationError("wilcoxon_signed_rank: no differences");
  WilcoxonResult r;
  std::vector<double> abs_vals;
  std::vector<bool> positive;
  for (double d : diffs) {
    if (d == 0.0) {
      ++r.n_zero;
      continue;
    }
    abs_vals.push_back(std::abs(d));
    positive.push_back(d > 0);
  }
  r.n_used = abs_vals.size();
  if (r.n_used == 0) {
    r.degenerate = true;
    return r;
  }
  const auto ranks = midranks(abs_vals);
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (positive[k]) r.w_plus += ranks[k];
  }
  const std::size_t n = r.n_used;
  if (n <= kWilcoxonExactMax) {
    r.exact = true;
    // Midranks are multiples of 1/2, so doubled ranks are exact integers.
    std::vector<long long> twice(n);
    for (std::size_t k = 0; k < n; ++k) twice[k] = std::llround(2.0 * ranks[k]);
    const long long obs = std::llround(2.0 * r.w_plus);
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t ge = 0, le = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      long long s = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask >> k & 1U) s += twice[k];
      }
      ge += s >= obs ? 1 : 0;
      le += s <= obs ? 1 : 0;
    }
    r.p_greater = static_cast<double>(ge) / static_cast<double>(total);
    r.p_less = static_cast<double>(le) / static_cast<double>(total);
  } else {
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
    std::vector<double> sorted = abs_vals;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < n;) {
      std::size_t e = k + 1;
      while (e < n && sorted[e] == sorted[k]) ++e;
      const double t = static_cast<double>(e - k);
      var -= (t * t * t - t) / 48.0;
      k = e;
    }
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      r.p_greater = 1.0 - normal_cdf((r.w_plus - mean - 0.5) / sd);
      r.p_less = normal_cdf((r.w_plus - mean + 0.5) / sd);
    }
  }
  r.p_two_sided = std::min(1.0, 2.0 * std::min(r.p_greater, r.p_less));
  return r;
}

Json CohensD::to_json() const {
  Json j = Json::object();
  j["d"] = d;
  j["lo"] = lo;
  j["hi"] = hi;
  j["se"] = se;
  j["n"] = n;
  j["defined"] = defined;
  return j;
}

CohensD cohens_d_paired(std::span<const double> diffs) {
  CohensD r;
  r.n = diffs.size();
  if (r.n < 2) return r;
  const double nd = static_cast<double>(r.n);
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : diffs) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return r;
  r.defined = true;
  r.d = mean / sd;
  r.se = std::sqrt(1.0 / nd + r.d * r.d / (2.0 * nd));
  const double z = normal_quantile(0.975);
  r.lo = r.d - z * r.se;
  r.hi = r.d + z * r.se;
  return r;
}

FisherResult fisher_exact_2x2(const std::array<std::array<std::uint64_t, 2>, 2>& t) {
  FisherResult r;
  const std::uint64_t row0 = t[0][0] + t[0][1];
  const std::uint64_t row1 = t[1][0] + t[1][1];
  const std::uint64_t col0 = t[0][0] + t[1][0];
  const std::uint64_t col1 = t[0][1] + t[1][1];
  if (row0 == 0 || row1 == 0 || col0 == 0 || col1 == 0) {
    r.degenerate = true;
    return r;
  }
  const std::uint64_t n = row0 + row1;
  auto log_choose = [](std::uint64_t a, std::uint64_t b) {
    return std::lgamma(static_cast<double>(a) + 1.0) - std::lgamma(static_cast<double>(b) + 1.0) -
           std::lgamma(static_cast<double>(a - b) + 1.0);
  };
  // x = top-left cell; hypergeometric over its feasible range
  const std::uint64_t x_min = col0 > row1 ? col0 - row1 : 0;
  const std::uint64_t x_max = std::min(row0, col0);
  const double log_denom = log_choose(n, col0);
  auto pmf = [&](std::uint64_t x) { return std::exp(log_choose(row0, x) + log_choose(row1, col0 - x) - log_denom); };
  const double p_obs = pmf(t[0][0]);
  double two = 0.0, less = 0.0, greater = 0.0;
  for (std::uint64_t x = x_min; x <= x_max; ++x) {
    const double p = pmf(x);
    if (p <= p_obs * (1.0 + 1e-7)) two += p;
    if (x <= t[0][0]) less += p;
    if (x >= t[0][0]) greater += p;
  }
  r.p_value = std::min(1.0, two);
  r.p_less = std::min(1.0, less);
  r.p_greater = std::min(1.0, greater);
  return r;
}

void write_values_csv(const std::filesystem::path& path, const std::string& header, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << header << '\n';
  out.precision(17);
  for (double v : values) out << v << '\n';
}

}  // namespace tcprobe
