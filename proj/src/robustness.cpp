#include "metaeval/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metaeval/rng.hpp"

namespace metaeval {
namespace {

bool all_equal(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] != v[0]) return false;
  return true;
}

// Empirical percentile with linear interpolation between order statistics.
double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct MetaValues {
  double spa = 0.0;
  double pa = 0.0;
  double pick(Meta m) const { return m == Meta::kSpa ? spa : pa; }
};

// Meta-scores of one metric against the humans on a shared sign cache,
// straight from raw score tables. Used by the bootstrap, where resampled
// segment sets are not ScoreMatrix-shaped (ids can repeat).
MetaValues meta_values_from_raw(const Matrix& human, const Matrix& metric,
                                const SignMatrix& signs) {
  const PValueMatrix ph = pairwise_p_values(project_systems(human, signs));
  const PValueMatrix pm = pairwise_p_values(project_systems(metric, signs));
  MetaValues v;
  v.spa = spa(ph, pm);
  v.pa = pa(ph, pm);
  return v;
}

}  // namespace

std::optional<double> pearson_r(const std::vector<double>& x,
                                const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("length mismatch");
  if (x.size() < 2) throw std::invalid_argument("need at least 2 points");
  if (all_equal(x) || all_equal(y)) return std::nullopt;

  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  // vx * vy under one sqrt keeps pearson_r(x, x) == v / sqrt(v * v) == 1
  // exactly; sqrt(fl(v * v)) == v holds in round-to-nearest.
  double r = cov / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<CIResult> bootstrap_ci(const EvalSet& eval, const std::string& metric,
                                   const std::vector<Meta>& metas,
                                   const std::vector<std::size_t>& sample_sizes,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t permutations, bool allow_oversample) {
  auto metric_it = eval.metrics.find(metric);
  if (metric_it == eval.metrics.end())
    throw std::invalid_argument("unknown metric '" + metric + "'");
  if (metas.empty()) throw std::invalid_argument("no meta-metric selected");
  if (sample_sizes.empty()) throw std::invalid_argument("no sample sizes given");
  if (trials < 100)
    throw std::invalid_argument("bootstrap needs at least 100 trials");

  const std::size_t s_count = eval.human.segments();
  const std::size_t n = eval.human.systems();
  for (std::size_t m : sample_sizes) {
    if (m == 0) throw std::invalid_argument("sample size 0");
    if (m > s_count && !allow_oversample)
      throw std::invalid_argument(
          "sample size " + std::to_string(m) + " exceeds " +
          std::to_string(s_count) + " segments (oversampling not enabled)");
  }

  const SignMatrix full_signs = generate_sign_matrix(seed, permutations, s_count);
  const MetaValues point =
      meta_values_from_raw(eval.human.scores, metric_it->second.scores, full_signs);

  std::vector<CIResult> results;
  for (std::size_t m : sample_sizes) {
    std::vector<std::vector<double>> replicates(metas.size());
    for (auto& r : replicates) r.reserve(trials);

    Matrix hsub(n, m), msub(n, m);
    for (std::size_t t = 0; t < trials; ++t) {
      rng::Stream seg_stream(seed, rng::kBootstrapSegments, m, t);
      for (std::size_t d = 0; d < m; ++d) {
        const std::size_t col = seg_stream.index(d, static_cast<std::uint32_t>(s_count));
        for (std::size_t i = 0; i < n; ++i) {
          hsub(i, d) = eval.human.scores(i, col);
          msub(i, d) = metric_it->second.scores(i, col);
        }
      }
      // Fresh permutations per replicate, reproducibly derived from
      // (master seed, sample size, trial index).
      const std::uint64_t sign_seed = rng::Stream(seed, rng::kBootstrapSeed, m, t).bits(0);
      const SignMatrix signs = generate_sign_matrix(sign_seed, permutations, m);
      const MetaValues v = meta_values_from_raw(hsub, msub, signs);
      for (std::size_t k = 0; k < metas.size(); ++k)
        replicates[k].push_back(v.pick(metas[k]));
    }

    for (std::size_t k = 0; k < metas.size(); ++k) {
      std::sort(replicates[k].begin(), replicates[k].end());
      CIResult res;
      res.sample_size = m;
      res.meta = metas[k];
      res.lower = percentile(replicates[k], 0.025);
      res.upper = percentile(replicates[k], 0.975);
      res.point = point.pick(metas[k]);
      res.trials = trials;
      results.push_back(res);
    }
  }
  return results;
}

std::vector<CIResult> bootstrap_ci(const EvalSet& eval, const std::string& metric,
                                   Meta meta,
                                   const std::vector<std::size_t>& sample_sizes,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t permutations, bool allow_oversample) {
  return bootstrap_ci(eval, metric, std::vector<Meta>{meta}, sample_sizes, trials,
                      seed, permutations, allow_oversample);
}

std::vector<StabilityResult> system_ablation_stability(
    const EvalSet& eval, const std::vector<Meta>& metas,
    const std::vector<std::size_t>& k_values, std::size_t trials,
    std::uint64_t seed, std::size_t permutations) {
  if (metas.empty()) throw std::invalid_argument("no meta-metric selected");
  if (k_values.empty()) throw std::invalid_argument("no subset sizes given");
  if (trials == 0) throw std::invalid_argument("need at least 1 trial");
  if (eval.metrics.size() < 2)
    throw std::invalid_argument("ablation stability needs at least 2 metrics");

  const std::size_t n = eval.human.systems();
  for (std::size_t k : k_values)
    if (k < 2 || k > n)
      throw std::invalid_argument("subset size " + std::to_string(k) +
                                  " outside [2, " + std::to_string(n) + "]");

  const EvalCache cache = build_eval_cache(eval, seed, permutations);
  const std::size_t metric_count = eval.metrics.size();

  // P-values are pair-local, so restricting to a system subset just selects
  // pair terms from the full breakdown; nothing is recomputed per trial.
  std::vector<std::vector<double>> spa_terms(metric_count), pa_terms(metric_count);
  {
    std::size_t idx = 0;
    for (const auto& [name, pv] : cache.metric_p) {
      const auto rows = pair_breakdown(cache.human_p, pv);
      spa_terms[idx].reserve(rows.size());
      pa_terms[idx].reserve(rows.size());
      for (const auto& row : rows) {
        spa_terms[idx].push_back(row.spa_term);
        pa_terms[idx].push_back(static_cast<double>(row.pa_term));
      }
      ++idx;
    }
  }
  auto pair_index = [n](std::size_t i, std::size_t j) {
    return i * (2 * n - i - 1) / 2 + (j - i - 1);
  };
  auto subset_meta = [&](const std::vector<double>& terms,
                         const std::vector<std::size_t>& subset) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < subset.size(); ++a)
      for (std::size_t b = a + 1; b < subset.size(); ++b) {
        sum += terms[pair_index(subset[a], subset[b])];
        ++pairs;
      }
    return sum / static_cast<double>(pairs);
  };

  std::vector<std::size_t> everyone(n);
  for (std::size_t i = 0; i < n; ++i) everyone[i] = i;
  std::vector<std::vector<double>> full(metas.size(), std::vector<double>(metric_count));
  for (std::size_t mi = 0; mi < metas.size(); ++mi)
    for (std::size_t g = 0; g < metric_count; ++g)
      full[mi][g] = subset_meta(metas[mi] == Meta::kSpa ? spa_terms[g] : pa_terms[g],
                                everyone);

  std::vector<StabilityResult> results;
  for (std::size_t k : k_values) {
    std::vector<double> r_sum(metas.size(), 0.0);
    std::vector<std::size_t> valid(metas.size(), 0), degenerate(metas.size(), 0);
    std::vector<std::size_t> pool(n), subset(k);
    std::vector<double> scores(metric_count);

    for (std::size_t t = 0; t < trials; ++t) {
      // Partial Fisher-Yates draw of k distinct systems.
      rng::Stream stream(seed, rng::kAblationSubset, k, t);
      for (std::size_t i = 0; i < n; ++i) pool[i] = i;
      for (std::size_t step = 0; step < k; ++step) {
        const std::size_t pick =
            step + stream.index(step, static_cast<std::uint32_t>(n - step));
        std::swap(pool[step], pool[pick]);
      }
      subset.assign(pool.begin(), pool.begin() + k);
      std::sort(subset.begin(), subset.end());

      for (std::size_t mi = 0; mi < metas.size(); ++mi) {
        for (std::size_t g = 0; g < metric_count; ++g)
          scores[g] = subset_meta(
              metas[mi] == Meta::kSpa ? spa_terms[g] : pa_terms[g], subset);
        const auto r = pearson_r(scores, full[mi]);
        if (r) {
          r_sum[mi] += *r;
          ++valid[mi];
        } else {
          ++degenerate[mi];
        }
      }
    }

    for (std::size_t mi = 0; mi < metas.size(); ++mi) {
      StabilityResult res;
      res.systems_kept = k;
      res.meta = metas[mi];
      res.trials = trials;
      res.degenerate_trials = degenerate[mi];
      if (valid[mi] > 0) res.mean_r = r_sum[mi] / static_cast<double>(valid[mi]);
      results.push_back(res);
    }
  }
  return results;
}

StabilityResult system_ablation_stability(const EvalSet& eval, Meta meta,
                                          std::size_t systems_kept,
                                          std::size_t trials, std::uint64_t seed,
                                          std::size_t permutations) {
  return system_ablation_stability(eval, std::vector<Meta>{meta},
                                   std::vector<std::size_t>{systems_kept}, trials,
                                   seed, permutations)
      .front();
}

}  // namespace metaeval
