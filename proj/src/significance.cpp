#include "metaeval/significance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "metaeval/parallel.hpp"
#include "metaeval/rng.hpp"

namespace metaeval {
namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Per system pair, the meta contribution of every (row source, column
// source) combination: 0 = both from A, 1 = row A / col B, 2 = row B /
// col A, 3 = both from B. A resampled chimera metric reads combination
// (swap[i] << 1) | swap[j]; its counterpart reads the complement 3 - c.
using ComboTerms = std::array<double, 4>;

struct PairList {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // i < j, row-major
};

PairList make_pairs(std::size_t n) {
  PairList list;
  list.pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) list.pairs.emplace_back(i, j);
  return list;
}

double term_for(Meta meta, double p_h, double p_m) {
  if (meta == Meta::kSpa) return 1.0 - std::abs(p_h - p_m);
  return binarize(p_h) == binarize(p_m) ? 1.0 : 0.0;
}

// Sum over pairs of (term of chimera A) - (term of chimera B) for one swap
// pattern. The observed delta is this same function on the all-keep pattern,
// so exact float ties between resampled and observed deltas are meaningful.
double pattern_delta(const std::vector<ComboTerms>& terms, const PairList& list,
                     const std::vector<char>& swap) {
  double delta = 0.0;
  for (std::size_t q = 0; q < list.pairs.size(); ++q) {
    const auto [i, j] = list.pairs[q];
    const int c = (swap[i] << 1) | swap[j];
    delta += terms[q][c] - terms[q][3 - c];
  }
  return delta;
}

}  // namespace

double perm_inputs_compare(const EvalCache& cache, const std::string& metric_a,
                           const std::string& metric_b, Meta meta,
                           std::size_t resamples, std::uint64_t seed) {
  if (resamples == 0) throw std::invalid_argument("need at least 1 resample");
  auto proj_a = cache.metrics.find(metric_a);
  auto proj_b = cache.metrics.find(metric_b);
  if (proj_a == cache.metrics.end())
    throw std::invalid_argument("unknown metric '" + metric_a + "'");
  if (proj_b == cache.metrics.end())
    throw std::invalid_argument("unknown metric '" + metric_b + "'");

  const PValueMatrix& ph = cache.human_p;
  const PValueMatrix& paa = cache.metric_p.at(metric_a);
  const PValueMatrix& pbb = cache.metric_p.at(metric_b);
  const PValueMatrix pab = cross_pairwise_p_values(proj_a->second, proj_b->second);
  const PValueMatrix pba = cross_pairwise_p_values(proj_b->second, proj_a->second);

  const std::size_t n = ph.p.rows();
  PairList list = make_pairs(n);
  std::vector<ComboTerms> terms(list.pairs.size());
  for (std::size_t q = 0; q < list.pairs.size(); ++q) {
    const auto [i, j] = list.pairs[q];
    const double h = ph.p(i, j);
    terms[q][0] = term_for(meta, h, paa.p(i, j));
    terms[q][1] = term_for(meta, h, pab.p(i, j));
    terms[q][2] = term_for(meta, h, pba.p(i, j));
    terms[q][3] = term_for(meta, h, pbb.p(i, j));
  }

  std::vector<char> swap(n, 0);
  const double observed = pattern_delta(terms, list, swap);

  // Antithetic pairs: each drawn pattern also contributes its complement,
  // whose delta is the exact negation. Mid-p counting on both halves.
  rng::Stream stream(seed, rng::kMetricSwap, fnv1a(metric_a), fnv1a(metric_b));
  const std::size_t half = resamples / 2;
  std::size_t greater = 0, equal = 0;
  auto count = [&](double delta) {
    greater += delta > observed;
    equal += delta == observed;
  };
  for (std::size_t r = 0; r < half; ++r) {
    for (std::size_t i = 0; i < n; ++i) swap[i] = stream.coin(r * n + i) ? 1 : 0;
    const double delta = pattern_delta(terms, list, swap);
    count(delta);
    count(-delta);
  }
  if (resamples % 2 != 0) {
    for (std::size_t i = 0; i < n; ++i) swap[i] = stream.coin(half * n + i) ? 1 : 0;
    count(pattern_delta(terms, list, swap));
  }
  return (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) /
         static_cast<double>(resamples);
}

double perm_inputs_compare(const EvalSet& eval, const std::string& metric_a,
                           const std::string& metric_b, Meta meta,
                           std::size_t resamples, std::uint64_t seed,
                           std::size_t permutations) {
  EvalCache cache = build_eval_cache(eval, seed, permutations);
  return perm_inputs_compare(cache, metric_a, metric_b, meta, resamples, seed);
}

MetricSigMatrix significance_matrix(const EvalSet& eval, Meta meta,
                                    std::size_t resamples, std::uint64_t seed,
                                    std::size_t permutations, int threads) {
  if (eval.metrics.empty()) throw std::invalid_argument("eval set has no metrics");
  EvalCache cache = build_eval_cache(eval, seed, permutations);

  struct Entry {
    std::string name;
    double value;
  };
  std::vector<Entry> entries;
  entries.reserve(eval.metrics.size());
  for (const auto& [name, pv] : cache.metric_p) {
    MetaScore score = meta_score(name, cache.human_p, pv);
    entries.push_back({name, meta == Meta::kSpa ? score.spa : score.pa});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.name < b.name;
  });

  MetricSigMatrix sig;
  for (const auto& e : entries) {
    sig.metric_names.push_back(e.name);
    sig.meta_scores.push_back(e.value);
  }
  const std::size_t m = entries.size();
  sig.pvals = Matrix(m, m, 1.0);

  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(m * (m - 1) / 2);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = r + 1; c < m; ++c) cells.emplace_back(r, c);

  parallel_for(cells.size(), threads, [&](std::size_t t) {
    const auto [r, c] = cells[t];
    const double p = perm_inputs_compare(cache, sig.metric_names[r],
                                         sig.metric_names[c], meta, resamples, seed);
    sig.pvals(r, c) = p;
    sig.pvals(c, r) = 1.0 - p;
  });
  return sig;
}

ClusterAssignment greedy_clusters(const MetricSigMatrix& sig, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must be in (0, 1]");
  const std::size_t m = sig.metric_names.size();
  if (m == 0) throw std::invalid_argument("empty significance matrix");

  ClusterAssignment out;
  out.metric_names = sig.metric_names;
  out.ranks.resize(m);
  out.ranks[0] = 1;
  for (std::size_t k = 1; k < m; ++k) {
    bool separated = false;
    for (std::size_t r = 0; r < k && !separated; ++r)
      separated = sig.pvals(r, k) <= alpha;
    out.ranks[k] = out.ranks[k - 1] + (separated ? 1 : 0);
  }
  out.clusters = out.ranks.back();
  return out;
}

std::size_t significant_comparisons(const MetricSigMatrix& sig, double alpha) {
  const std::size_t m = sig.metric_names.size();
  std::size_t count = 0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = r + 1; c < m; ++c) count += sig.pvals(r, c) <= alpha;
  return count;
}

}  // namespace metaeval
