#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaeval/meta_metrics.hpp"
#include "metaeval/perm_engine.hpp"

namespace metaeval {

// One-sided p-value for "metric_a outscores metric_b under `meta` by more
// than chance". For each resample every system independently keeps or swaps
// its two score vectors between the metrics (probability 0.5), both
// meta-scores are recomputed on the shared sign cache, and the p-value is
// the mid-p fraction of resampled deltas reaching the observed delta.
// Resamples are drawn in antithetic pairs (a pattern and its complement), so
// with even R the resampled distribution is exactly symmetric and two
// metrics with bit-identical p-value matrices compare at exactly 0.5.
// Swapping a system's score vector between metrics swaps its projection
// rows, so resampling never touches raw segment scores.
double perm_inputs_compare(const EvalSet& eval, const std::string& metric_a,
                           const std::string& metric_b, Meta meta,
                           std::size_t resamples, std::uint64_t seed,
                           std::size_t permutations = kDefaultPermutations);

// Cached-plumbing variant used when many comparisons share one cache.
double perm_inputs_compare(const EvalCache& cache, const std::string& metric_a,
                           const std::string& metric_b, Meta meta,
                           std::size_t resamples, std::uint64_t seed);

// All-pairs metric significance. Metrics are sorted by meta-score descending
// (ties broken by name); pvals(r, c) for r < c is the one-sided p-value that
// the higher-scoring metric r beats metric c, the lower triangle is the
// exact complement, and the diagonal is fixed at 1.
struct MetricSigMatrix {
  std::vector<std::string> metric_names;
  std::vector<double> meta_scores;  // aligned with metric_names
  Matrix pvals;                     // M x M
};

MetricSigMatrix significance_matrix(const EvalSet& eval, Meta meta,
                                    std::size_t resamples, std::uint64_t seed,
                                    std::size_t permutations = kDefaultPermutations,
                                    int threads = 1);

// Greedy significance clusters over the sorted leaderboard: walking down,
// a metric starts a new cluster iff its p-value against at least one
// already-ranked metric is <= alpha. Ranks start at 1 and are contiguous.
// Note the caveat inherited from the rule itself: two metrics that are not
// significantly different can still land in different clusters.
struct ClusterAssignment {
  std::vector<std::string> metric_names;  // same order as the sig matrix
  std::vector<int> ranks;
  int clusters = 0;
};

ClusterAssignment greedy_clusters(const MetricSigMatrix& sig, double alpha);

// Number of ordered higher-vs-lower comparisons with p <= alpha (at most
// C(M, 2)).
std::size_t significant_comparisons(const MetricSigMatrix& sig, double alpha);

}  // namespace metaeval
