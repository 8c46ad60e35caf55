#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaeval/meta_metrics.hpp"
#include "metaeval/perm_engine.hpp"

namespace metaeval {

// Pearson correlation; nullopt when either vector is constant (undefined
// rather than silently 0). pearson_r(x, x) is exactly 1.
std::optional<double> pearson_r(const std::vector<double>& x,
                                const std::vector<double>& y);

// Percentile bootstrap CI for one metric's meta-score: for each sample size
// m, draw m segments with replacement, rebuild the human and metric matrices
// on the resample, regenerate a fresh sign cache (seeded from master seed,
// sample size, and trial index), and recompute the meta-score. Bounds are
// the empirical 2.5 / 97.5 percentiles; the point estimate is the full-data
// meta-score. Requesting m > segments throws unless allow_oversample.
struct CIResult {
  std::size_t sample_size = 0;
  Meta meta = Meta::kSpa;
  double lower = 0.0;
  double point = 0.0;
  double upper = 0.0;
  std::size_t trials = 0;
};

std::vector<CIResult> bootstrap_ci(const EvalSet& eval, const std::string& metric,
                                   const std::vector<Meta>& metas,
                                   const std::vector<std::size_t>& sample_sizes,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t permutations = kDefaultPermutations,
                                   bool allow_oversample = false);

std::vector<CIResult> bootstrap_ci(const EvalSet& eval, const std::string& metric,
                                   Meta meta,
                                   const std::vector<std::size_t>& sample_sizes,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t permutations = kDefaultPermutations,
                                   bool allow_oversample = false);

// System-ablation stability: per trial, keep a uniform random subset of k
// systems, recompute every metric's meta-score on that subset (p-values are
// pair-local, so this restricts the shared cache rather than recomputing
// it), and correlate the subset leaderboard with the full one. mean_r
// averages the valid trials; trials whose subset or full leaderboard is
// constant are counted in degenerate_trials and excluded.
struct StabilityResult {
  std::size_t systems_kept = 0;
  Meta meta = Meta::kSpa;
  std::optional<double> mean_r;
  std::size_t trials = 0;
  std::size_t degenerate_trials = 0;
};

std::vector<StabilityResult> system_ablation_stability(
    const EvalSet& eval, const std::vector<Meta>& metas,
    const std::vector<std::size_t>& k_values, std::size_t trials,
    std::uint64_t seed, std::size_t permutations = kDefaultPermutations);

StabilityResult system_ablation_stability(const EvalSet& eval, Meta meta,
                                          std::size_t systems_kept,
                                          std::size_t trials, std::uint64_t seed,
                                          std::size_t permutations = kDefaultPermutations);

}  // namespace metaeval
