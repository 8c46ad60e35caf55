#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "metaeval/perm_engine.hpp"

namespace metaeval {

enum class Meta { kSpa, kPa };

const char* meta_name(Meta m);  // "spa" / "pa"

// 1 if p >= 0.5 else 0; throws std::invalid_argument outside [0, 1].
int binarize(double p);

// Soft pairwise accuracy: mean over system pairs i < j of
// 1 - |p_h(i, j) - p_m(i, j)|. 1.0 means the metric reproduces the human
// p-values exactly.
double spa(const PValueMatrix& human, const PValueMatrix& metric);

// Pairwise accuracy: same mean with both p-values binarized, i.e. the
// fraction of pairs whose significance calls agree. Always an integer
// multiple of 1 / C(N, 2).
double pa(const PValueMatrix& human, const PValueMatrix& metric);

// Number of pairs whose binarized calls agree; pa == concordant / C(N, 2).
std::size_t pa_concordant_count(const PValueMatrix& human, const PValueMatrix& metric);

double kendall_from_pa(double pa);

struct MetaScore {
  std::string metric_name;
  double spa = 0.0;
  double pa = 0.0;
  double tau = 0.0;               // always 2 * pa - 1
  std::size_t pa_concordant = 0;  // pa == pa_concordant / pair_count exactly
  std::size_t pair_count = 0;     // C(N, 2)
};

MetaScore meta_score(const std::string& metric_name, const PValueMatrix& human,
                     const PValueMatrix& metric);

// Per-pair agreement terms, pairs in row-major i < j order. The mean of
// spa_term over all pairs is exactly spa (same summation order), and the
// pa_term sum is the concordant count.
struct PairBreakdown {
  std::size_t i = 0;
  std::size_t j = 0;
  double p_h = 0.0;
  double p_m = 0.0;
  double spa_term = 0.0;  // 1 - |p_h - p_m|
  int pa_term = 0;        // 1 if binarized calls agree
};

std::vector<PairBreakdown> pair_breakdown(const PValueMatrix& human,
                                          const PValueMatrix& metric);

// Distinct meta-metric values across a leaderboard. PA values are compared
// as exact rationals (concordant count over pair count) to avoid float
// rounding artifacts; SPA values by exact double equality.
struct DistinctValueCounts {
  std::size_t pa = 0;
  std::size_t spa = 0;
};

DistinctValueCounts distinct_value_stats(const std::vector<MetaScore>& scores);

}  // namespace metaeval
