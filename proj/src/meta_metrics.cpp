#include "metaeval/meta_metrics.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

namespace metaeval {
namespace {

void check_pair_shapes(const PValueMatrix& human, const PValueMatrix& metric) {
  if (human.p.rows() != human.p.cols() || metric.p.rows() != metric.p.cols())
    throw std::invalid_argument("p-value matrix is not square");
  if (human.p.rows() != metric.p.rows())
    throw std::invalid_argument("p-value matrices disagree on system count");
  if (human.p.rows() < 2)
    throw std::invalid_argument("need at least 2 systems");
}

double checked_p(double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument("p-value outside [0, 1]");
  return v;
}

}  // namespace

const char* meta_name(Meta m) { return m == Meta::kSpa ? "spa" : "pa"; }

int binarize(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("binarize: p-value outside [0, 1]");
  return p >= 0.5 ? 1 : 0;
}

double spa(const PValueMatrix& human, const PValueMatrix& metric) {
  check_pair_shapes(human, metric);
  const std::size_t n = human.p.rows();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += 1.0 - std::abs(checked_p(human.p(i, j)) - checked_p(metric.p(i, j)));
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

std::size_t pa_concordant_count(const PValueMatrix& human, const PValueMatrix& metric) {
  check_pair_shapes(human, metric);
  const std::size_t n = human.p.rows();
  std::size_t concordant = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      concordant += binarize(human.p(i, j)) == binarize(metric.p(i, j));
  return concordant;
}

double pa(const PValueMatrix& human, const PValueMatrix& metric) {
  const std::size_t n = human.p.rows();
  const std::size_t pairs = n * (n - 1) / 2;
  return static_cast<double>(pa_concordant_count(human, metric)) /
         static_cast<double>(pairs);
}

double kendall_from_pa(double pa) { return 2.0 * pa - 1.0; }

MetaScore meta_score(const std::string& metric_name, const PValueMatrix& human,
                     const PValueMatrix& metric) {
  MetaScore score;
  score.metric_name = metric_name;
  score.spa = spa(human, metric);
  score.pa_concordant = pa_concordant_count(human, metric);
  const std::size_t n = human.p.rows();
  score.pair_count = n * (n - 1) / 2;
  score.pa = static_cast<double>(score.pa_concordant) /
             static_cast<double>(score.pair_count);
  score.tau = kendall_from_pa(score.pa);
  return score;
}

std::vector<PairBreakdown> pair_breakdown(const PValueMatrix& human,
                                          const PValueMatrix& metric) {
  check_pair_shapes(human, metric);
  const std::size_t n = human.p.rows();
  std::vector<PairBreakdown> rows;
  rows.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      PairBreakdown row;
      row.i = i;
      row.j = j;
      row.p_h = checked_p(human.p(i, j));
      row.p_m = checked_p(metric.p(i, j));
      row.spa_term = 1.0 - std::abs(row.p_h - row.p_m);
      row.pa_term = binarize(row.p_h) == binarize(row.p_m) ? 1 : 0;
      rows.push_back(row);
    }
  return rows;
}

DistinctValueCounts distinct_value_stats(const std::vector<MetaScore>& scores) {
  // PA values are rationals concordant/pairs; compare them reduced so the
  // count is immune to float rounding.
  std::set<std::pair<std::size_t, std::size_t>> pa_values;
  std::set<double> spa_values;
  for (const auto& s : scores) {
    if (s.pair_count == 0)
      throw std::invalid_argument("meta-score with zero pair count");
    std::size_t g = std::gcd(s.pa_concordant, s.pair_count);
    if (g == 0) g = 1;
    pa_values.emplace(s.pa_concordant / g, s.pair_count / g);
    spa_values.insert(s.spa);
  }
  DistinctValueCounts counts;
  counts.pa = pa_values.size();
  counts.spa = spa_values.size();
  return counts;
}

}  // namespace metaeval
