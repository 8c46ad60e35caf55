#include "metaeval/perm_engine.hpp"

#include <stdexcept>

#include "metaeval/rng.hpp"

namespace metaeval {

SignMatrix generate_sign_matrix(std::uint64_t seed, std::size_t permutations,
                                std::size_t segments) {
  if (permutations == 0) throw std::invalid_argument("need at least 1 permutation");
  if (segments == 0) throw std::invalid_argument("need at least 1 segment");

  SignMatrix sm;
  sm.seed = seed;
  sm.permutations = permutations;
  sm.segments = segments;
  sm.signs.resize((permutations + 1) * segments);

  std::int8_t* row0 = sm.signs.data();
  for (std::size_t s = 0; s < segments; ++s) row0[s] = 1;
  for (std::size_t b = 1; b <= permutations; ++b) {
    rng::Stream stream(seed, rng::kSignMatrix, b);
    std::int8_t* row = sm.signs.data() + b * segments;
    for (std::size_t s = 0; s < segments; ++s)
      row[s] = stream.coin(s) ? std::int8_t(1) : std::int8_t(-1);
  }
  return sm;
}

SystemProjection project_systems(const Matrix& scores, const SignMatrix& signs) {
  if (scores.cols() != signs.segments)
    throw std::invalid_argument("score matrix and sign matrix disagree on segment count");
  if (scores.rows() == 0) throw std::invalid_argument("no systems to project");

  const std::size_t n = scores.rows();
  const std::size_t s_count = signs.segments;
  const std::size_t rows = signs.rows();

  SystemProjection out;
  out.segments = s_count;
  out.proj = Matrix(n, rows);

  // One sign row at a time, widened to double once and reused for every
  // system. Accumulation is plain left-to-right so the observed column and
  // the permuted columns are numerically comparable.
  std::vector<double> sign_row(s_count);
  for (std::size_t b = 0; b < rows; ++b) {
    const std::int8_t* src = signs.signs.data() + b * s_count;
    for (std::size_t s = 0; s < s_count; ++s) sign_row[s] = src[s];
    for (std::size_t i = 0; i < n; ++i) {
      const double* score_row = scores.row(i);
      double acc = 0.0;
      for (std::size_t s = 0; s < s_count; ++s) acc += sign_row[s] * score_row[s];
      out.proj(i, b) = acc;
    }
  }
  return out;
}

SystemProjection project_systems(const ScoreMatrix& m, const SignMatrix& signs) {
  return project_systems(m.scores, signs);
}

namespace {

// Mid-p count of permuted differences reaching the observed one. The /S mean
// normalization is skipped: dividing both sides by the same positive S can
// never change a comparison in real arithmetic, and skipping it avoids one
// rounding on each side.
double pair_p(const double* ri, const double* rj, std::size_t b_count) {
  const double observed = ri[0] - rj[0];
  std::size_t greater = 0, equal = 0;
  for (std::size_t b = 1; b <= b_count; ++b) {
    const double d = ri[b] - rj[b];
    greater += d > observed;
    equal += d == observed;
  }
  return (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) /
         static_cast<double>(b_count);
}

}  // namespace

PValueMatrix pairwise_p_values(const SystemProjection& proj) {
  const std::size_t n = proj.proj.rows();
  if (proj.proj.cols() < 2)
    throw std::invalid_argument("projection has no random permutation rows");
  const std::size_t b_count = proj.proj.cols() - 1;

  PValueMatrix out;
  out.p = Matrix(n, n, 0.5);  // diagonal stays at even odds
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double pv = pair_p(proj.proj.row(i), proj.proj.row(j), b_count);
      out.p(i, j) = pv;
      out.p(j, i) = 1.0 - pv;  // exact: keeps p(i,j) + p(j,i) == 1 bitwise
    }
  }
  return out;
}

PValueMatrix cross_pairwise_p_values(const SystemProjection& a,
                                     const SystemProjection& b) {
  if (a.proj.rows() != b.proj.rows() || a.proj.cols() != b.proj.cols() ||
      a.segments != b.segments)
    throw std::invalid_argument("cross projections disagree on shape");
  const std::size_t n = a.proj.rows();
  if (a.proj.cols() < 2)
    throw std::invalid_argument("projection has no random permutation rows");
  const std::size_t b_count = a.proj.cols() - 1;

  PValueMatrix out;
  out.p = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.p(i, j) = pair_p(a.proj.row(i), b.proj.row(j), b_count);
  return out;
}

double exact_pairwise_p_value(const ScoreMatrix& m, std::size_t i, std::size_t j) {
  const std::size_t s_count = m.segments();
  if (s_count > 24)
    throw std::invalid_argument("exact enumeration is limited to 24 segments");
  if (i >= m.systems() || j >= m.systems())
    throw std::invalid_argument("system index out of range");

  std::vector<double> d(s_count);
  for (std::size_t s = 0; s < s_count; ++s) d[s] = m.scores(i, s) - m.scores(j, s);

  const std::uint64_t patterns = std::uint64_t(1) << s_count;
  double observed = 0.0;
  for (std::size_t s = 0; s < s_count; ++s) observed += d[s];  // identity pattern

  std::uint64_t greater = 0, equal = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double stat = 0.0;
    for (std::size_t s = 0; s < s_count; ++s)
      stat += (mask >> s) & 1 ? -d[s] : d[s];
    greater += stat > observed;
    equal += stat == observed;
  }
  return (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) /
         static_cast<double>(patterns);
}

double naive_pair_p_value(const ScoreMatrix& m, std::size_t i, std::size_t j,
                          std::uint64_t seed, std::size_t permutations) {
  if (permutations == 0) throw std::invalid_argument("need at least 1 permutation");
  if (i >= m.systems() || j >= m.systems())
    throw std::invalid_argument("system index out of range");
  const std::size_t s_count = m.segments();

  std::vector<double> d(s_count);
  for (std::size_t s = 0; s < s_count; ++s) d[s] = m.scores(i, s) - m.scores(j, s);
  double observed = 0.0;
  for (std::size_t s = 0; s < s_count; ++s) observed += d[s];

  rng::Stream stream(seed, rng::kNaivePair, i, j);
  std::size_t greater = 0, equal = 0;
  for (std::size_t b = 1; b <= permutations; ++b) {
    double stat = 0.0;
    const std::uint64_t base = (b - 1) * s_count;
    for (std::size_t s = 0; s < s_count; ++s)
      stat += stream.coin(base + s) ? -d[s] : d[s];
    greater += stat > observed;
    equal += stat == observed;
  }
  return (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) /
         static_cast<double>(permutations);
}

EvalCache build_eval_cache(const EvalSet& eval, std::uint64_t seed,
                           std::size_t permutations) {
  EvalCache cache;
  cache.signs = generate_sign_matrix(seed, permutations, eval.human.segments());
  cache.human = project_systems(eval.human, cache.signs);
  cache.human_p = pairwise_p_values(cache.human);
  cache.human_p.system_names = eval.human.system_names;
  for (const auto& [name, scores] : eval.metrics) {
    auto proj = project_systems(scores, cache.signs);
    auto pv = pairwise_p_values(proj);
    pv.system_names = scores.system_names;
    cache.metrics.emplace(name, std::move(proj));
    cache.metric_p.emplace(name, std::move(pv));
  }
  return cache;
}

}  // namespace metaeval
