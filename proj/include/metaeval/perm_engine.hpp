#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metaeval/eval_data.hpp"
#include "metaeval/matrix.hpp"

namespace metaeval {

inline constexpr std::size_t kDefaultPermutations = 1000;

// Cache of sign assignments shared by every paired permutation test on one
// test set. Row 0 is the all-(+1) unpermuted assignment; rows 1..B hold
// i.i.d. uniform +/-1. Each cell is a pure function of (seed, row, column),
// so the matrix is bit-for-bit reproducible and generation order (including
// parallel generation) cannot change it.
struct SignMatrix {
  std::uint64_t seed = 0;
  std::size_t permutations = 0;       // B: number of random rows
  std::size_t segments = 0;           // S
  std::vector<std::int8_t> signs;     // (B+1) x S, row-major

  std::size_t rows() const { return permutations + 1; }
  std::int8_t at(std::size_t row, std::size_t col) const {
    return signs[row * segments + col];
  }
};

SignMatrix generate_sign_matrix(std::uint64_t seed, std::size_t permutations,
                                std::size_t segments);

// proj(i, b) = sum_s signs(b, s) * scores(i, s). Column 0 uses the all-ones
// row, so proj(i, 0) = S * mean(system i). The permuted paired mean
// difference of systems (i, j) under row b is (proj(i, b) - proj(j, b)) / S;
// the observed difference is the b = 0 column, so observed and permuted
// statistics flow through the same code path and exact float ties between
// them are meaningful.
struct SystemProjection {
  std::size_t segments = 0;  // S of the projected score matrix
  Matrix proj;               // N x (B+1)
};

SystemProjection project_systems(const ScoreMatrix& m, const SignMatrix& signs);
SystemProjection project_systems(const Matrix& scores, const SignMatrix& signs);

// One-tailed paired-permutation p-values for all system pairs.
// p(i, j) = (#{b : d_b > d_0} + 0.5 #{b : d_b = d_0}) / B over random rows
// b = 1..B, where d_b is the permuted mean difference of pair (i, j); ties
// count half (mid-p), so two identical systems get exactly 0.5. Small values
// mean system i is preferred. The diagonal is fixed at 0.5 and the lower
// triangle is the exact mirror 1 - p(i, j), so p(i, j) + p(j, i) == 1 always
// holds bitwise.
struct PValueMatrix {
  std::vector<std::string> system_names;  // may be empty for raw-score input
  Matrix p;                               // N x N
};

PValueMatrix pairwise_p_values(const SystemProjection& proj);

// Cross-projection variant: the row system's scores come from `a`, the
// column system's from `b` (used when score vectors move between metrics).
// Both projections must come from the same SignMatrix. All N x N entries are
// computed directly; the in-matrix mirror identity does not apply here, but
// cross(a, b)(i, j) + cross(b, a)(j, i) = 1 holds in exact arithmetic.
PValueMatrix cross_pairwise_p_values(const SystemProjection& a,
                                     const SystemProjection& b);

// Exact oracle: enumerates all 2^S sign assignments (S <= 24) with the same
// mid-p tie convention. Meant for cross-validating the Monte Carlo engine.
double exact_pairwise_p_value(const ScoreMatrix& m, std::size_t i, std::size_t j);

// Naive reference: regenerates fresh permutations for this one pair and
// never touches the shared cache. Statistically equivalent to the cached
// engine; exists for benchmarking and cross-validation.
double naive_pair_p_value(const ScoreMatrix& m, std::size_t i, std::size_t j,
                          std::uint64_t seed, std::size_t permutations);

// Everything derived from one (eval set, seed, B) triple: the shared sign
// cache, per-score-set projections, and p-value matrices for the human
// scores and every metric.
struct EvalCache {
  SignMatrix signs;
  SystemProjection human;
  std::map<std::string, SystemProjection> metrics;
  PValueMatrix human_p;
  std::map<std::string, PValueMatrix> metric_p;
};

EvalCache build_eval_cache(const EvalSet& eval, std::uint64_t seed,
                           std::size_t permutations);

}  // namespace metaeval
