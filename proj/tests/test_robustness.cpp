#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaeval/robustness.hpp"
#include "metaeval/rng.hpp"
#include "support/synthetic.hpp"

using metaeval::CIResult;
using metaeval::EvalSet;
using metaeval::Meta;
using metaeval::StabilityResult;
using metaeval::rng::Stream;

TEST_SUITE("robustness") {

TEST_CASE("pearson correlation hand values") {
  // Perfect linear relation: covariance 4, variances 2 and 8,
  // so r = 4 / sqrt(16) = 1 with no rounding anywhere.
  CHECK(metaeval::pearson_r({1, 2, 3}, {2, 4, 6}) == 1.0);
  CHECK(metaeval::pearson_r({1, 2, 3}, {6, 4, 2}) == -1.0);

  // x = (0, 1, 2), y = (0, 1, 4): r = 2 * sqrt(3 / 13).
  const auto r = metaeval::pearson_r({0, 1, 2}, {0, 1, 4});
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(2.0 * std::sqrt(3.0 / 13.0)).epsilon(1e-12));
}

TEST_CASE("pearson of a vector with itself is exactly one") {
  const Stream stream(1, metaeval::rng::kSynthetic, 90);
  std::vector<double> x(17);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = stream.unit(i) * 10.0 - 5.0;
  const auto r = metaeval::pearson_r(x, x);
  REQUIRE(r.has_value());
  CHECK(*r == 1.0);
}

TEST_CASE("pearson degenerates on constant input") {
  CHECK(!metaeval::pearson_r({1, 1, 1}, {2, 3, 4}).has_value());
  CHECK(!metaeval::pearson_r({2, 3, 4}, {5, 5, 5}).has_value());
  CHECK_THROWS_AS(metaeval::pearson_r({1, 2}, {1, 2, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(metaeval::pearson_r({1}, {2}), std::invalid_argument);
}

TEST_CASE("keeping every system reproduces the full leaderboard exactly") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 8;
  spec.segments = 60;
  spec.metrics = 4;
  spec.seed = 2;
  const EvalSet eval = metaeval::test::make_synthetic(spec);

  for (const Meta meta : {Meta::kSpa, Meta::kPa}) {
    const StabilityResult res =
        metaeval::system_ablation_stability(eval, meta, 8, 50, 3, 300);
    CHECK(res.trials == 50);
    CHECK(res.degenerate_trials == 0);
    REQUIRE(res.mean_r.has_value());
    CHECK(*res.mean_r == 1.0);
  }
}

TEST_CASE("larger subsets track the full leaderboard better") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 10;
  spec.segments = 80;
  spec.metrics = 8;
  spec.seed = 5;
  const EvalSet eval = metaeval::test::make_synthetic(spec);

  const auto results = metaeval::system_ablation_stability(
      eval, {Meta::kSpa}, {2, 9}, 1000, 7, 300);
  REQUIRE(results.size() == 2);
  const StabilityResult& small = results[0];
  const StabilityResult& big = results[1];
  REQUIRE(small.mean_r.has_value());
  REQUIRE(big.mean_r.has_value());
  CHECK(*big.mean_r >= *small.mean_r);
  CHECK(*big.mean_r > 0.9);  // 9 of 10 systems: nearly the full board
}

TEST_CASE("ablation is deterministic in the seed") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 7;
  spec.segments = 40;
  spec.metrics = 5;
  spec.seed = 9;
  const EvalSet eval = metaeval::test::make_synthetic(spec);

  const auto a = metaeval::system_ablation_stability(eval, {Meta::kPa},
                                                     {4, 6}, 200, 11, 200);
  const auto b = metaeval::system_ablation_stability(eval, {Meta::kPa},
                                                     {4, 6}, 200, 11, 200);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].systems_kept == b[i].systems_kept);
    CHECK(a[i].mean_r == b[i].mean_r);
    CHECK(a[i].degenerate_trials == b[i].degenerate_trials);
  }
}

TEST_CASE("a metric that copies the humans pins its interval at one") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 5;
  spec.segments = 50;
  spec.metrics = 1;
  spec.seed = 13;
  EvalSet eval = metaeval::test::make_synthetic(spec);
  eval.metrics.emplace("mirror", eval.human);

  const auto rows = metaeval::bootstrap_ci(
      eval, "mirror", {Meta::kSpa, Meta::kPa}, {50}, 100, 1, 200);
  REQUIRE(rows.size() == 2);
  for (const CIResult& row : rows) {
    CHECK(row.lower == 1.0);
    CHECK(row.point == 1.0);
    CHECK(row.upper == 1.0);
    CHECK(row.trials == 100);
  }
}

TEST_CASE("intervals shrink with sample size on average") {
  double width_small = 0.0;
  double width_large = 0.0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    metaeval::test::SyntheticSpec spec;
    spec.systems = 6;
    spec.segments = 120;
    spec.metrics = 1;
    spec.seed = 100 + rep;
    const EvalSet eval = metaeval::test::make_synthetic(spec);
    const auto rows = metaeval::bootstrap_ci(eval, "m00", {Meta::kSpa},
                                             {15, 120}, 100, rep, 150);
    REQUIRE(rows.size() == 2);
    width_small += rows[0].upper - rows[0].lower;
    width_large += rows[1].upper - rows[1].lower;
  }
  CHECK(width_small / 10.0 > width_large / 10.0);
}

TEST_CASE("interval covers the full-data score at full sample size") {
  int covered = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    metaeval::test::SyntheticSpec spec;
    spec.systems = 5;
    spec.segments = 40;
    spec.metrics = 1;
    spec.seed = 500 + static_cast<std::uint64_t>(rep);
    const EvalSet eval = metaeval::test::make_synthetic(spec);
    const auto rows = metaeval::bootstrap_ci(eval, "m00", {Meta::kSpa}, {40},
                                             100, static_cast<std::uint64_t>(rep),
                                             150);
    REQUIRE(rows.size() == 1);
    if (rows[0].lower <= rows[0].point && rows[0].point <= rows[0].upper)
      ++covered;
  }
  CHECK(covered >= 27);
}

TEST_CASE("bootstrap is deterministic in the seed") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 5;
  spec.segments = 30;
  spec.metrics = 2;
  spec.seed = 77;
  const EvalSet eval = metaeval::test::make_synthetic(spec);
  const auto a = metaeval::bootstrap_ci(eval, "m01", {Meta::kSpa, Meta::kPa},
                                        {10, 30}, 100, 4, 150);
  const auto b = metaeval::bootstrap_ci(eval, "m01", {Meta::kSpa, Meta::kPa},
                                        {10, 30}, 100, 4, 150);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lower == b[i].lower);
    CHECK(a[i].point == b[i].point);
    CHECK(a[i].upper == b[i].upper);
  }
}

TEST_CASE("oversampling needs explicit permission") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 4;
  spec.segments = 20;
  spec.metrics = 1;
  spec.seed = 3;
  const EvalSet eval = metaeval::test::make_synthetic(spec);

  CHECK_THROWS_AS(metaeval::bootstrap_ci(eval, "m00", {Meta::kSpa}, {21}, 100,
                                         0, 100),
                  std::invalid_argument);
  const auto rows = metaeval::bootstrap_ci(eval, "m00", {Meta::kSpa}, {21},
                                           100, 0, 100, true);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].sample_size == 21);
  CHECK(rows[0].lower <= rows[0].upper);
}

TEST_CASE("rejects bad bootstrap requests") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 4;
  spec.segments = 20;
  spec.metrics = 1;
  spec.seed = 3;
  const EvalSet eval = metaeval::test::make_synthetic(spec);

  CHECK_THROWS_AS(metaeval::bootstrap_ci(eval, "m00", {Meta::kSpa}, {0}, 100,
                                         0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(metaeval::bootstrap_ci(eval, "m00", {Meta::kSpa}, {10}, 99,
                                         0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(metaeval::bootstrap_ci(eval, "nope", {Meta::kSpa}, {10},
                                         100, 0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(metaeval::system_ablation_stability(eval, Meta::kSpa, 1,
                                                      100, 0, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(metaeval::system_ablation_stability(eval, Meta::kSpa, 5,
                                                      100, 0, 100),
                  std::invalid_argument);
}

}  // TEST_SUITE
