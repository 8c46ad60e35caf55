#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "metaeval/eval_data.hpp"
#include "metaeval/rng.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using metaeval::EvalSet;
using metaeval::LoadError;
using metaeval::Orientation;
using metaeval::ScoreMatrix;
using metaeval::test::TempDir;

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// A small healthy evaluation directory: 3 systems, 4 segments, 2 metrics.
// The "neural" metric permutes both row and column order to exercise
// alignment by name rather than by position.
void write_basic_set(const fs::path& dir) {
  write_file(dir / "humans.tsv",
             "segment_id\tsysA\tsysB\tsysC\n"
             "seg1\t1.0\t2.0\t3.0\n"
             "seg2\t0.5\t-0.25\t1e-3\n"
             "seg3\t4\t5\t6\n"
             "seg4\t-1.5\t2.25\t0.125\n");
  write_file(dir / "metrics" / "lexical.tsv",
             "segment_id\tsysA\tsysB\tsysC\n"
             "seg1\t10\t20\t30\n"
             "seg2\t11\t21\t31\n"
             "seg3\t12\t22\t32\n"
             "seg4\t13\t23\t33\n");
  write_file(dir / "metrics" / "neural.tsv",
             "segment_id\tsysC\tsysA\tsysB\n"
             "seg3\t300\t100\t200\n"
             "seg1\t301\t101\t201\n"
             "seg4\t302\t102\t202\n"
             "seg2\t303\t103\t203\n");
}

double kahan_mean(const double* row, std::size_t n) {
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double y = row[s] - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("eval_data") {

TEST_CASE("loads a complete set and aligns by name") {
  TempDir tmp;
  const fs::path dir = tmp.path / "wmt-demo";
  write_basic_set(dir);

  const EvalSet eval = metaeval::load_eval_set(dir.string());
  CHECK(eval.name == "wmt-demo");
  REQUIRE(eval.human.system_names ==
          std::vector<std::string>{"sysA", "sysB", "sysC"});
  REQUIRE(eval.human.segment_ids ==
          std::vector<std::string>{"seg1", "seg2", "seg3", "seg4"});
  CHECK(eval.human.scores(0, 0) == 1.0);
  CHECK(eval.human.scores(1, 1) == -0.25);
  CHECK(eval.human.scores(2, 1) == 1e-3);
  CHECK(eval.human.scores(2, 3) == 0.125);

  REQUIRE(eval.metrics.size() == 2);
  REQUIRE(eval.metrics.count("lexical") == 1);
  REQUIRE(eval.metrics.count("neural") == 1);

  // The permuted file must land in human order: rows by system name,
  // columns by segment id.
  const ScoreMatrix& neural = eval.metrics.at("neural");
  CHECK(neural.system_names == eval.human.system_names);
  CHECK(neural.segment_ids == eval.human.segment_ids);
  CHECK(neural.scores(0, 0) == 101.0);  // sysA, seg1
  CHECK(neural.scores(1, 0) == 201.0);  // sysB, seg1
  CHECK(neural.scores(2, 2) == 300.0);  // sysC, seg3
  CHECK(neural.scores(0, 3) == 102.0);  // sysA, seg4
}

TEST_CASE("drops segments with any missing human score") {
  TempDir tmp;
  const fs::path dir = tmp.path / "holes";
  write_file(dir / "humans.tsv",
             "segment_id\tsysA\tsysB\n"
             "seg1\t1\t2\n"
             "seg2\tNA\t4\n"
             "seg3\t5\t6\n"
             "seg4\t7\tNA\n");
  // The metric may be missing on dropped segments without consequence.
  write_file(dir / "metrics" / "m.tsv",
             "segment_id\tsysA\tsysB\n"
             "seg1\t1\t2\n"
             "seg2\tNA\tNA\n"
             "seg3\t5\t6\n"
             "seg4\t7\t8\n");

  const EvalSet eval = metaeval::load_eval_set(dir.string());
  CHECK(eval.human.segment_ids == std::vector<std::string>{"seg1", "seg3"});
  CHECK(eval.human.scores.cols() == 2);
  CHECK(eval.human.scores(0, 1) == 5.0);
  CHECK(eval.metrics.at("m").segment_ids ==
        std::vector<std::string>{"seg1", "seg3"});
  CHECK(eval.metrics.at("m").scores(1, 1) == 6.0);
}

TEST_CASE("tolerates CRLF line endings") {
  TempDir tmp;
  const fs::path dir = tmp.path / "crlf";
  write_file(dir / "humans.tsv",
             "segment_id\tsysA\tsysB\r\n"
             "seg1\t1\t2\r\n"
             "seg2\t3\t4\r\n");
  write_file(dir / "metrics" / "m.tsv",
             "segment_id\tsysA\tsysB\r\n"
             "seg1\t1\t2\r\n"
             "seg2\t3\t4\r\n");
  const EvalSet eval = metaeval::load_eval_set(dir.string());
  CHECK(eval.human.scores(1, 1) == 4.0);
}

TEST_CASE("applies lower-is-better orientation exactly once at load") {
  TempDir tmp;
  const fs::path dir = tmp.path / "oriented";
  write_basic_set(dir);
  write_file(dir / "meta.json",
             "{\"humans\": {\"higher_is_better\": false},\n"
             " \"metrics/lexical.tsv\": {\"higher_is_better\": false},\n"
             " \"neural\": {\"higher_is_better\": true}}\n");

  const EvalSet plain = metaeval::load_eval_set(dir.string(), Orientation{});
  const EvalSet flipped = metaeval::load_eval_set(dir.string());

  for (std::size_t i = 0; i < plain.human.systems(); ++i)
    for (std::size_t s = 0; s < plain.human.segments(); ++s) {
      CHECK(flipped.human.scores(i, s) == -plain.human.scores(i, s));
      CHECK(flipped.metrics.at("lexical").scores(i, s) ==
            -plain.metrics.at("lexical").scores(i, s));
      CHECK(flipped.metrics.at("neural").scores(i, s) ==
            plain.metrics.at("neural").scores(i, s));
    }
}

TEST_CASE("rejects malformed or inconsistent inputs") {
  TempDir tmp;

  SUBCASE("missing humans file") {
    const fs::path dir = tmp.path / "a";
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("missing metrics directory") {
    const fs::path dir = tmp.path / "b";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("no metric files") {
    const fs::path dir = tmp.path / "c";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    fs::create_directories(dir / "metrics");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("bad header") {
    const fs::path dir = tmp.path / "d";
    write_file(dir / "humans.tsv", "segment\tx\ty\nseg1\t1\t2\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("single system") {
    const fs::path dir = tmp.path / "e";
    write_file(dir / "humans.tsv", "segment_id\tx\nseg1\t1\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\nseg1\t1\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("duplicate system name") {
    const fs::path dir = tmp.path / "f";
    write_file(dir / "humans.tsv", "segment_id\tx\tx\nseg1\t1\t2\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\tx\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("duplicate segment id reports file and line") {
    const fs::path dir = tmp.path / "g";
    write_file(dir / "humans.tsv",
               "segment_id\tx\ty\nseg1\t1\t2\nseg1\t3\t4\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    try {
      metaeval::load_eval_set(dir.string());
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      const std::string what = e.what();
      CHECK(what.find("humans.tsv:3") != std::string::npos);
      CHECK(what.find("duplicate segment id") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell reports file and line") {
    const fs::path dir = tmp.path / "h";
    write_file(dir / "humans.tsv",
               "segment_id\tx\ty\nseg1\t1\t2\nseg2\toops\t4\n");
    write_file(dir / "metrics" / "m.tsv",
               "segment_id\tx\ty\nseg1\t1\t2\nseg2\t3\t4\n");
    try {
      metaeval::load_eval_set(dir.string());
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      const std::string what = e.what();
      CHECK(what.find("humans.tsv:3") != std::string::npos);
      CHECK(what.find("oops") != std::string::npos);
    }
  }
  SUBCASE("ragged row") {
    const fs::path dir = tmp.path / "i";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\t1\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("metric with different system set") {
    const fs::path dir = tmp.path / "j";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\tz\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("metric missing a segment present in humans") {
    const fs::path dir = tmp.path / "k";
    write_file(dir / "humans.tsv",
               "segment_id\tx\ty\nseg1\t1\t2\nseg2\t3\t4\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("metric with a segment humans never saw") {
    const fs::path dir = tmp.path / "l";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    write_file(dir / "metrics" / "m.tsv",
               "segment_id\tx\ty\nseg1\t1\t2\nseg9\t3\t4\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("metric NA on a surviving segment") {
    const fs::path dir = tmp.path / "m";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\tNA\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("all segments incomplete") {
    const fs::path dir = tmp.path / "n";
    write_file(dir / "humans.tsv", "segment_id\tx\ty\nseg1\tNA\t2\n");
    write_file(dir / "metrics" / "m.tsv", "segment_id\tx\ty\nseg1\t1\t2\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("orientation entry naming no file") {
    const fs::path dir = tmp.path / "o";
    write_basic_set(dir);
    write_file(dir / "meta.json",
               "{\"bleurt\": {\"higher_is_better\": false}}\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("orientation flag with wrong type") {
    const fs::path dir = tmp.path / "p";
    write_basic_set(dir);
    write_file(dir / "meta.json",
               "{\"humans\": {\"higher_is_better\": \"yes\"}}\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
  SUBCASE("orientation file that is not JSON") {
    const fs::path dir = tmp.path / "q";
    write_basic_set(dir);
    write_file(dir / "meta.json", "not json at all\n");
    CHECK_THROWS_AS(metaeval::load_eval_set(dir.string()), LoadError);
  }
}

TEST_CASE("system means match a compensated-summation oracle") {
  ScoreMatrix m;
  m.system_names = {"a", "b", "c", "d"};
  for (std::size_t s = 0; s < 10; ++s)
    m.segment_ids.push_back("seg" + std::to_string(s));
  m.scores = metaeval::Matrix(4, 10);
  const metaeval::rng::Stream stream(5, metaeval::rng::kSynthetic, 99);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t s = 0; s < 10; ++s)
      m.scores(i, s) = 2.0 * stream.unit(i * 10 + s) - 1.0;

  const std::vector<double> means = metaeval::system_means(m);
  REQUIRE(means.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double oracle = kahan_mean(m.scores.row(i), 10);
    CHECK(means[i] == doctest::Approx(oracle).epsilon(1e-12));
  }

  // Simple cases hold exactly.
  ScoreMatrix simple;
  simple.system_names = {"a", "b"};
  simple.segment_ids = {"s1", "s2", "s3"};
  simple.scores = metaeval::Matrix(2, 3);
  double vals[2][3] = {{1.0, 2.0, 3.0}, {0.5, 0.5, 0.5}};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t s = 0; s < 3; ++s) simple.scores(i, s) = vals[i][s];
  const std::vector<double> sm = metaeval::system_means(simple);
  CHECK(sm[0] == 2.0);
  CHECK(sm[1] == 0.5);
}

TEST_CASE("save and reload round-trips bit for bit") {
  metaeval::test::SyntheticSpec spec;
  spec.systems = 4;
  spec.segments = 7;
  spec.metrics = 2;
  spec.seed = 21;
  EvalSet eval = metaeval::test::make_synthetic(spec);

  TempDir tmp;
  const fs::path dir = tmp.path / "roundtrip";
  metaeval::save_eval_set(eval, dir.string());
  EvalSet reloaded = metaeval::load_eval_set(dir.string());

  eval.name = "roundtrip";  // the load names the set after its directory
  CHECK(reloaded == eval);
}

}  // TEST_SUITE
