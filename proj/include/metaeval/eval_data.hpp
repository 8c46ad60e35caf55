#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "metaeval/matrix.hpp"

namespace metaeval {

// Malformed or inconsistent evaluation data. what() carries
// "<path>:<line>: <message>" context where a location is known.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scores for N systems on S segments. Row order follows system_names, column
// order follows segment_ids. Cells are 64-bit reals with higher-is-better
// orientation already applied; there are no missing values.
struct ScoreMatrix {
  std::vector<std::string> system_names;  // size N >= 2, unique
  std::vector<std::string> segment_ids;   // size S >= 1, unique
  Matrix scores;                          // N x S

  std::size_t systems() const { return system_names.size(); }
  std::size_t segments() const { return segment_ids.size(); }

  bool operator==(const ScoreMatrix&) const = default;
};

// One test set: human judgments plus every metric's scores, aligned to the
// same systems (by name) and the same surviving segments (by segment id).
struct EvalSet {
  std::string name;
  ScoreMatrix human;
  std::map<std::string, ScoreMatrix> metrics;

  bool operator==(const EvalSet&) const = default;
};

// Per-file score orientation; files not mentioned default to
// higher-is-better. Keys are file stems ("humans" or the metric name);
// a directory prefix and a ".tsv" suffix are accepted and stripped.
struct Orientation {
  std::map<std::string, bool> higher_is_better;
};

// Arithmetic mean of each system's row, in row order.
std::vector<double> system_means(const ScoreMatrix& m);

// Parses meta.json ({"<file>": {"higher_is_better": bool}, ...}).
Orientation read_orientation_file(const std::string& path);

// Loads <dir>/humans.tsv and <dir>/metrics/*.tsv. Segments with any missing
// human score are dropped everywhere; a missing metric score on a surviving
// segment is an error. Orientation comes from <dir>/meta.json when present
// unless an explicit config is passed. The EvalSet name is the directory's
// base name.
EvalSet load_eval_set(const std::string& directory);
EvalSet load_eval_set(const std::string& directory, const Orientation& config);

// Writes the set back out in the same layout (scores are already oriented,
// so no meta.json is emitted). Numbers round-trip exactly.
void save_eval_set(const EvalSet& eval, const std::string& directory);

}  // namespace metaeval
