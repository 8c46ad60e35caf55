#include "metaeval/eval_data.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "metaeval/format.hpp"

namespace fs = std::filesystem;

namespace metaeval {
namespace {

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& msg) {
  std::ostringstream os;
  os << path.string();
  if (line > 0) os << ":" << line;
  os << ": " << msg;
  throw LoadError(os.str());
}

[[noreturn]] void fail(const fs::path& path, const std::string& msg) {
  fail(path, 0, msg);
}

// One parsed TSV file, before alignment. Cells are nullopt for NA.
struct RawTable {
  std::vector<std::string> systems;
  std::vector<std::string> segment_ids;
  std::vector<std::vector<std::optional<double>>> cells;  // one row per segment
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

RawTable parse_score_tsv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");

  RawTable table;
  std::string line;
  std::size_t lineno = 0;
  std::unordered_set<std::string> seen_segments;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;

    std::vector<std::string> fields = split_tabs(line);
    if (lineno == 1) {
      if (fields.empty() || fields[0] != "segment_id")
        fail(path, lineno, "header must start with 'segment_id'");
      if (fields.size() < 2) fail(path, lineno, "header lists no systems");
      std::unordered_set<std::string> seen_systems;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        if (fields[i].empty()) fail(path, lineno, "empty system name in header");
        if (!seen_systems.insert(fields[i]).second)
          fail(path, lineno, "duplicate system name '" + fields[i] + "'");
        table.systems.push_back(fields[i]);
      }
      continue;
    }
    if (fields.size() != table.systems.size() + 1)
      fail(path, lineno, "expected " + std::to_string(table.systems.size() + 1) +
                             " fields, got " + std::to_string(fields.size()));
    if (fields[0].empty()) fail(path, lineno, "empty segment id");
    if (!seen_segments.insert(fields[0]).second)
      fail(path, lineno, "duplicate segment id '" + fields[0] + "'");
    table.segment_ids.push_back(fields[0]);

    std::vector<std::optional<double>> row;
    row.reserve(table.systems.size());
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::string& cell = fields[i];
      if (cell == "NA") {
        row.push_back(std::nullopt);
        continue;
      }
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last)
        fail(path, lineno, "cell '" + cell + "' is not a decimal number or NA");
      row.push_back(value);
    }
    table.cells.push_back(std::move(row));
  }
  if (lineno == 0) fail(path, "file is empty");
  if (table.segment_ids.empty()) fail(path, "file has no segment rows");
  return table;
}

std::string normalize_orientation_key(const std::string& key) {
  std::string k = key;
  std::size_t slash = k.find_last_of('/');
  if (slash != std::string::npos) k = k.substr(slash + 1);
  if (k.size() > 4 && k.compare(k.size() - 4, 4, ".tsv") == 0)
    k = k.substr(0, k.size() - 4);
  return k;
}

bool wants_negation(const Orientation& config, const std::string& stem) {
  auto it = config.higher_is_better.find(stem);
  return it != config.higher_is_better.end() && !it->second;
}

// Builds the aligned score matrix for one metric file: human system order,
// surviving segments in human row order.
ScoreMatrix align_metric(const fs::path& path, const RawTable& raw,
                         const ScoreMatrix& human,
                         const std::vector<std::string>& all_human_segments,
                         bool negate) {
  // Same system set, any order.
  {
    std::vector<std::string> a = raw.systems, b = human.system_names;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) fail(path, "system header does not match humans.tsv");
  }
  // Same segment id set as humans.tsv before filtering, any order.
  {
    std::vector<std::string> a = raw.segment_ids, b = all_human_segments;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) {
      std::vector<std::string> missing;
      std::set_difference(b.begin(), b.end(), a.begin(), a.end(),
                          std::back_inserter(missing));
      if (!missing.empty())
        fail(path, "missing segment id '" + missing.front() + "'");
      std::vector<std::string> extra;
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(extra));
      fail(path, "unknown segment id '" + extra.front() + "'");
    }
  }

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < raw.segment_ids.size(); ++r)
    row_of.emplace(raw.segment_ids[r], r);
  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t c = 0; c < raw.systems.size(); ++c)
    col_of.emplace(raw.systems[c], c);

  ScoreMatrix out;
  out.system_names = human.system_names;
  out.segment_ids = human.segment_ids;
  out.scores = Matrix(out.systems(), out.segments());
  for (std::size_t s = 0; s < out.segments(); ++s) {
    std::size_t r = row_of.at(out.segment_ids[s]);
    for (std::size_t i = 0; i < out.systems(); ++i) {
      const auto& cell = raw.cells[r][col_of.at(out.system_names[i])];
      if (!cell)
        fail(path, "NA for system '" + out.system_names[i] + "' on surviving segment '" +
                       out.segment_ids[s] + "'");
      out.scores(i, s) = negate ? -*cell : *cell;
    }
  }
  return out;
}

}  // namespace

std::vector<double> system_means(const ScoreMatrix& m) {
  std::vector<double> means(m.systems());
  for (std::size_t i = 0; i < m.systems(); ++i) {
    double sum = 0.0;
    const double* row = m.scores.row(i);
    for (std::size_t s = 0; s < m.segments(); ++s) sum += row[s];
    means[i] = sum / static_cast<double>(m.segments());
  }
  return means;
}

Orientation read_orientation_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(path, "top level must be a JSON object");

  Orientation config;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_object())
      fail(path, "entry '" + key + "' must be an object");
    bool higher = true;
    if (value.contains("higher_is_better")) {
      if (!value["higher_is_better"].is_boolean())
        fail(path, "entry '" + key + "': higher_is_better must be a boolean");
      higher = value["higher_is_better"].get<bool>();
    }
    std::string stem = normalize_orientation_key(key);
    if (!config.higher_is_better.emplace(stem, higher).second)
      fail(path, "entries collide on '" + stem + "'");
  }
  return config;
}

EvalSet load_eval_set(const std::string& directory) {
  fs::path dir(directory);
  fs::path meta_path = dir / "meta.json";
  Orientation config;
  if (fs::exists(meta_path)) config = read_orientation_file(meta_path.string());
  return load_eval_set(directory, config);
}

EvalSet load_eval_set(const std::string& directory, const Orientation& config) {
  fs::path dir(directory);
  if (!fs::is_directory(dir)) fail(dir, "not a directory");

  EvalSet eval;
  eval.name = dir.filename().string();
  if (eval.name.empty()) eval.name = dir.parent_path().filename().string();

  fs::path humans_path = dir / "humans.tsv";
  if (!fs::exists(humans_path)) fail(humans_path, "missing file");
  RawTable raw_human = parse_score_tsv(humans_path);
  if (raw_human.systems.size() < 2)
    fail(humans_path, "need at least 2 systems, found " +
                          std::to_string(raw_human.systems.size()));

  // Complete-case filtering is driven by the human matrix alone: a segment
  // survives iff every system has a human score on it.
  bool negate_human = wants_negation(config, "humans");
  eval.human.system_names = raw_human.systems;
  std::vector<std::size_t> surviving_rows;
  for (std::size_t r = 0; r < raw_human.segment_ids.size(); ++r) {
    bool complete = true;
    for (const auto& cell : raw_human.cells[r])
      if (!cell) { complete = false; break; }
    if (complete) {
      surviving_rows.push_back(r);
      eval.human.segment_ids.push_back(raw_human.segment_ids[r]);
    }
  }
  if (eval.human.segment_ids.empty())
    fail(humans_path, "no segment has complete human scores");
  eval.human.scores = Matrix(eval.human.systems(), eval.human.segments());
  for (std::size_t s = 0; s < surviving_rows.size(); ++s)
    for (std::size_t i = 0; i < eval.human.systems(); ++i) {
      double v = *raw_human.cells[surviving_rows[s]][i];
      eval.human.scores(i, s) = negate_human ? -v : v;
    }

  fs::path metrics_dir = dir / "metrics";
  if (!fs::is_directory(metrics_dir)) fail(metrics_dir, "missing directory");
  std::vector<fs::path> metric_files;
  for (const auto& entry : fs::directory_iterator(metrics_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tsv")
      metric_files.push_back(entry.path());
  std::sort(metric_files.begin(), metric_files.end());
  if (metric_files.empty()) fail(metrics_dir, "no metric .tsv files");

  for (const auto& path : metric_files) {
    std::string name = path.stem().string();
    RawTable raw = parse_score_tsv(path);
    eval.metrics.emplace(name, align_metric(path, raw, eval.human,
                                            raw_human.segment_ids,
                                            wants_negation(config, name)));
  }

  // Every orientation key must address humans or a loaded metric.
  for (const auto& [stem, _] : config.higher_is_better)
    if (stem != "humans" && !eval.metrics.count(stem))
      fail(dir / "meta.json", "entry '" + stem + "' matches no score file");

  return eval;
}

namespace {

void write_score_tsv(const fs::path& path, const ScoreMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out << "segment_id";
  for (const auto& name : m.system_names) out << '\t' << name;
  out << '\n';
  for (std::size_t s = 0; s < m.segments(); ++s) {
    out << m.segment_ids[s];
    for (std::size_t i = 0; i < m.systems(); ++i)
      out << '\t' << format_double(m.scores(i, s));
    out << '\n';
  }
  if (!out) fail(path, "write failed");
}

}  // namespace

void save_eval_set(const EvalSet& eval, const std::string& directory) {
  fs::path dir(directory);
  fs::create_directories(dir / "metrics");
  write_score_tsv(dir / "humans.tsv", eval.human);
  for (const auto& [name, m] : eval.metrics)
    write_score_tsv(dir / "metrics" / (name + ".tsv"), m);
}

}  // namespace metaeval
