// Command-line front end: meta-evaluates machine translation metrics against
// human judgments on one evaluation set. Reports are deterministic byte for
// byte given the same inputs and settings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metaeval/eval_data.hpp"
#include "metaeval/format.hpp"
#include "metaeval/meta_metrics.hpp"
#include "metaeval/perm_engine.hpp"
#include "metaeval/rng.hpp"
#include "metaeval/robustness.hpp"
#include "metaeval/significance.hpp"
#include "metaeval/version.hpp"

namespace {

using Json = nlohmann::ordered_json;
using metaeval::format_double;

constexpr const char* kClusterNote =
    "the greedy clustering can place two metrics that are not significantly "
    "different from each other in different clusters";

std::vector<metaeval::Meta> parse_metas(const std::string& choice) {
  if (choice == "spa") return {metaeval::Meta::kSpa};
  if (choice == "pa") return {metaeval::Meta::kPa};
  return {metaeval::Meta::kSpa, metaeval::Meta::kPa};
}

void emit(const std::string& report, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << report;
    return;
  }
  std::ofstream out(output_path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open output file '" + output_path + "'");
  out << report;
  if (!out) throw std::runtime_error("write failed on '" + output_path + "'");
}

void tsv_header(std::ostringstream& os, const char* command,
                const metaeval::EvalSet& eval) {
  os << "# metaeval " << metaeval::kVersion << "\n";
  os << "# command: " << command << "\n";
  os << "# evalset: " << eval.name << "\n";
  os << "# systems: " << eval.human.systems() << "\n";
  os << "# segments: " << eval.human.segments() << "\n";
  os << "# metrics: " << eval.metrics.size() << "\n";
}

Json envelope(const char* command, const metaeval::EvalSet& eval) {
  Json doc;
  doc["tool"] = "metaeval";
  doc["version"] = metaeval::kVersion;
  doc["command"] = command;
  doc["evalset"] = Json{{"name", eval.name},
                        {"systems", eval.human.systems()},
                        {"segments", eval.human.segments()},
                        {"metrics", eval.metrics.size()}};
  return doc;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------- score --

struct ScoreOpts {
  std::string evalset;
  std::string meta = "both";
  std::size_t permutations = metaeval::kDefaultPermutations;
  std::uint64_t seed = 0;
  bool breakdown = false;
  std::string format = "tsv";
  std::string output;
};

int run_score(const ScoreOpts& opt) {
  const metaeval::EvalSet eval = metaeval::load_eval_set(opt.evalset);
  const metaeval::EvalCache cache =
      metaeval::build_eval_cache(eval, opt.seed, opt.permutations);

  std::vector<metaeval::MetaScore> scores;
  for (const auto& [name, pm] : cache.metric_p)
    scores.push_back(metaeval::meta_score(name, cache.human_p, pm));
  const bool by_pa = opt.meta == "pa";
  std::sort(scores.begin(), scores.end(),
            [&](const metaeval::MetaScore& a, const metaeval::MetaScore& b) {
              const double ka = by_pa ? a.pa : a.spa;
              const double kb = by_pa ? b.pa : b.spa;
              if (ka != kb) return ka > kb;
              return a.metric_name < b.metric_name;
            });

  if (opt.format == "json") {
    Json doc = envelope("score", eval);
    doc["settings"] = Json{{"permutations", opt.permutations},
                           {"seed", opt.seed},
                           {"sorted_by", by_pa ? "pa" : "spa"}};
    Json rows = Json::array();
    for (const auto& ms : scores) {
      Json row{{"metric", ms.metric_name}, {"spa", ms.spa},
               {"pa", ms.pa},             {"tau", ms.tau},
               {"concordant", ms.pa_concordant}, {"pairs", ms.pair_count}};
      if (opt.breakdown) {
        Json pairs = Json::array();
        for (const auto& r : metaeval::pair_breakdown(
                 cache.human_p, cache.metric_p.at(ms.metric_name))) {
          pairs.push_back(Json{{"system_i", cache.human_p.system_names[r.i]},
                               {"system_j", cache.human_p.system_names[r.j]},
                               {"p_human", r.p_h},
                               {"p_metric", r.p_m},
                               {"spa_term", r.spa_term},
                               {"pa_term", r.pa_term}});
        }
        row["breakdown"] = std::move(pairs);
      }
      rows.push_back(std::move(row));
    }
    doc["results"] = std::move(rows);
    emit(dump(doc), opt.output);
    return 0;
  }

  std::ostringstream os;
  tsv_header(os, "score", eval);
  os << "# permutations: " << opt.permutations << "\n";
  os << "# seed: " << opt.seed << "\n";
  os << "# sorted_by: " << (by_pa ? "pa" : "spa") << "\n";
  os << "metric\tspa\tpa\ttau\tconcordant\tpairs\n";
  for (const auto& ms : scores)
    os << ms.metric_name << '\t' << format_double(ms.spa) << '\t'
       << format_double(ms.pa) << '\t' << format_double(ms.tau) << '\t'
       << ms.pa_concordant << '\t' << ms.pair_count << "\n";
  if (opt.breakdown) {
    for (const auto& ms : scores) {
      os << "\n# breakdown: " << ms.metric_name << "\n";
      os << "system_i\tsystem_j\tp_human\tp_metric\tspa_term\tpa_term\n";
      for (const auto& r : metaeval::pair_breakdown(
               cache.human_p, cache.metric_p.at(ms.metric_name)))
        os << cache.human_p.system_names[r.i] << '\t'
           << cache.human_p.system_names[r.j] << '\t' << format_double(r.p_h)
           << '\t' << format_double(r.p_m) << '\t' << format_double(r.spa_term)
           << '\t' << r.pa_term << "\n";
    }
  }
  emit(os.str(), opt.output);
  return 0;
}

// -------------------------------------------------------------- compare --

struct CompareOpts {
  std::string evalset;
  std::string meta = "both";
  std::size_t permutations = metaeval::kDefaultPermutations;
  std::size_t resamples = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "tsv";
  std::string output;
};

int run_compare(const CompareOpts& opt) {
  const metaeval::EvalSet eval = metaeval::load_eval_set(opt.evalset);
  if (eval.metrics.size() < 2)
    throw std::invalid_argument("compare needs at least 2 metrics, found " +
                                std::to_string(eval.metrics.size()));

  struct Analysis {
    metaeval::Meta meta;
    metaeval::MetricSigMatrix sig;
    metaeval::ClusterAssignment clusters;
    std::size_t significant = 0;
  };
  std::vector<Analysis> analyses;
  for (const metaeval::Meta meta : parse_metas(opt.meta)) {
    Analysis a;
    a.meta = meta;
    a.sig = metaeval::significance_matrix(eval, meta, opt.resamples, opt.seed,
                                          opt.permutations, opt.threads);
    a.clusters = metaeval::greedy_clusters(a.sig, opt.alpha);
    a.significant = metaeval::significant_comparisons(a.sig, opt.alpha);
    analyses.push_back(std::move(a));
  }

  const std::size_t m = eval.metrics.size();
  const std::size_t comparisons = m * (m - 1) / 2;

  if (opt.format == "json") {
    Json doc = envelope("compare", eval);
    doc["settings"] = Json{{"permutations", opt.permutations},
                           {"resamples", opt.resamples},
                           {"alpha", opt.alpha},
                           {"seed", opt.seed}};
    Json blocks = Json::array();
    for (const Analysis& a : analyses) {
      Json leaderboard = Json::array();
      for (std::size_t r = 0; r < m; ++r)
        leaderboard.push_back(Json{{"rank", a.clusters.ranks[r]},
                                   {"metric", a.sig.metric_names[r]},
                                   {"score", a.sig.meta_scores[r]}});
      Json pvals = Json::array();
      for (std::size_t r = 0; r < m; ++r) {
        Json row = Json::array();
        for (std::size_t c = 0; c < m; ++c) row.push_back(a.sig.pvals(r, c));
        pvals.push_back(std::move(row));
      }
      blocks.push_back(Json{{"meta", metaeval::meta_name(a.meta)},
                            {"leaderboard", std::move(leaderboard)},
                            {"p_values", std::move(pvals)},
                            {"significant_comparisons", a.significant},
                            {"comparisons", comparisons},
                            {"clusters", a.clusters.clusters},
                            {"note", kClusterNote}});
    }
    doc["analyses"] = std::move(blocks);
    emit(dump(doc), opt.output);
    return 0;
  }

  std::ostringstream os;
  bool first = true;
  for (const Analysis& a : analyses) {
    if (!first) os << "\n";
    first = false;
    tsv_header(os, "compare", eval);
    os << "# meta: " << metaeval::meta_name(a.meta) << "\n";
    os << "# permutations: " << opt.permutations << "\n";
    os << "# resamples: " << opt.resamples << "\n";
    os << "# alpha: " << format_double(opt.alpha) << "\n";
    os << "# seed: " << opt.seed << "\n";
    os << "# significant_comparisons: " << a.significant << " of "
       << comparisons << "\n";
    os << "# clusters: " << a.clusters.clusters << "\n";
    os << "# note: " << kClusterNote << "\n";
    os << "rank\tmetric\tscore";
    for (const std::string& name : a.sig.metric_names) os << "\tp_vs:" << name;
    os << "\n";
    for (std::size_t r = 0; r < m; ++r) {
      os << a.clusters.ranks[r] << '\t' << a.sig.metric_names[r] << '\t'
         << format_double(a.sig.meta_scores[r]);
      for (std::size_t c = 0; c < m; ++c) {
        if (c == r)
          os << "\t-";
        else
          os << '\t' << format_double(a.sig.pvals(r, c));
      }
      os << "\n";
    }
  }
  emit(os.str(), opt.output);
  return 0;
}

// ------------------------------------------------------------ stability --

struct StabilityOpts {
  std::string evalset;
  std::string meta = "both";
  std::size_t permutations = metaeval::kDefaultPermutations;
  std::size_t trials = 1000;
  std::vector<std::size_t> systems_kept;  // empty: every k in [2, N]
  std::uint64_t seed = 0;
  std::string format = "tsv";
  std::string output;
};

int run_stability(const StabilityOpts& opt) {
  const metaeval::EvalSet eval = metaeval::load_eval_set(opt.evalset);
  std::vector<std::size_t> k_values = opt.systems_kept;
  if (k_values.empty())
    for (std::size_t k = 2; k <= eval.human.systems(); ++k)
      k_values.push_back(k);

  const std::vector<metaeval::StabilityResult> results =
      metaeval::system_ablation_stability(eval, parse_metas(opt.meta),
                                          k_values, opt.trials, opt.seed,
                                          opt.permutations);

  if (opt.format == "json") {
    Json doc = envelope("stability", eval);
    doc["settings"] = Json{{"permutations", opt.permutations},
                           {"trials", opt.trials},
                           {"seed", opt.seed}};
    Json rows = Json::array();
    for (const auto& res : results) {
      Json row{{"meta", metaeval::meta_name(res.meta)},
               {"systems_kept", res.systems_kept}};
      if (res.mean_r)
        row["mean_r"] = *res.mean_r;
      else
        row["mean_r"] = nullptr;
      row["trials"] = res.trials;
      row["degenerate_trials"] = res.degenerate_trials;
      rows.push_back(std::move(row));
    }
    doc["results"] = std::move(rows);
    emit(dump(doc), opt.output);
    return 0;
  }

  std::ostringstream os;
  tsv_header(os, "stability", eval);
  os << "# permutations: " << opt.permutations << "\n";
  os << "# trials: " << opt.trials << "\n";
  os << "# seed: " << opt.seed << "\n";
  os << "meta\tsystems_kept\tmean_r\ttrials\tdegenerate_trials\n";
  for (const auto& res : results) {
    os << metaeval::meta_name(res.meta) << '\t' << res.systems_kept << '\t';
    if (res.mean_r)
      os << format_double(*res.mean_r);
    else
      os << "NA";
    os << '\t' << res.trials << '\t' << res.degenerate_trials << "\n";
  }
  emit(os.str(), opt.output);
  return 0;
}

// ------------------------------------------------------------------- ci --

struct CiOpts {
  std::string evalset;
  std::string metric;
  std::string meta = "both";
  std::size_t permutations = metaeval::kDefaultPermutations;
  std::size_t trials = 1000;
  std::vector<std::size_t> sample_sizes;  // empty: the full segment count
  bool allow_oversample = false;
  std::uint64_t seed = 0;
  std::string format = "tsv";
  std::string output;
};

int run_ci(const CiOpts& opt) {
  const metaeval::EvalSet eval = metaeval::load_eval_set(opt.evalset);
  std::vector<std::size_t> sizes = opt.sample_sizes;
  if (sizes.empty()) sizes.push_back(eval.human.segments());

  const std::vector<metaeval::CIResult> results = metaeval::bootstrap_ci(
      eval, opt.metric, parse_metas(opt.meta), sizes, opt.trials, opt.seed,
      opt.permutations, opt.allow_oversample);

  if (opt.format == "json") {
    Json doc = envelope("ci", eval);
    doc["metric"] = opt.metric;
    doc["settings"] = Json{{"permutations", opt.permutations},
                           {"trials", opt.trials},
                           {"seed", opt.seed},
                           {"allow_oversample", opt.allow_oversample}};
    Json rows = Json::array();
    for (const auto& res : results)
      rows.push_back(Json{{"meta", metaeval::meta_name(res.meta)},
                          {"sample_size", res.sample_size},
                          {"lower", res.lower},
                          {"point", res.point},
                          {"upper", res.upper},
                          {"trials", res.trials}});
    doc["results"] = std::move(rows);
    emit(dump(doc), opt.output);
    return 0;
  }

  std::ostringstream os;
  tsv_header(os, "ci", eval);
  os << "# metric: " << opt.metric << "\n";
  os << "# permutations: " << opt.permutations << "\n";
  os << "# trials: " << opt.trials << "\n";
  os << "# seed: " << opt.seed << "\n";
  os << "meta\tsample_size\tlower\tpoint\tupper\ttrials\n";
  for (const auto& res : results)
    os << metaeval::meta_name(res.meta) << '\t' << res.sample_size << '\t'
       << format_double(res.lower) << '\t' << format_double(res.point) << '\t'
       << format_double(res.upper) << '\t' << res.trials << "\n";
  emit(os.str(), opt.output);
  return 0;
}

// ----------------------------------------------------------- oracle-check --

struct OracleOpts {
  std::size_t instances = 20;
  std::size_t permutations = 4096;
  std::uint64_t seed = 0;
  std::string output;
};

int run_oracle_check(const OracleOpts& opt) {
  if (opt.instances == 0)
    throw std::invalid_argument("need at least 1 instance");
  // Binomial bound: the Monte Carlo estimate has standard deviation at most
  // sqrt(0.25 / B), so four of those is a comfortable deterministic margin.
  const double tolerance =
      4.0 * std::sqrt(0.25 / static_cast<double>(opt.permutations));

  std::ostringstream os;
  os << "# metaeval " << metaeval::kVersion << "\n";
  os << "# command: oracle-check\n";
  os << "# instances: " << opt.instances << "\n";
  os << "# permutations: " << opt.permutations << "\n";
  os << "# seed: " << opt.seed << "\n";
  os << "# tolerance: " << format_double(tolerance) << "\n";
  os << "instance\tsegments\texact\tmonte_carlo\tabs_error\tstatus\n";

  std::size_t passed = 0;
  for (std::size_t inst = 0; inst < opt.instances; ++inst) {
    const metaeval::rng::Stream gen(opt.seed, metaeval::rng::kSynthetic,
                                    500 + inst);
    const std::size_t segments = 6 + gen.index(0, 15);  // 6..20, small
                                                        // enough to enumerate
    const double gap = 0.8 * gen.unit(1) - 0.2;

    metaeval::ScoreMatrix sm;
    sm.system_names = {"candidate", "reference"};
    for (std::size_t s = 0; s < segments; ++s)
      sm.segment_ids.push_back("seg" + std::to_string(s));
    sm.scores = metaeval::Matrix(2, segments);
    for (std::size_t s = 0; s < segments; ++s) {
      sm.scores(0, s) = gap + 2.0 * gen.unit(2 + 2 * s) - 1.0;
      sm.scores(1, s) = 2.0 * gen.unit(3 + 2 * s) - 1.0;
    }

    const double exact = metaeval::exact_pairwise_p_value(sm, 0, 1);
    const metaeval::SignMatrix signs = metaeval::generate_sign_matrix(
        gen.bits(1000000), opt.permutations, segments);
    const double mc =
        metaeval::pairwise_p_values(metaeval::project_systems(sm, signs))
            .p(0, 1);
    const double err = std::abs(mc - exact);
    const bool ok = err <= tolerance;
    if (ok) ++passed;
    os << inst << '\t' << segments << '\t' << format_double(exact) << '\t'
       << format_double(mc) << '\t' << format_double(err) << '\t'
       << (ok ? "ok" : "FAIL") << "\n";
  }
  os << "oracle check: " << passed << " of " << opt.instances
     << " within tolerance\n";
  emit(os.str(), opt.output);
  return passed == opt.instances ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Meta-evaluation of machine translation metrics against human "
      "judgments: significance-aware pairwise agreement, metric-vs-metric "
      "significance with clustering, bootstrap confidence intervals, and "
      "system-ablation stability."};
  app.set_version_flag("--version",
                       std::string("metaeval ") + metaeval::kVersion);
  app.require_subcommand(1);

  ScoreOpts score_opts;
  CLI::App* score = app.add_subcommand(
      "score", "Meta-scores for every metric in an evaluation set");
  score->add_option("--evalset", score_opts.evalset,
                    "Evaluation set directory")
      ->required();
  score->add_option("--meta", score_opts.meta,
                    "Meta-metric that orders the rows: spa, pa, or both")
      ->check(CLI::IsMember({"spa", "pa", "both"}))
      ->capture_default_str();
  score->add_option("--perms", score_opts.permutations,
                    "Permutations per paired significance test")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  score->add_option("--seed", score_opts.seed, "Master random seed")
      ->capture_default_str();
  score->add_flag("--breakdown", score_opts.breakdown,
                  "Append per-system-pair agreement terms");
  score->add_option("--format", score_opts.format, "Report format")
      ->check(CLI::IsMember({"tsv", "json"}))
      ->capture_default_str();
  score->add_option("--output", score_opts.output,
                    "Write the report to this file instead of stdout");

  CompareOpts compare_opts;
  CLI::App* compare = app.add_subcommand(
      "compare",
      "Metric-vs-metric significance matrix and significance clusters");
  compare->add_option("--evalset", compare_opts.evalset,
                      "Evaluation set directory")
      ->required();
  compare->add_option("--meta", compare_opts.meta,
                      "Meta-metric(s) to analyze: spa, pa, or both")
      ->check(CLI::IsMember({"spa", "pa", "both"}))
      ->capture_default_str();
  compare->add_option("--perms", compare_opts.permutations,
                      "Permutations per paired significance test")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare->add_option("--resamples", compare_opts.resamples,
                      "Score-swap resamples per metric comparison")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare->add_option("--alpha", compare_opts.alpha,
                      "Significance threshold for clustering")
      ->capture_default_str();
  compare->add_option("--seed", compare_opts.seed, "Master random seed")
      ->capture_default_str();
  compare->add_option("--threads", compare_opts.threads,
                      "Worker threads (never changes the results)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare->add_option("--format", compare_opts.format, "Report format")
      ->check(CLI::IsMember({"tsv", "json"}))
      ->capture_default_str();
  compare->add_option("--output", compare_opts.output,
                      "Write the report to this file instead of stdout");

  StabilityOpts stability_opts;
  CLI::App* stability = app.add_subcommand(
      "stability",
      "Leaderboard stability under random system-subset ablation");
  stability->add_option("--evalset", stability_opts.evalset,
                        "Evaluation set directory")
      ->required();
  stability->add_option("--meta", stability_opts.meta,
                        "Meta-metric(s) to analyze: spa, pa, or both")
      ->check(CLI::IsMember({"spa", "pa", "both"}))
      ->capture_default_str();
  stability->add_option("--perms", stability_opts.permutations,
                        "Permutations per paired significance test")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  stability->add_option("--trials", stability_opts.trials,
                        "Random subsets per kept-system count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  stability->add_option(
      "--systems-kept", stability_opts.systems_kept,
      "Comma-separated kept-system counts (default: every count from 2 up)")
      ->delimiter(',');
  stability->add_option("--seed", stability_opts.seed, "Master random seed")
      ->capture_default_str();
  stability->add_option("--format", stability_opts.format, "Report format")
      ->check(CLI::IsMember({"tsv", "json"}))
      ->capture_default_str();
  stability->add_option("--output", stability_opts.output,
                        "Write the report to this file instead of stdout");

  CiOpts ci_opts;
  CLI::App* ci = app.add_subcommand(
      "ci", "Bootstrap confidence intervals for one metric's meta-scores");
  ci->add_option("--evalset", ci_opts.evalset, "Evaluation set directory")
      ->required();
  ci->add_option("--metric", ci_opts.metric, "Metric to analyze")->required();
  ci->add_option("--meta", ci_opts.meta,
                 "Meta-metric(s) to analyze: spa, pa, or both")
      ->check(CLI::IsMember({"spa", "pa", "both"}))
      ->capture_default_str();
  ci->add_option("--perms", ci_opts.permutations,
                 "Permutations per paired significance test")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ci->add_option("--trials", ci_opts.trials, "Bootstrap replicates per size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ci->add_option("--sample-sizes", ci_opts.sample_sizes,
                 "Comma-separated segment resample sizes (default: all)")
      ->delimiter(',');
  ci->add_flag("--allow-oversample", ci_opts.allow_oversample,
               "Permit resample sizes beyond the segment count");
  ci->add_option("--seed", ci_opts.seed, "Master random seed")
      ->capture_default_str();
  ci->add_option("--format", ci_opts.format, "Report format")
      ->check(CLI::IsMember({"tsv", "json"}))
      ->capture_default_str();
  ci->add_option("--output", ci_opts.output,
                 "Write the report to this file instead of stdout");

  OracleOpts oracle_opts;
  CLI::App* oracle = app.add_subcommand(
      "oracle-check",
      "Cross-validate the permutation engine against exact enumeration");
  oracle->add_option("--instances", oracle_opts.instances,
                     "Random instances to check")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle->add_option("--perms", oracle_opts.permutations,
                     "Permutations for the Monte Carlo side")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  oracle->add_option("--seed", oracle_opts.seed, "Master random seed")
      ->capture_default_str();
  oracle->add_option("--output", oracle_opts.output,
                     "Write the report to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (score->parsed()) return run_score(score_opts);
    if (compare->parsed()) return run_compare(compare_opts);
    if (stability->parsed()) return run_stability(stability_opts);
    if (ci->parsed()) return run_ci(ci_opts);
    if (oracle->parsed()) return run_oracle_check(oracle_opts);
  } catch (const std::exception& e) {
    std::cerr << "metaeval: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
