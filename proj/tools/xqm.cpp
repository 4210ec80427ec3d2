#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "xqm/error.hpp"
#include "xqm/pipeline.hpp"
#include "xqm/report.hpp"

namespace {

using xqm::pipeline::RunConfig;
using xqm::pipeline::StageResult;

struct Args {
  std::string data_dir;
  std::string out_dir = "xqm-out";
  std::string templates_dir;
  std::string metrics_path;
  std::string calibration_path;
  std::vector<std::string> directions;
  std::vector<std::string> single_annotator;
  int required_votes = 2;
  int k_max = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  int n_per_direction = 102;
  bool with_replacement = false;
  std::vector<int> repeats;
  int mono_repeats = 25;
  std::vector<int> levels = {0, 1, 2, 3, 4, 5};
  std::vector<double> targets;
  bool use_lgn = false;
  std::vector<int> lang_counts;
};

std::vector<xqm::Direction> parse_directions(const std::vector<std::string>& items) {
  std::vector<xqm::Direction> out;
  for (const auto& s : items) {
    try {
      out.push_back(xqm::Direction::parse(s));
    } catch (const xqm::DomainError& e) {
      throw xqm::UsageError(e.what());
    }
  }
  return out;
}

int single_repeat(const Args& a, std::string_view stage, int fallback) {
  if (a.repeats.empty()) return fallback;
  if (a.repeats.size() != 1) {
    throw xqm::UsageError("--repeats takes one value for " + std::string(stage));
  }
  return a.repeats.front();
}

RunConfig to_config(const Args& a, std::string_view stage) {
  RunConfig c;
  c.data_dir = a.data_dir;
  c.out_dir = a.out_dir;
  c.templates_dir = a.templates_dir;
  c.metrics_path = a.metrics_path;
  c.calibration_path = a.calibration_path;
  c.directions = parse_directions(a.directions);
  c.single_annotator = parse_directions(a.single_annotator);
  c.required_votes = a.required_votes;
  c.k_max = a.k_max;
  c.seed = a.seed;
  c.threads = a.threads;
  c.n_per_direction = a.n_per_direction;
  c.with_replacement = a.with_replacement;
  c.mono_repeats = a.mono_repeats;
  c.levels = a.levels;
  c.targets = a.targets;
  c.use_lgn = a.use_lgn;
  c.lang_counts = a.lang_counts;
  // --repeats: systems per target (assemble/run), fits per direction
  // (fit-lgn), or the repeat counts of the stability report (analyze).
  if (stage == "analyze") {
    if (!a.repeats.empty()) c.stability_repeats = a.repeats;
  } else if (stage == "fit-lgn") {
    c.lgn_repeats = single_repeat(a, stage, c.lgn_repeats);
  } else {
    c.system_repeats = single_repeat(a, stage, c.system_repeats);
  }
  for (int r : c.stability_repeats) {
    if (r < 2) throw xqm::UsageError("stability repeat counts must be >= 2");
  }
  if (c.threads < 1) throw xqm::UsageError("--threads must be >= 1");
  return c;
}

void check_paths(const Args& a, std::string_view stage) {
  namespace fs = std::filesystem;
  auto need_dir = [](const std::string& p, const char* flag) {
    if (p.empty()) throw xqm::UsageError(std::string(flag) + " is required");
    if (!fs::is_directory(p)) throw xqm::UsageError(std::string(flag) + " '" + p + "' is not a directory");
  };
  auto need_file = [](const std::string& p, const char* flag) {
    if (p.empty()) throw xqm::UsageError(std::string(flag) + " is required");
    if (!fs::is_regular_file(p)) throw xqm::UsageError(std::string(flag) + " '" + p + "' does not exist");
  };
  if (stage == "ingest" || stage == "synth" || stage == "prompts" || stage == "run") {
    need_dir(a.data_dir, "--data");
  }
  if (stage == "prompts") need_dir(a.templates_dir, "--templates");
  if (stage == "score" || stage == "run") need_file(a.metrics_path, "--metrics");
  if (!a.calibration_path.empty() && stage == "analyze" && a.use_lgn) {
    need_file(a.calibration_path, "--calibration");
  }
}

void print(const StageResult& r) {
  std::cout << r.stage << ": " << (r.cached ? "up to date" : r.summary) << "\n";
  for (const auto& p : r.outputs) std::cout << "  " << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel-quality benchmark builder and cross-lingual metric analysis"};
  app.set_version_flag("--version", xqm::report::tool_version());
  app.set_config("--config", "", "TOML or INI file providing option defaults");
  app.require_subcommand(1);

  Args a;
  app.add_option("--data", a.data_dir, "Corpus root with one <src>-<tgt>/ directory per direction");
  app.add_option("--out", a.out_dir, "Output directory")->capture_default_str();
  app.add_option("--templates", a.templates_dir, "Prompt template directory");
  app.add_option("--metrics", a.metrics_path, "Metric registry (INI)");
  app.add_option("--calibration", a.calibration_path, "Calibration TSV (default: <out>/calibration.tsv)");
  app.add_option("--directions", a.directions, "Directions to use, in order (default: all)")
      ->delimiter(',');
  app.add_option("--single-annotator", a.single_annotator,
                 "Directions accepted on a single vote")
      ->delimiter(',');
  app.add_option("--required-votes", a.required_votes, "Votes needed to accept a candidate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--k-max", a.k_max, "Maximum errors per pseudo translation")
      ->capture_default_str()
      ->check(CLI::Range(0, 5));
  app.add_option("--seed", a.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", a.threads, "Worker threads")->capture_default_str();
  app.add_option("--n-per-direction", a.n_per_direction,
                 "Triplets sampled per direction (and per level when fitting LGN)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--with-replacement", a.with_replacement, "Sample triplets with replacement");
  app.add_option("--repeats", a.repeats,
                 "assemble/run: repeats per target; fit-lgn: fits per direction; "
                 "analyze: stability repeat counts")
      ->delimiter(',');
  app.add_option("--mono-repeats", a.mono_repeats, "Repeats per monolingual (direction, level)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--levels", a.levels, "Quality levels")->delimiter(',')->check(CLI::Range(0, 5));
  app.add_option("--targets", a.targets, "Target MQM deductions for multilingual systems")
      ->delimiter(',');
  app.add_flag("--use-lgn", a.use_lgn, "Also report LGN-normalised results");
  app.add_option("--lang-counts", a.lang_counts, "Numbers of directions to correlate over")
      ->delimiter(',');

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "Parse and filter error candidates"},
      {"synth", "Enumerate pseudo translations into the triplet pool"},
      {"prompts", "Render error-injection prompts"},
      {"assemble", "Sample multilingual and monolingual pseudo systems"},
      {"score", "Score the pool with every registered metric"},
      {"fit-lgn", "Fit per-(metric, direction) normalisation"},
      {"analyze", "Correlation, CV, t-test and stability reports"},
      {"run", "ingest, synth, assemble, score, fit-lgn and analyze in order"}};
  for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : xqm::exit_code(xqm::ErrorKind::Usage);
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    check_paths(a, stage);
    const auto config = to_config(a, stage);
    if (stage == "ingest") print(xqm::pipeline::run_ingest(config));
    else if (stage == "synth") print(xqm::pipeline::run_synth(config));
    else if (stage == "prompts") print(xqm::pipeline::run_prompts(config));
    else if (stage == "assemble") print(xqm::pipeline::run_assemble(config));
    else if (stage == "score") print(xqm::pipeline::run_score(config));
    else if (stage == "fit-lgn") print(xqm::pipeline::run_fit_lgn(config));
    else if (stage == "analyze") print(xqm::pipeline::run_analyze(config));
    else {
      auto lgn = config;
      lgn.lgn_repeats = single_repeat(a, "fit-lgn", lgn.lgn_repeats);
      for (const auto& r : xqm::pipeline::run_all(lgn)) print(r);
    }
  } catch (const xqm::Error& e) {
    std::cerr << "xqm " << stage << ": " << e.what() << "\n";
    return xqm::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "xqm " << stage << ": internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
