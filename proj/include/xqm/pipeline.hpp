#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xqm/corpus.hpp"

namespace xqm::pipeline {

/// Everything a stage may need. Input data lives under
/// data_dir/<direction>/{pairs,candidates,decisions}.tsv; every artifact goes
/// to out_dir.
struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "xqm-out";
  std::filesystem::path templates_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path calibration_path;  // empty: out_dir/calibration.tsv
  std::vector<Direction> directions;

  int required_votes = 2;
  std::vector<Direction> single_annotator;  // these directions need one vote

  int k_max = 5;
  std::uint64_t seed = 0;
  int threads = 1;

  int n_per_direction = 102;
  bool with_replacement = false;
  int system_repeats = 100;
  int mono_repeats = 25;
  int lgn_repeats = 10;
  std::vector<int> levels = {0, 1, 2, 3, 4, 5};
  std::vector<double> targets;  // empty: 0, 2.5, ..., 22.5

  bool use_lgn = false;
  std::vector<int> lang_counts;  // empty: all configured directions
  std::vector<int> stability_repeats = {5, 10, 25};
};

struct StageResult {
  std::string stage;
  std::vector<std::filesystem::path> outputs;
  bool cached = false;  // inputs unchanged since the last successful run
  std::string summary;
};

StageResult run_ingest(const RunConfig& config);
StageResult run_synth(const RunConfig& config);
StageResult run_prompts(const RunConfig& config);
StageResult run_assemble(const RunConfig& config);
/// Writes the matrix even when some metrics fail, then throws ScorerError.
StageResult run_score(const RunConfig& config);
StageResult run_fit_lgn(const RunConfig& config);
StageResult run_analyze(const RunConfig& config);

/// ingest -> synth -> assemble -> score -> fit-lgn -> analyze
std::vector<StageResult> run_all(const RunConfig& config);

}  // namespace xqm::pipeline
