#include "xqm/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "xqm/analysis.hpp"
#include "xqm/assembly.hpp"
#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/metrics.hpp"
#include "xqm/report.hpp"
#include "xqm/synthesis.hpp"

namespace xqm::pipeline {

namespace fs = std::filesystem;

namespace {

// Stage fingerprint: parameters and input file contents, never paths of the
// output directory or the thread count.
class Fingerprint {
 public:
  explicit Fingerprint(std::string_view stage) { add("stage", stage); }

  void add(std::string_view key, std::string_view value) {
    buf_ += key;
    buf_ += '=';
    buf_ += std::to_string(value.size());
    buf_ += ':';
    buf_ += value;
    buf_ += '\n';
  }
  void add(std::string_view key, long long value) { add(key, std::to_string(value)); }
  void add_file(std::string_view key, const fs::path& path) {
    add(key, io::sha256_hex(io::read_file(path)));
  }
  std::string hex() const { return io::sha256_hex(buf_); }

 private:
  std::string buf_;
};

fs::path stamp_path(const RunConfig& c, std::string_view stage) {
  return c.out_dir / ".stamps" / (std::string(stage) + ".sha256");
}

bool up_to_date(const RunConfig& c, std::string_view stage, const std::string& hash,
                const std::vector<fs::path>& outputs) {
  const auto stamp = stamp_path(c, stage);
  if (!fs::exists(stamp)) return false;
  if (io::read_file(stamp) != hash + "\n") return false;
  return std::all_of(outputs.begin(), outputs.end(), [](const fs::path& p) { return fs::exists(p); });
}

void write_stamp(const RunConfig& c, std::string_view stage, const std::string& hash) {
  io::write_file_atomic(stamp_path(c, stage), hash + "\n");
}

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::exists(path)) throw DependencyError(std::string(what) + " not found: " + path.string());
}

void require_artifact(const fs::path& path, std::string_view producing_stage) {
  if (!fs::exists(path)) {
    throw DependencyError("missing " + path.filename().string() + "; run `xqm " +
                          std::string(producing_stage) + "` first");
  }
}

std::string join_ints(const std::vector<int>& v) {
  std::vector<std::string> parts;
  for (int x : v) parts.push_back(std::to_string(x));
  return io::join(parts, ",");
}

std::string join_doubles(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(io::format_double(x));
  return io::join(parts, ",");
}

std::vector<Direction> ingest_directions(const RunConfig& c) {
  if (!c.directions.empty()) return c.directions;
  if (c.data_dir.empty() || !fs::is_directory(c.data_dir)) {
    throw ConfigError("data directory '" + c.data_dir.string() + "' does not exist");
  }
  std::vector<Direction> out;
  for (const auto& entry : fs::directory_iterator(c.data_dir)) {
    if (!entry.is_directory()) continue;
    try {
      out.push_back(Direction::parse(entry.path().filename().string()));
    } catch (const DomainError&) {
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConfigError("no <src>-<tgt> directories under " + c.data_dir.string());
  return out;
}

FilterConfig filter_config(const RunConfig& c) {
  FilterConfig fc;
  fc.default_required = c.required_votes;
  for (const auto& d : c.single_annotator) fc.required_by_direction[d.str()] = 1;
  return fc;
}

fs::path pool_path(const RunConfig& c) { return c.out_dir / "pool.tsv"; }
fs::path systems_path(const RunConfig& c) { return c.out_dir / "systems.jsonl"; }
fs::path mono_path(const RunConfig& c) { return c.out_dir / "monolingual.jsonl"; }
fs::path matrix_path(const RunConfig& c) { return c.out_dir / "matrix.tsv"; }
fs::path calibration_path(const RunConfig& c) {
  return c.calibration_path.empty() ? c.out_dir / "calibration.tsv" : c.calibration_path;
}
fs::path accepted_path(const RunConfig& c, const Direction& d) {
  return c.out_dir / "accepted" / (d.str() + ".tsv");
}

const std::vector<std::string>& accepted_header() {
  static const std::vector<std::string> h = {"id",   "pair_id",     "error_type",
                                             "half", "tagged_text", "annotators"};
  return h;
}

std::map<Direction, TripletPool> select_pools(std::map<Direction, TripletPool> pools,
                                              const RunConfig& c) {
  if (c.directions.empty()) return pools;
  std::map<Direction, TripletPool> out;
  for (const auto& d : c.directions) {
    auto it = pools.find(d);
    if (it == pools.end()) throw DependencyError("pool has no triplets for " + d.str());
    out.emplace(d, std::move(it->second));
  }
  return out;
}

std::vector<Direction> pool_directions(const std::map<Direction, TripletPool>& pools,
                                       const RunConfig& c) {
  if (!c.directions.empty()) return c.directions;
  std::vector<Direction> out;
  for (const auto& [d, _] : pools) out.push_back(d);
  return out;
}

}  // namespace

StageResult run_ingest(const RunConfig& c) {
  const auto directions = ingest_directions(c);
  Fingerprint fp("ingest");
  fp.add("required_votes", c.required_votes);
  for (const auto& d : c.single_annotator) fp.add("single_annotator", d.str());
  std::vector<fs::path> outputs;
  for (const auto& d : directions) {
    const auto dir = c.data_dir / d.str();
    require_file(dir / "pairs.tsv", "segment-pair file");
    require_file(dir / "candidates.tsv", "candidate file");
    if (!fs::exists(dir / "decisions.tsv")) {
      throw ConfigError("decision sheet " + (dir / "decisions.tsv").string() +
                        " is required (" + std::to_string(filter_config(c).required_for(d)) +
                        " vote(s) per candidate for " + d.str() + ")");
    }
    fp.add("direction", d.str());
    fp.add_file("pairs", dir / "pairs.tsv");
    fp.add_file("candidates", dir / "candidates.tsv");
    fp.add_file("decisions", dir / "decisions.tsv");
    outputs.push_back(accepted_path(c, d));
  }
  const auto report_path = c.out_dir / "ingest_report.tsv";
  const auto rejections_path = c.out_dir / "ingest_rejections.tsv";
  outputs.push_back(report_path);
  outputs.push_back(rejections_path);
  const auto hash = fp.hex();
  if (up_to_date(c, "ingest", hash, outputs)) return {"ingest", outputs, true, "up to date"};

  const report::Meta meta{"ingest", hash, c.seed};
  const auto fc = filter_config(c);
  std::string report_tsv = report::tsv_meta_line(meta) +
                           "direction\terror_type\tgenerated\tmalformed\trejected\taccepted\n";
  std::string rejections_tsv = report::tsv_meta_line(meta) +
                               "direction\tcandidate_id\tline\treason\n";
  std::size_t total_accepted = 0;
  for (const auto& d : directions) {
    const auto dir = c.data_dir / d.str();
    const auto pairs = load_segment_pairs(dir / "pairs.tsv", d);
    auto loaded = load_candidates(dir / "candidates.tsv", pairs);
    // Malformed candidates never reach review; their votes are moot.
    std::set<std::string> malformed;
    for (const auto& r : loaded.rejected) malformed.insert(r.candidate_id);
    auto decisions = load_decisions(dir / "decisions.tsv");
    std::erase_if(decisions, [&](const Decision& d) { return malformed.count(d.candidate_id) > 0; });
    const auto filtered = apply_filters(std::move(loaded.candidates), decisions, fc);

    std::string accepted_tsv = report::tsv_meta_line(meta) +
                               io::join(accepted_header(), "\t") + "\n";
    std::map<ErrorType, std::array<std::size_t, 4>> counts;  // generated, malformed, rejected, accepted
    for (const auto& r : loaded.rejected) {
      ++counts[r.error_type][0];
      ++counts[r.error_type][1];
      rejections_tsv += d.str() + '\t' + r.candidate_id + '\t' + std::to_string(r.line) + '\t' +
                        io::tsv_cell(r.reason) + '\n';
    }
    for (const auto& cand : filtered) {
      ++counts[cand.error_type][0];
      ++counts[cand.error_type][cand.filter.accepted ? 3 : 2];
      if (!cand.filter.accepted) continue;
      std::vector<std::string> annotators;
      for (const auto& v : cand.filter.votes) annotators.push_back(v.annotator_id);
      accepted_tsv += cand.id + '\t' + cand.pair_id + '\t' + std::string(to_string(cand.error_type)) +
                      '\t' + std::string(to_string(cand.half)) + '\t' + cand.tagged_text + '\t' +
                      io::join(annotators, ",") + '\n';
      ++total_accepted;
    }
    for (auto t : {ErrorType::Addition, ErrorType::Omission, ErrorType::Mistranslation,
                   ErrorType::Untranslated}) {
      const auto& n = counts[t];
      report_tsv += d.str() + '\t' + std::string(to_string(t)) + '\t' + std::to_string(n[0]) +
                    '\t' + std::to_string(n[1]) + '\t' + std::to_string(n[2]) + '\t' +
                    std::to_string(n[3]) + '\n';
    }
    io::write_file_atomic(accepted_path(c, d), accepted_tsv);
  }
  io::write_file_atomic(report_path, report_tsv);
  io::write_file_atomic(rejections_path, rejections_tsv);
  write_stamp(c, "ingest", hash);
  return {"ingest", outputs, false,
          std::to_string(total_accepted) + " accepted candidate(s) over " +
              std::to_string(directions.size()) + " direction(s)"};
}

namespace {

std::vector<ErrorCandidate> load_accepted(const fs::path& path,
                                          const std::vector<SegmentPair>& pairs) {
  const auto table = io::parse_tsv(io::read_file(path), accepted_header(), path.string());
  // Re-derive edits through the regular candidate reader.
  std::string as_candidates = "id\tpair_id\terror_type\thalf\ttagged_text\n";
  for (const auto& row : table.rows) {
    as_candidates += row.fields[0] + '\t' + row.fields[1] + '\t' + row.fields[2] + '\t' +
                     row.fields[3] + '\t' + row.fields[4] + '\n';
  }
  auto loaded = parse_candidates(as_candidates, pairs, path.string());
  if (!loaded.rejected.empty()) {
    throw IntegrityError(path.string() + ": accepted candidate '" +
                         loaded.rejected.front().candidate_id + "' no longer aligns: " +
                         loaded.rejected.front().reason);
  }
  for (std::size_t i = 0; i < loaded.candidates.size(); ++i) {
    auto& cand = loaded.candidates[i];
    for (const auto& a : io::split(table.rows[i].fields[5], ',')) {
      cand.filter.votes.push_back({a, true});
    }
    cand.filter.accepted = true;
  }
  return loaded.candidates;
}

}  // namespace

StageResult run_synth(const RunConfig& c) {
  const auto directions = ingest_directions(c);
  Fingerprint fp("synth");
  fp.add("k_max", c.k_max);
  for (const auto& d : directions) {
    require_file(c.data_dir / d.str() / "pairs.tsv", "segment-pair file");
    require_artifact(accepted_path(c, d), "ingest");
    fp.add("direction", d.str());
    fp.add_file("pairs", c.data_dir / d.str() / "pairs.tsv");
    fp.add_file("accepted", accepted_path(c, d));
  }
  const auto dist_path = c.out_dir / "pool_distribution.tsv";
  const std::vector<fs::path> outputs = {pool_path(c), dist_path};
  const auto hash = fp.hex();
  if (up_to_date(c, "synth", hash, outputs)) return {"synth", outputs, true, "up to date"};

  std::map<Direction, TripletPool> pools;
  for (const auto& d : directions) {
    const auto pairs = load_segment_pairs(c.data_dir / d.str() / "pairs.tsv", d);
    const auto accepted = load_accepted(accepted_path(c, d), pairs);
    pools.emplace(d, build_triplet_pool(d, pairs, accepted, c.k_max, c.threads));
  }
  const report::Meta meta{"synth", hash, c.seed};
  std::string dist = report::tsv_meta_line(meta) +
                     "direction\tlevel\ttriplets\tmin_per_pair\tmax_per_pair\n";
  std::size_t total = 0;
  for (const auto& [d, pool] : pools) {
    for (const auto& [level, s] : pool.level_stats()) {
      dist += d.str() + '\t' + std::to_string(level) + '\t' + std::to_string(s.total) + '\t' +
              std::to_string(s.min_per_pair) + '\t' + std::to_string(s.max_per_pair) + '\n';
    }
    total += pool.triplets().size();
  }
  io::write_file_atomic(pool_path(c), report::tsv_meta_line(meta) + write_pool_tsv(pools));
  io::write_file_atomic(dist_path, dist);
  write_stamp(c, "synth", hash);
  return {"synth", outputs, false, std::to_string(total) + " triplet(s) in pool"};
}

StageResult run_prompts(const RunConfig& c) {
  if (c.templates_dir.empty() || !fs::is_directory(c.templates_dir)) {
    throw ConfigError("template directory '" + c.templates_dir.string() + "' does not exist");
  }
  const auto directions = ingest_directions(c);
  std::vector<fs::path> outputs;
  for (const auto& d : directions) {
    const auto pairs = load_segment_pairs(c.data_dir / d.str() / "pairs.tsv", d);
    for (const auto& p : pairs) {
      for (auto t : {ErrorType::Addition, ErrorType::Omission, ErrorType::Mistranslation,
                     ErrorType::Untranslated}) {
        for (auto h : {Half::First, Half::Second}) {
          const auto path = c.out_dir / "prompts" / d.str() /
                            (p.pair_id + "." + std::string(to_string(t)) + "." +
                             std::string(to_string(h)) + ".txt");
          io::write_file_atomic(path, render_injection_prompt(p, t, h, c.templates_dir));
          outputs.push_back(path);
        }
      }
    }
  }
  return {"prompts", outputs, false, std::to_string(outputs.size()) + " prompt(s) rendered"};
}

namespace {

std::map<Direction, TripletPool> read_pools(const RunConfig& c) {
  require_artifact(pool_path(c), "synth");
  return select_pools(parse_pool_tsv(io::read_file(pool_path(c)), pool_path(c).string()), c);
}

std::vector<double> targets_of(const RunConfig& c) {
  return c.targets.empty() ? default_targets() : c.targets;
}

}  // namespace

StageResult run_assemble(const RunConfig& c) {
  require_artifact(pool_path(c), "synth");
  Fingerprint fp("assemble");
  fp.add_file("pool", pool_path(c));
  for (const auto& d : c.directions) fp.add("direction", d.str());
  fp.add("seed", std::to_string(c.seed));
  fp.add("n_per_direction", c.n_per_direction);
  fp.add("with_replacement", c.with_replacement ? 1 : 0);
  fp.add("system_repeats", c.system_repeats);
  fp.add("mono_repeats", c.mono_repeats);
  fp.add("levels", join_ints(c.levels));
  fp.add("targets", join_doubles(targets_of(c)));
  const std::vector<fs::path> outputs = {systems_path(c), mono_path(c)};
  const auto hash = fp.hex();
  if (up_to_date(c, "assemble", hash, outputs)) return {"assemble", outputs, true, "up to date"};

  const auto pools = read_pools(c);
  SamplingPlan plan;
  plan.n_per_direction = c.n_per_direction;
  plan.seed = c.seed;
  plan.with_replacement = c.with_replacement;
  plan.directions = pool_directions(pools, c);
  plan.repeats = c.system_repeats;
  const auto systems = generate_system_suite(pools, targets_of(c), plan, c.threads);
  plan.repeats = c.mono_repeats;
  const auto mono = generate_monolingual_suite(pools, c.levels, plan, c.threads);

  const report::Meta meta{"assemble", hash, c.seed};
  io::write_file_atomic(systems_path(c), report::jsonl_meta_line(meta) + write_manifest(systems));
  io::write_file_atomic(mono_path(c), report::jsonl_meta_line(meta) + write_manifest(mono));
  write_stamp(c, "assemble", hash);
  return {"assemble", outputs, false,
          std::to_string(systems.size()) + " multilingual and " + std::to_string(mono.size()) +
              " monolingual system(s)"};
}

StageResult run_score(const RunConfig& c) {
  require_artifact(pool_path(c), "synth");
  if (c.metrics_path.empty()) throw ConfigError("--metrics registry is required for scoring");
  require_file(c.metrics_path, "metric registry");
  Fingerprint fp("score");
  fp.add_file("pool", pool_path(c));
  fp.add_file("metrics", c.metrics_path);
  for (const auto& d : c.directions) fp.add("direction", d.str());
  const auto failures_path = c.out_dir / "score_failures.tsv";
  const std::vector<fs::path> outputs = {matrix_path(c), failures_path};
  const auto hash = fp.hex();
  if (up_to_date(c, "score", hash, outputs)) return {"score", outputs, true, "up to date"};

  const auto specs = load_metric_registry(c.metrics_path);
  const auto pools = read_pools(c);
  std::vector<const Triplet*> triplets;
  for (const auto& [_, pool] : pools) {
    for (const auto& t : pool.triplets()) triplets.push_back(&t);
  }
  const auto run = score_pool(specs, triplets, c.threads);

  const report::Meta meta{"score", hash, c.seed};
  std::string header = report::tsv_meta_line(meta);
  for (const auto& s : specs) {
    header += "# metric " + s.name + " orientation=" + std::string(to_string(s.orientation)) +
              " " +
              (s.is_builtin() ? std::get<ChrfConfig>(s.kind).describe()
                              : "external: " + std::get<ExternalCommand>(s.kind).command) +
              "\n";
  }
  io::write_file_atomic(matrix_path(c), header + write_matrix_tsv(run.matrix));
  io::write_file_atomic(failures_path,
                        report::tsv_meta_line(meta) + write_failures_tsv(run.failures));
  if (!run.failures.empty()) {
    std::string names;
    for (const auto& f : run.failures) names += " " + f.metric + ": " + f.message + ";";
    throw ScorerError("scoring incomplete, see " + failures_path.string() + ":" + names);
  }
  write_stamp(c, "score", hash);
  return {"score", outputs, false,
          std::to_string(triplets.size()) + " triplet(s) x " + std::to_string(specs.size()) +
              " metric(s)"};
}

StageResult run_fit_lgn(const RunConfig& c) {
  require_artifact(pool_path(c), "synth");
  require_artifact(matrix_path(c), "score");
  Fingerprint fp("fit-lgn");
  fp.add_file("pool", pool_path(c));
  fp.add_file("matrix", matrix_path(c));
  for (const auto& d : c.directions) fp.add("direction", d.str());
  fp.add("seed", std::to_string(c.seed));
  fp.add("per_level_n", c.n_per_direction);
  fp.add("repeats", c.lgn_repeats);
  fp.add("levels", join_ints(c.levels));
  fp.add("with_replacement", c.with_replacement ? 1 : 0);
  const auto samples_path = c.out_dir / "lgn_samples.jsonl";
  const auto cal_path = c.out_dir / "calibration.tsv";
  const std::vector<fs::path> outputs = {cal_path, samples_path};
  const auto hash = fp.hex();
  if (up_to_date(c, "fit-lgn", hash, outputs)) return {"fit-lgn", outputs, true, "up to date"};

  const auto pools = read_pools(c);
  const auto matrix = parse_matrix_tsv(io::read_file(matrix_path(c)), matrix_path(c).string());
  LgnPlan plan;
  plan.per_level_n = c.n_per_direction;
  plan.repeats = c.lgn_repeats;
  plan.seed = c.seed;
  plan.with_replacement = c.with_replacement;
  plan.levels = c.levels;

  const report::Meta meta{"fit-lgn", hash, c.seed};
  CalibrationTable table;
  std::string samples = report::jsonl_meta_line(meta);
  for (const auto& metric : matrix.metrics()) {
    for (const auto& [d, pool] : pools) {
      auto fit = lgn_fit(matrix, metric, pool, plan);
      for (const auto& s : fit.samples) {
        nlohmann::ordered_json j;
        j["metric"] = metric;
        j["direction"] = d.str();
        j["repeat"] = s.repeat;
        j["mu"] = s.mu;
        j["sigma"] = s.sigma;
        j["triplet_ids"] = s.triplet_ids;
        samples += j.dump() + "\n";
      }
      table.emplace(std::make_pair(metric, d), fit.stats);
    }
  }
  io::write_file_atomic(cal_path, report::tsv_meta_line(meta) + write_calibration_tsv(table));
  io::write_file_atomic(samples_path, samples);
  write_stamp(c, "fit-lgn", hash);
  return {"fit-lgn", outputs, false, std::to_string(table.size()) + " calibration row(s)"};
}

namespace {

PseudoSystem restrict_to(const PseudoSystem& s, const std::set<Direction>& keep) {
  PseudoSystem out = s;
  out.members.clear();
  for (const auto& m : s.members) {
    if (keep.count(m.direction)) out.members.push_back(m);
  }
  out.human_score = human_score_of(out.members);
  return out;
}

nlohmann::ordered_json correlation_json(const CorrelationReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["granularity"] = std::string(to_string(r.granularity));
  j["num_languages"] = r.num_languages;
  j["lgn"] = r.lgn_applied;
  j["tau_b"] = r.tau;
  j["repeats"] = r.repeats;
  j["per_repeat_taus"] = r.per_repeat_taus;
  return j;
}

}  // namespace

StageResult run_analyze(const RunConfig& c) {
  require_artifact(pool_path(c), "synth");
  require_artifact(systems_path(c), "assemble");
  require_artifact(mono_path(c), "assemble");
  require_artifact(matrix_path(c), "score");
  if (c.use_lgn && !fs::exists(calibration_path(c))) {
    throw CalibrationError("--use-lgn needs a calibration file; " + calibration_path(c).string() +
                           " not found (run `xqm fit-lgn`)");
  }
  Fingerprint fp("analyze");
  fp.add_file("pool", pool_path(c));
  fp.add_file("systems", systems_path(c));
  fp.add_file("monolingual", mono_path(c));
  fp.add_file("matrix", matrix_path(c));
  if (c.use_lgn) fp.add_file("calibration", calibration_path(c));
  for (const auto& d : c.directions) fp.add("direction", d.str());
  fp.add("use_lgn", c.use_lgn ? 1 : 0);
  fp.add("lang_counts", join_ints(c.lang_counts));
  fp.add("stability_repeats", join_ints(c.stability_repeats));

  const auto reports = c.out_dir / "reports";
  std::vector<fs::path> outputs = {reports / "correlation.tsv", reports / "cv.tsv",
                                   reports / "stability.tsv", reports / "summary.json"};
  if (c.use_lgn) {
    outputs.push_back(reports / "correlation_lgn.tsv");
    outputs.push_back(reports / "cv_lgn.tsv");
    outputs.push_back(reports / "ttest.tsv");
  }
  const auto hash = fp.hex();
  if (up_to_date(c, "analyze", hash, outputs)) return {"analyze", outputs, true, "up to date"};

  const auto pools = read_pools(c);
  const auto matrix = parse_matrix_tsv(io::read_file(matrix_path(c)), matrix_path(c).string());
  const auto systems = parse_manifest(io::read_file(systems_path(c)), pools,
                                      systems_path(c).string());
  const auto mono = parse_manifest(io::read_file(mono_path(c)), pools, mono_path(c).string());
  CalibrationTable cal;
  if (c.use_lgn) {
    cal = parse_calibration_tsv(io::read_file(calibration_path(c)),
                                calibration_path(c).string());
  }
  const report::Meta meta{"analyze", hash, c.seed};

  const auto directions = pool_directions(pools, c);
  std::vector<int> lang_counts = c.lang_counts;
  if (lang_counts.empty()) lang_counts.push_back(static_cast<int>(directions.size()));
  for (int k : lang_counts) {
    if (k < 1 || k > static_cast<int>(directions.size())) {
      throw ConfigError("--lang-counts value " + std::to_string(k) + " outside [1, " +
                        std::to_string(directions.size()) + "]");
    }
  }
  int available_mono_repeats = 0;
  for (const auto& s : mono) available_mono_repeats = std::max(available_mono_repeats, s.repeat_index + 1);
  std::vector<int> stability_counts;
  for (int r : c.stability_repeats) {
    if (r <= available_mono_repeats) stability_counts.push_back(r);
  }

  std::vector<bool> modes = {false};
  if (c.use_lgn) modes.push_back(true);

  std::vector<CorrelationReport> corr[2];
  std::vector<CvReport> cvs[2];
  std::vector<StabilityRow> stability;
  nlohmann::ordered_json summary;
  summary["meta"] = nlohmann::json::parse(report::jsonl_meta_line(meta))["meta"];
  summary["conventions"] = {
      {"correlation", "kendall tau-b"},
      {"human_score", "signed quality = -MQM deduction (5 points per major error)"},
      {"std", "sample (n-1)"},
      {"triplet_level", "pooled per-triplet tau over the union of each repeat's system members"},
      {"target_mixture", "levels q and q+1 with ceil(f*n) segments at q+1"},
      {"rng", std::string(kRngAlgorithm)}};

  std::vector<std::string> metric_names = matrix.metrics();
  for (const auto& metric : metric_names) {
    for (bool lgn : modes) {
      for (int k : lang_counts) {
        const std::set<Direction> keep(directions.begin(), directions.begin() + k);
        std::vector<SystemEvaluation> evals;
        std::map<int, std::vector<std::string>> ids_by_repeat;
        std::map<int, std::set<std::string>> seen;
        for (const auto& s : systems) {
          const auto r = restrict_to(s, keep);
          evals.push_back(evaluate_average_strategy(r, matrix, metric, lgn, cal));
          for (const auto& m : r.members) {
            for (const auto& id : m.triplet_ids) {
              if (seen[s.repeat_index].insert(id).second) {
                ids_by_repeat[s.repeat_index].push_back(id);
              }
            }
          }
        }
        corr[lgn].push_back(system_level_correlation(evals, metric, k));
        std::vector<std::vector<std::string>> groups;
        for (auto& [_, ids] : ids_by_repeat) groups.push_back(std::move(ids));
        auto trip = triplet_level_correlation(matrix, metric, groups, lgn, cal);
        trip.num_languages = k;
        corr[lgn].push_back(std::move(trip));
      }

      std::vector<SystemEvaluation> mono_evals;
      for (const auto& s : mono) {
        mono_evals.push_back(evaluate_average_strategy(s, matrix, metric, lgn, cal));
      }
      std::set<int> levels;
      for (const auto& s : mono) levels.insert(*s.level);
      report::Series series;
      for (int level : levels) {
        const auto cv = cross_lingual_cv(mono, mono_evals, metric, level);
        for (const auto& [d, m] : cv.per_direction_means) series[d.str()].emplace_back(level, m);
        cvs[lgn].push_back(cv);
      }
      if (!lgn && !stability_counts.empty()) {
        auto rows = repeat_stability(mono, mono_evals, metric, stability_counts);
        stability.insert(stability.end(), rows.begin(), rows.end());
      }
      const auto suffix = lgn ? std::string("_lgn") : std::string();
      io::write_file_atomic(
          reports / "plots" / (metric + suffix + ".svg"),
          report::svg_line_chart(metric + (lgn ? " (LGN)" : "") + " by quality level",
                                 lgn ? "mean z-score" : "mean score", series, meta));
      outputs.push_back(reports / "plots" / (metric + suffix + ".svg"));
    }
  }

  io::write_file_atomic(reports / "correlation.tsv", report::correlation_table(corr[0], meta));
  io::write_file_atomic(reports / "cv.tsv", report::cv_table(cvs[0], meta));

  std::string stab = report::tsv_meta_line(meta) +
                     "metric\tdirection\tlevel\trepeats\tmean\tvariance\n";
  for (const auto& r : stability) {
    stab += r.metric + '\t' + r.direction.str() + '\t' + std::to_string(r.level) + '\t' +
            std::to_string(r.repeats) + '\t' + io::format_double(r.mean) + '\t' +
            io::format_double(r.variance) + '\n';
  }
  io::write_file_atomic(reports / "stability.tsv", stab);

  nlohmann::ordered_json corr_json = nlohmann::ordered_json::array();
  for (bool lgn : modes) {
    for (const auto& r : corr[lgn]) corr_json.push_back(correlation_json(r));
  }
  summary["correlations"] = corr_json;
  nlohmann::ordered_json cv_json = nlohmann::ordered_json::array();
  for (bool lgn : modes) {
    for (const auto& r : cvs[lgn]) {
      nlohmann::ordered_json j;
      j["metric"] = r.metric;
      j["lgn"] = lgn;
      j["level"] = r.level;
      j["cv_percent"] = r.cv_percent;
      nlohmann::ordered_json means = nlohmann::ordered_json::object();
      for (const auto& [d, m] : r.per_direction_means) means[d.str()] = m;
      j["per_direction_means"] = means;
      cv_json.push_back(j);
    }
  }
  summary["cv"] = cv_json;

  if (c.use_lgn) {
    io::write_file_atomic(reports / "correlation_lgn.tsv",
                          report::correlation_table(corr[1], meta));
    io::write_file_atomic(reports / "cv_lgn.tsv", report::cv_table(cvs[1], meta));
    // Paired tests of LGN against the plain average: per metric over repeats,
    // and across metrics when there are at least two.
    std::string tt = report::tsv_meta_line(meta) +
                     "scope\tnum_languages\tgranularity\tn\tmean_gain\tt\tdf\tp_two_tailed\n";
    nlohmann::ordered_json tt_json = nlohmann::ordered_json::array();
    auto emit = [&](const std::string& scope, int k, Granularity g, const std::vector<double>& a,
                    const std::vector<double>& b) {
      if (a.size() < 2) return;
      const auto res = paired_t_test(a, b);
      std::vector<double> gains(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) gains[i] = a[i] - b[i];
      tt += scope + '\t' + std::to_string(k) + '\t' + std::string(to_string(g)) + '\t' +
            std::to_string(a.size()) + '\t' + io::format_double(mean(gains)) + '\t' +
            io::format_double(res.t) + '\t' + std::to_string(res.df) + '\t' +
            io::format_double(res.p_two_tailed) + '\n';
      tt_json.push_back({{"scope", scope},
                         {"num_languages", k},
                         {"granularity", std::string(to_string(g))},
                         {"n", a.size()},
                         {"t", res.t},
                         {"df", res.df},
                         {"p_two_tailed", res.p_two_tailed}});
    };
    for (int k : lang_counts) {
      for (auto g : {Granularity::System, Granularity::Triplet}) {
        std::vector<double> across_lgn, across_plain;
        for (std::size_t i = 0; i < corr[0].size(); ++i) {
          const auto& plain = corr[0][i];
          const auto& lgn = corr[1][i];
          if (plain.num_languages != k || plain.granularity != g) continue;
          emit("repeats:" + plain.metric, k, g, lgn.per_repeat_taus, plain.per_repeat_taus);
          across_lgn.push_back(lgn.tau);
          across_plain.push_back(plain.tau);
        }
        emit("metrics", k, g, across_lgn, across_plain);
      }
    }
    io::write_file_atomic(reports / "ttest.tsv", tt);
    summary["ttest"] = tt_json;
  }
  io::write_file_atomic(reports / "summary.json", summary.dump(2) + "\n");
  write_stamp(c, "analyze", hash);
  return {"analyze", outputs, false,
          std::to_string(metric_names.size()) + " metric(s) analysed" +
              (c.use_lgn ? " with and without LGN" : "")};
}

std::vector<StageResult> run_all(const RunConfig& c) {
  std::vector<StageResult> out;
  out.push_back(run_ingest(c));
  out.push_back(run_synth(c));
  out.push_back(run_assemble(c));
  out.push_back(run_score(c));
  out.push_back(run_fit_lgn(c));
  out.push_back(run_analyze(c));
  return out;
}

}  // namespace xqm::pipeline
