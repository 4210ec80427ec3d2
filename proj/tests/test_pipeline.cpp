#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "synthetic_corpus.hpp"
#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/pipeline.hpp"
#include "xqm/synthesis.hpp"

using namespace xqm;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = XQM_FIXTURES_DIR;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() /
            ("xqm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  static inline int counter_ = 0;
};

std::vector<std::string> data_lines(const fs::path& p) {
  std::vector<std::string> out;
  for (const auto& l : io::split(io::read_file(p), '\n')) {
    if (!l.empty() && l[0] != '#') out.push_back(l);
  }
  return out;
}

std::string write_registry(const fs::path& dir, bool with_mock) {
  std::string text = "[chrf]\nbuiltin = chrf\n";
  if (with_mock) {
    text += "[mock]\ncommand = " + std::string(XQM_MOCK_SCORER) + "\norientation = lower\ntimeout_s = 60\n";
  }
  io::write_file_atomic(dir / "metrics.ini", text);
  return (dir / "metrics.ini").string();
}

pipeline::RunConfig small_run(const fs::path& data, const fs::path& out, const fs::path& metrics) {
  pipeline::RunConfig c;
  c.data_dir = data;
  c.out_dir = out;
  c.metrics_path = metrics;
  c.seed = 2024;
  c.n_per_direction = 12;
  c.system_repeats = 4;
  c.mono_repeats = 10;
  c.lgn_repeats = 3;
  c.use_lgn = true;
  c.with_replacement = false;
  c.stability_repeats = {5, 10};
  return c;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(XQM_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Ingest, FixtureAcceptsTwoOfThree) {
  TempDir tmp("ingest");
  pipeline::RunConfig c;
  c.data_dir = kFixtures / "ingest";
  c.out_dir = tmp.path();
  const auto r = pipeline::run_ingest(c);
  EXPECT_FALSE(r.cached);
  const auto rows = data_lines(tmp.path() / "accepted" / "en-de.tsv");
  ASSERT_EQ(rows.size(), 3u);  // header + 2
  EXPECT_EQ(rows[1].substr(0, 3), "c1\t");
  EXPECT_EQ(rows[2].substr(0, 3), "c2\t");
  const auto report = io::read_file(tmp.path() / "ingest_report.tsv");
  EXPECT_NE(report.find("en-de\tmistranslation\t1\t0\t1\t0"), std::string::npos) << report;
  EXPECT_NE(report.find("en-de\taddition\t1\t0\t0\t1"), std::string::npos) << report;

  EXPECT_TRUE(pipeline::run_ingest(c).cached);
}

TEST(Ingest, MissingDecisionsIsConfigError) {
  TempDir tmp("nodecisions");
  fs::create_directories(tmp.path() / "data" / "en-de");
  for (const char* f : {"pairs.tsv", "candidates.tsv"})
    fs::copy_file(kFixtures / "ingest" / "en-de" / f, tmp.path() / "data" / "en-de" / f);
  pipeline::RunConfig c;
  c.data_dir = tmp.path() / "data";
  c.out_dir = tmp.path() / "out";
  EXPECT_THROW(pipeline::run_ingest(c), ConfigError);
}

TEST(Ingest, SingleAnnotatorAcceptsOneVote) {
  TempDir tmp("single");
  const auto dir = tmp.path() / "data" / "en-de";
  fs::create_directories(dir);
  for (const char* f : {"pairs.tsv", "candidates.tsv"})
    fs::copy_file(kFixtures / "ingest" / "en-de" / f, dir / f);
  io::write_file_atomic(dir / "decisions.tsv",
                        "candidate_id\tannotator_id\treject\nc1\ta1\t\nc2\ta1\t\nc3\ta1\t\n");
  pipeline::RunConfig c;
  c.data_dir = tmp.path() / "data";
  c.out_dir = tmp.path() / "out";
  EXPECT_THROW(pipeline::run_ingest(c), ConfigError);
  c.single_annotator = {Direction::parse("en-de")};
  pipeline::run_ingest(c);
  EXPECT_EQ(data_lines(c.out_dir / "accepted" / "en-de.tsv").size(), 4u);
}

TEST(Synth, ThreeDisjointCandidatesGiveEightRows) {
  TempDir tmp("synth");
  pipeline::RunConfig c;
  c.data_dir = kFixtures / "synth";
  c.out_dir = tmp.path();
  pipeline::run_ingest(c);
  pipeline::run_synth(c);
  EXPECT_EQ(data_lines(tmp.path() / "pool.tsv").size(), 1u + 8u);

  c.k_max = 2;
  pipeline::run_synth(c);
  const auto pool = parse_pool_tsv(io::read_file(tmp.path() / "pool.tsv"), "pool.tsv");
  EXPECT_EQ(pool.begin()->second.triplets().size(), 7u);
  EXPECT_EQ(pool.begin()->second.by_level().rbegin()->first, 2);
}

TEST(Synth, EmptyAcceptedSetGivesLevelZeroOnly) {
  TempDir tmp("synthempty");
  const auto dir = tmp.path() / "data" / "en-de";
  fs::create_directories(dir);
  for (const char* f : {"pairs.tsv", "candidates.tsv"})
    fs::copy_file(kFixtures / "synth" / "en-de" / f, dir / f);
  io::write_file_atomic(dir / "decisions.tsv",
                        "candidate_id\tannotator_id\treject\nc1\ta1\tT\nc1\ta2\t\nc2\ta1\tT\nc2\ta2\t\n"
                        "c3\ta1\tT\nc3\ta2\t\n");
  pipeline::RunConfig c;
  c.data_dir = tmp.path() / "data";
  c.out_dir = tmp.path() / "out";
  pipeline::run_ingest(c);
  pipeline::run_synth(c);
  EXPECT_EQ(data_lines(c.out_dir / "pool.tsv").size(), 2u);
}

TEST(Stages, MissingUpstreamIsDependencyErrorNamingStage) {
  TempDir tmp("deps");
  pipeline::RunConfig c;
  c.out_dir = tmp.path();
  c.data_dir = kFixtures / "synth";
  try {
    pipeline::run_assemble(c);
    FAIL();
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("synth"), std::string::npos);
  }
  try {
    pipeline::run_synth(c);
    FAIL();
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("ingest"), std::string::npos);
  }
}

TEST(Prompts, RendersAllTypesAndHalves) {
  TempDir tmp("prompts");
  pipeline::RunConfig c;
  c.data_dir = kFixtures / "ingest";
  c.out_dir = tmp.path();
  c.templates_dir = XQM_TEMPLATES_DIR;
  const auto r = pipeline::run_prompts(c);
  EXPECT_EQ(r.outputs.size(), 2u * 4u * 2u);
  const auto text = io::read_file(tmp.path() / "prompts" / "en-de" / "p2.omission.second.txt");
  EXPECT_NE(text.find("Guten Morgen."), std::string::npos);
  EXPECT_NE(text.find("second half"), std::string::npos);
}

class FullPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir("full");
    testkit::CorpusSpec spec;
    spec.pairs = 30;
    spec.reject_rate = 0.02;
    testkit::write_corpus(testkit::make_corpus(spec), root_->path() / "data");
    registry_ = write_registry(root_->path(), true);
  }
  static void TearDownTestSuite() { delete root_; }
  static inline TempDir* root_ = nullptr;
  static inline std::string registry_;
};

TEST_F(FullPipeline, ProducesReportsAndIsDeterministicAcrossThreads) {
  auto c1 = small_run(root_->path() / "data", root_->path() / "t1", registry_);
  auto c8 = c1;
  c8.out_dir = root_->path() / "t8";
  c1.threads = 1;
  c8.threads = 8;
  pipeline::run_all(c1);
  pipeline::run_all(c8);

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(c1.out_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), c1.out_dir);
    ASSERT_TRUE(fs::exists(c8.out_dir / rel)) << rel;
    EXPECT_EQ(io::read_file(entry.path()), io::read_file(c8.out_dir / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 15u);

  const auto corr = data_lines(c1.out_dir / "reports" / "correlation.tsv");
  ASSERT_GE(corr.size(), 3u);
  EXPECT_EQ(corr[0], "num_languages\tgranularity\tchrf\tmock");
  EXPECT_EQ(data_lines(c1.out_dir / "reports" / "cv.tsv").size(), 3u);
  EXPECT_TRUE(fs::exists(c1.out_dir / "reports" / "correlation_lgn.tsv"));
  EXPECT_TRUE(fs::exists(c1.out_dir / "reports" / "ttest.tsv"));
  EXPECT_TRUE(fs::exists(c1.out_dir / "reports" / "plots" / "chrf_lgn.svg"));
  const auto stab = data_lines(c1.out_dir / "reports" / "stability.tsv");
  EXPECT_EQ(stab.size(), 1u + 2u * 2u * 6u * 2u);  // metrics x directions x levels x counts

  for (const auto& name : {"pool.tsv", "matrix.tsv", "calibration.tsv", "reports/cv.tsv"}) {
    const auto first = io::read_file(c1.out_dir / name).substr(0, 40);
    EXPECT_EQ(first.rfind("# xqm ", 0), 0u) << name;
  }
  EXPECT_NE(io::read_file(c1.out_dir / "systems.jsonl").find("\"seed\":2024"), std::string::npos);

  // A second run with the same inputs hits the stamps and rewrites nothing.
  const auto before = fs::last_write_time(c1.out_dir / "matrix.tsv");
  for (const auto& r : pipeline::run_all(c1)) EXPECT_TRUE(r.cached) << r.stage;
  EXPECT_EQ(fs::last_write_time(c1.out_dir / "matrix.tsv"), before);
}

TEST_F(FullPipeline, RerunFromScratchIsByteIdentical) {
  auto a = small_run(root_->path() / "data", root_->path() / "ra", registry_);
  auto b = a;
  b.out_dir = root_->path() / "rb";
  a.use_lgn = b.use_lgn = false;
  pipeline::run_all(a);
  pipeline::run_all(b);
  for (const auto& f : {"systems.jsonl", "monolingual.jsonl", "matrix.tsv", "reports/correlation.tsv",
                        "reports/cv.tsv", "reports/summary.json"})
    EXPECT_EQ(io::read_file(a.out_dir / f), io::read_file(b.out_dir / f)) << f;
  EXPECT_FALSE(fs::exists(a.out_dir / "reports" / "correlation_lgn.tsv"));
}

TEST_F(FullPipeline, UseLgnWithoutCalibrationIsCalibrationError) {
  auto c = small_run(root_->path() / "data", root_->path() / "nolgn", registry_);
  c.use_lgn = false;
  pipeline::run_ingest(c);
  pipeline::run_synth(c);
  pipeline::run_assemble(c);
  pipeline::run_score(c);
  c.use_lgn = true;
  EXPECT_THROW(pipeline::run_analyze(c), CalibrationError);
}

TEST_F(FullPipeline, FailingScorerWritesMatrixThenThrows) {
  auto c = small_run(root_->path() / "data", root_->path() / "badscore", registry_);
  io::write_file_atomic(root_->path() / "bad.ini", "[chrf]\nbuiltin = chrf\n[broken]\ncommand = " +
                                                       std::string(XQM_MOCK_SCORER) + " --crash-after 3\n");
  c.metrics_path = root_->path() / "bad.ini";
  pipeline::run_ingest(c);
  pipeline::run_synth(c);
  EXPECT_THROW(pipeline::run_score(c), ScorerError);
  EXPECT_TRUE(fs::exists(c.out_dir / "matrix.tsv"));
  EXPECT_NE(io::read_file(c.out_dir / "score_failures.tsv").find("broken"), std::string::npos);
}

TEST_F(FullPipeline, CliExitCodes) {
  const auto data = (root_->path() / "data").string();
  const auto out = (root_->path() / "cli").string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("ingest --data " + data + " --out " + out + " --threads x"), 2);
  EXPECT_EQ(run_cli("assemble --out " + out), 2);
  EXPECT_EQ(run_cli("ingest --data " + data + " --out " + out), 0);
  EXPECT_EQ(run_cli("synth --data " + data + " --out " + out), 0);
  EXPECT_EQ(run_cli("assemble --out " + out + " --n-per-direction 500"), 5);
  EXPECT_EQ(run_cli("assemble --out " + out + " --n-per-direction 10 --repeats 2 --mono-repeats 5"), 0);
  io::write_file_atomic(root_->path() / "crash.ini",
                        "[m]\ncommand = " + std::string(XQM_MOCK_SCORER) + " --crash-after 1\n");
  EXPECT_EQ(run_cli("score --out " + out + " --metrics " + (root_->path() / "crash.ini").string()), 4);
  EXPECT_EQ(run_cli("score --out " + out + " --metrics " + registry_), 0);
  EXPECT_EQ(run_cli("analyze --out " + out + " --use-lgn"), 2);
  EXPECT_EQ(run_cli("analyze --out " + out + " --repeats 2,5"), 0);

  // Corrupt the pool: integrity failure on the next stage that reads it.
  auto pool = io::read_file(fs::path(out) / "pool.tsv");
  const auto tab = pool.rfind('\t');
  pool.insert(tab + 1, "99:99:x;");
  io::write_file_atomic(fs::path(out) / "pool.tsv", pool);
  EXPECT_EQ(run_cli("assemble --out " + out + " --n-per-direction 10 --repeats 3"), 3);

  io::write_file_atomic(root_->path() / "cfg.toml", "seed = 5\nthreads = 2\n");
  EXPECT_EQ(run_cli("--config " + (root_->path() / "cfg.toml").string() + " ingest --data " + data +
                    " --out " + (root_->path() / "cfgout").string()),
            0);
  EXPECT_NE(io::read_file(root_->path() / "cfgout" / "ingest_report.tsv").find("seed=5"), std::string::npos);
}
