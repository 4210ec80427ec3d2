#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "xqm/error.hpp"
#include "xqm/io.hpp"
#include "xqm/synthesis.hpp"
#include "xqm/utf8.hpp"

using namespace xqm;

namespace {

const Direction kDir = Direction::parse("en-de");

ErrorCandidate cand(std::string id, std::string pair_id, Edit e) {
  ErrorCandidate c;
  c.id = std::move(id);
  c.pair_id = std::move(pair_id);
  c.direction = kDir;
  c.edit = std::move(e);
  c.filter.accepted = true;
  return c;
}

oracle::Span span(const Edit& e) { return {e.start, e.end, utf8::decode(e.replacement)}; }

}  // namespace

TEST(Overlap, Examples) {
  EXPECT_TRUE(edits_overlap({1, 4, "x"}, {3, 6, "y"}));
  EXPECT_FALSE(edits_overlap({1, 3, "x"}, {3, 6, "y"}));
  EXPECT_TRUE(edits_overlap({5, 5, "x"}, {5, 5, "y"}));
  EXPECT_TRUE(edits_overlap({2, 2, "x"}, {1, 4, ""}));
  EXPECT_FALSE(edits_overlap({1, 1, "x"}, {1, 4, ""}));
  EXPECT_FALSE(edits_overlap({4, 4, "x"}, {1, 4, ""}));
}

TEST(Overlap, AgreesWithFootprintOracle) {
  for (std::size_t a0 = 0; a0 < 6; ++a0)
    for (std::size_t a1 = a0; a1 < 6; ++a1)
      for (std::size_t b0 = 0; b0 < 6; ++b0)
        for (std::size_t b1 = b0; b1 < 6; ++b1) {
          const Edit a{a0, a1, "q"}, b{b0, b1, "r"};
          EXPECT_EQ(edits_overlap(a, b), oracle::collide(span(a), span(b)))
              << a0 << "," << a1 << " vs " << b0 << "," << b1;
        }
}

TEST(ApplyEdits, Examples) {
  const std::vector<Edit> edits = {{1, 3, "xy"}, {5, 7, "Q"}};
  // Frozen from the splice oracle.
  const auto expected = utf8::encode(
      oracle::splice(U"ABCDEFGH", {span(edits[0]), span(edits[1])}));
  ASSERT_EQ(expected, "AxyDEQH");
  EXPECT_EQ(apply_edits("ABCDEFGH", edits), "AxyDEQH");
  EXPECT_EQ(apply_edits("ABCDEFGH", {edits[1], edits[0]}), "AxyDEQH");
  EXPECT_EQ(apply_edits("abc", {}), "abc");
  EXPECT_THROW(apply_edits("abc", {{0, 2, "z"}, {1, 3, "w"}}), OverlapError);
  EXPECT_THROW(apply_edits("abc", {{2, 4, "z"}}), BoundsError);
}

TEST(ApplyEdits, DeriveEditRoundTripOnSpecExamples) {
  EXPECT_EQ(apply_edits("the cat sat", {{4, 4, "big "}}), "the big cat sat");
  EXPECT_EQ(apply_edits("the cat sat", {{4, 8, ""}}), "the sat");
}

TEST(Mqm, Deduction) {
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(mqm_deduction(k), 5 * k);
  EXPECT_EQ(mqm_deduction(3), 15);
  EXPECT_THROW(mqm_deduction(6), DomainError);
  EXPECT_THROW(mqm_deduction(-1), DomainError);
}

TEST(Enumerate, ThreeDisjointGiveEight) {
  const SegmentPair p{"p", kDir, "s", "abcdefghij"};
  const std::vector<ErrorCandidate> cs = {cand("a", "p", {0, 1, "X"}), cand("b", "p", {3, 4, ""}),
                                          cand("c", "p", {6, 6, "Y"})};
  const auto out = enumerate_pseudo_translations(p, cs);
  const auto expected = oracle::enumerate(U"abcdefghij", {span(cs[0].edit), span(cs[1].edit), span(cs[2].edit)}, 5);
  ASSERT_EQ(expected.size(), 8u);
  ASSERT_EQ(out.size(), 8u);
  std::multiset<std::pair<int, std::u32string>> got;
  for (const auto& t : out) {
    got.insert({t.error_count, utf8::decode(t.text)});
    EXPECT_EQ(t.deduction, 5 * t.error_count);
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(out.front().error_count, 0);
  EXPECT_EQ(out.front().text, p.reference);
}

TEST(Enumerate, OverlappingPairGivesThree) {
  const SegmentPair p{"p", kDir, "s", "abcdef"};
  const auto out = enumerate_pseudo_translations(
      p, {cand("a", "p", {0, 3, "X"}), cand("b", "p", {2, 5, "Y"})});
  EXPECT_EQ(out.size(), 3u);
}

TEST(Enumerate, NoCandidatesGivesReference) {
  const SegmentPair p{"p", kDir, "s", "abc"};
  const auto out = enumerate_pseudo_translations(p, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].error_count, 0);
  EXPECT_EQ(out[0].text, "abc");
}

TEST(Enumerate, KMaxLimitsLevels) {
  const SegmentPair p{"p", kDir, "s", "abcdefghij"};
  std::vector<ErrorCandidate> cs;
  for (int i = 0; i < 5; ++i) cs.push_back(cand("c" + std::to_string(i), "p", {2u * i, 2u * i + 1, "Z"}));
  const auto out = enumerate_pseudo_translations(p, cs, 2);
  EXPECT_EQ(out.size(), 1u + 5u + 10u);
  for (const auto& t : out) EXPECT_LE(t.error_count, 2);
}

TEST(Enumerate, ForeignCandidateIsIntegrityError) {
  const SegmentPair p{"p", kDir, "s", "abc"};
  EXPECT_THROW(enumerate_pseudo_translations(p, {cand("a", "q", {0, 1, "X"})}), IntegrityError);
}

TEST(Pool, TwoPairsOneCandidateEach) {
  const std::vector<SegmentPair> pairs = {{"p1", kDir, "s", "abc"}, {"p2", kDir, "s", "xyz"}};
  const auto pool = build_triplet_pool(kDir, pairs, {cand("a", "p1", {0, 1, "Q"}), cand("b", "p2", {1, 1, "R"})});
  EXPECT_EQ(pool.triplets().size(), 4u);
  EXPECT_EQ(pool.count_at(0), 2u);
  EXPECT_EQ(pool.count_at(1), 2u);
  EXPECT_EQ(pool.count_at(2), 0u);
}

TEST(Pool, EmptyCandidatesGiveLevelZeroOnly) {
  const std::vector<SegmentPair> pairs = {{"p1", kDir, "s", "abc"}, {"p2", kDir, "s", "xyz"}};
  const auto pool = build_triplet_pool(kDir, pairs, {});
  EXPECT_EQ(pool.triplets().size(), 2u);
  EXPECT_EQ(pool.by_level().size(), 1u);
}

TEST(Pool, MutuallyOverlappingCandidatesThinOutHighLevels) {
  // Eight candidates on a ten-character reference, many overlapping.
  const std::vector<SegmentPair> pairs = {{"p", kDir, "s", "abcdefghij"}};
  std::vector<ErrorCandidate> cs;
  for (int i = 0; i < 8; ++i) cs.push_back(cand("c" + std::to_string(i), "p", {std::size_t(i), std::size_t(i) + 2, "W"}));
  const auto pool = build_triplet_pool(kDir, pairs, cs);
  std::vector<oracle::Span> spans;
  for (const auto& c : cs) spans.push_back(span(c.edit));
  const auto brute = oracle::enumerate(U"abcdefghij", spans, 5);
  EXPECT_EQ(pool.triplets().size(), brute.size());
  EXPECT_LE(pool.count_at(5), pool.count_at(4));
}

TEST(Pool, ThreadCountDoesNotChangeOrder) {
  std::vector<SegmentPair> pairs;
  std::vector<ErrorCandidate> cs;
  for (int i = 0; i < 30; ++i) {
    const auto id = "p" + std::to_string(i);
    pairs.push_back({id, kDir, "s", "abcdefgh"});
    cs.push_back(cand(id + "a", id, {0, 1, "x"}));
    cs.push_back(cand(id + "b", id, {4, 6, ""}));
  }
  const auto a = build_triplet_pool(kDir, pairs, cs, 5, 1);
  const auto b = build_triplet_pool(kDir, pairs, cs, 5, 8);
  std::map<Direction, TripletPool> ma{{kDir, a}}, mb{{kDir, b}};
  EXPECT_EQ(write_pool_tsv(ma), write_pool_tsv(mb));
}

TEST(Pool, TsvRoundTrip) {
  const std::vector<SegmentPair> pairs = {{"p1", kDir, "s\xC3\xA9", "a:b;c%d"}};
  const auto pool = build_triplet_pool(kDir, pairs, {cand("a", "p1", {0, 1, "Q;:%"}), cand("b", "p1", {3, 3, "\xE4\xB8\xAD"})});
  std::map<Direction, TripletPool> pools{{kDir, pool}};
  const auto text = write_pool_tsv(pools);
  const auto back = parse_pool_tsv(text);
  EXPECT_EQ(write_pool_tsv(back), text);
  ASSERT_EQ(back.at(kDir).triplets().size(), 4u);
}

TEST(Pool, TamperedTranslationIsRejected) {
  const std::vector<SegmentPair> pairs = {{"p1", kDir, "s", "abc"}};
  std::map<Direction, TripletPool> pools{{kDir, build_triplet_pool(kDir, pairs, {cand("a", "p1", {0, 1, "Q"})})}};
  auto text = write_pool_tsv(pools);
  const auto pos = text.find("Qbc");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 3, "Qbd");
  EXPECT_THROW(parse_pool_tsv(text), IntegrityError);
}

TEST(Edits, FormatParseRoundTrip) {
  const std::vector<Edit> edits = {{0, 2, "a;b:c%"}, {4, 4, "\t\n"}, {5, 7, ""}};
  EXPECT_EQ(parse_edits(format_edits(edits)), edits);
  EXPECT_TRUE(parse_edits("").empty());
}

class PromptTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "xqm_prompt_test";
    std::filesystem::create_directories(dir_);
    io::write_file_atomic(dir_ / "addition.txt", "Add to {half} half.\nSource: {src}\nRef: {ref}\nJSON {\"k\": 1}\n");
    io::write_file_atomic(dir_ / "omission.txt", "Bad {unknown}\n");
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(PromptTest, Renders) {
  const SegmentPair p{"p", kDir, "Hello world", "Hallo Welt"};
  const auto out = render_injection_prompt(p, ErrorType::Addition, Half::Second, dir_);
  EXPECT_NE(out.find("Source: Hello world"), std::string::npos);
  EXPECT_NE(out.find("Ref: Hallo Welt"), std::string::npos);
  EXPECT_NE(out.find("second half"), std::string::npos);
  EXPECT_NE(out.find("{\"k\": 1}"), std::string::npos);
}

TEST_F(PromptTest, Errors) {
  const SegmentPair p{"p", kDir, "s", "r"};
  EXPECT_THROW(render_injection_prompt(p, "grammar", Half::First, dir_), ConfigError);
  EXPECT_THROW(render_injection_prompt(p, ErrorType::Mistranslation, Half::First, dir_), ConfigError);
  try {
    render_injection_prompt(p, ErrorType::Omission, Half::First, dir_);
    FAIL();
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown"), std::string::npos);
  }
}
