#include <gtest/gtest.h>

#include "xqm/corpus.hpp"
#include "xqm/error.hpp"
#include "xqm/utf8.hpp"

using namespace xqm;

TEST(Direction, ParsesAndValidates) {
  const auto d = Direction::parse("en-zh");
  EXPECT_EQ(d.source_lang(), "en");
  EXPECT_EQ(d.target_lang(), "zh");
  EXPECT_EQ(d.str(), "en-zh");
  EXPECT_THROW(Direction::parse("EN-zh"), DomainError);
  EXPECT_THROW(Direction::parse("en_zh"), DomainError);
  EXPECT_THROW(Direction::parse("en-zh-x"), DomainError);
  EXPECT_THROW(Direction::parse("e-zh"), DomainError);
}

TEST(Utf8, RoundTripAndRejectsInvalid) {
  const std::string s = "a\xC3\xA9\xE4\xB8\xAD\xF0\x9F\x98\x80";
  EXPECT_EQ(utf8::length(s), 4u);
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
  EXPECT_THROW(utf8::decode("\xC3"), FormatError);
  EXPECT_THROW(utf8::decode("\xC0\xAF"), FormatError);
  EXPECT_THROW(utf8::decode("\xED\xA0\x80"), FormatError);
  EXPECT_THROW(utf8::decode("\xE4\xB8"), FormatError);
}

TEST(SegmentPairs, LoadsInFileOrder) {
  const auto pairs = parse_segment_pairs("id\tsource\treference\nb\tsrc b\tref b\na\tsrc a\tref a\n",
                                         Direction::parse("en-de"));
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].pair_id, "b");
  EXPECT_EQ(pairs[1].pair_id, "a");
  EXPECT_EQ(pairs[1].reference, "ref a");
}

TEST(SegmentPairs, EmptyReferenceNamesLine) {
  try {
    parse_segment_pairs("id\tsource\treference\na\ts\tr\nb\ts\t\n", Direction::parse("en-de"),
                        "pairs.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("pairs.tsv:3"), std::string::npos) << e.what();
  }
}

TEST(SegmentPairs, WrongColumnCountIsParseError) {
  EXPECT_THROW(parse_segment_pairs("id\tsource\treference\na\ts\n", Direction::parse("en-de")),
               ParseError);
}

TEST(SegmentPairs, DuplicateIdIsIntegrityError) {
  try {
    parse_segment_pairs("id\tsource\treference\nx\ts\tr\nx\ts\tr\n", Direction::parse("en-de"));
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos);
  }
}

TEST(ParseTagged, Examples) {
  auto t = parse_tagged("ab<v>XY</v>cd");
  EXPECT_EQ(t.detagged, "abXYcd");
  EXPECT_EQ(t.tag_open, 2u);
  EXPECT_EQ(t.tag_close, 4u);

  t = parse_tagged("ab<v></v>cd");
  EXPECT_EQ(t.detagged, "abcd");
  EXPECT_EQ(t.tag_open, 2u);
  EXPECT_EQ(t.tag_close, 2u);

  EXPECT_THROW(parse_tagged("ab<v>X<v>Y</v>"), FormatError);
  EXPECT_THROW(parse_tagged("abc"), FormatError);
  EXPECT_THROW(parse_tagged("a</v>b<v>c"), FormatError);
}

TEST(ParseTagged, OffsetsAreCodePoints) {
  const auto t = parse_tagged("\xE4\xB8\xAD\xE6\x96\x87<v>\xC3\xA9</v>x");
  EXPECT_EQ(t.tag_open, 2u);
  EXPECT_EQ(t.tag_close, 3u);
}

TEST(DeriveEdit, Insertion) {
  const auto t = parse_tagged("the <v>big </v>cat sat");
  const auto e = derive_edit("the cat sat", t.detagged, t.tag_open, t.tag_close);
  EXPECT_EQ(e, (Edit{4, 4, "big "}));
}

TEST(DeriveEdit, Deletion) {
  const auto e = derive_edit("the cat sat", "the sat", 4, 4);
  EXPECT_EQ(e, (Edit{4, 8, ""}));
}

TEST(DeriveEdit, ChangeOutsideTagIsAlignmentError) {
  EXPECT_THROW(derive_edit("abc", "xbz", 0, 1), AlignmentError);
  EXPECT_THROW(derive_edit("abc", "abc", 1, 2), AlignmentError);
}

TEST(DeriveEdit, TrimsCommonPrefixThenSuffix) {
  // "aa" -> "a": prefix trimming keeps the first 'a' and deletes the second.
  const auto e = derive_edit("xaay", "xay", 1, 2);
  EXPECT_EQ(e, (Edit{2, 3, ""}));
}

TEST(Filters, Votes) {
  const auto pairs = parse_segment_pairs("id\tsource\treference\np\ts\tthe cat sat\n",
                                         Direction::parse("en-de"));
  auto loaded = parse_candidates(
      "id\tpair_id\terror_type\thalf\ttagged_text\n"
      "c1\tp\taddition\tfirst\tthe <v>big </v>cat sat\n"
      "c2\tp\tomission\tsecond\tthe cat<v></v>\n",
      pairs);
  ASSERT_EQ(loaded.candidates.size(), 2u);

  const auto both = apply_filters(loaded.candidates,
                                  {{"c1", "a", false}, {"c1", "b", false}, {"c2", "a", false},
                                   {"c2", "b", true}});
  EXPECT_TRUE(both[0].filter.accepted);
  EXPECT_FALSE(both[1].filter.accepted);

  FilterConfig single;
  single.required_by_direction["en-de"] = 1;
  const auto one = apply_filters(loaded.candidates, {{"c1", "a", false}, {"c2", "a", false}}, single);
  EXPECT_TRUE(one[0].filter.accepted);
  EXPECT_TRUE(one[1].filter.accepted);

  EXPECT_THROW(apply_filters(loaded.candidates, {{"c1", "a", false}, {"c2", "a", false}}),
               ConfigError);
  EXPECT_THROW(apply_filters(loaded.candidates, {{"zz", "a", false}}), IntegrityError);
  EXPECT_THROW(apply_filters(loaded.candidates, {{"c1", "a", false}, {"c1", "a", false}}),
               IntegrityError);
}

TEST(Candidates, MalformedAreRejectedNotFatal) {
  const auto pairs = parse_segment_pairs("id\tsource\treference\np\ts\tabc\n",
                                         Direction::parse("en-de"));
  const auto loaded = parse_candidates(
      "id\tpair_id\terror_type\thalf\ttagged_text\n"
      "ok\tp\tmistranslation\tfirst\t<v>x</v>bc\n"
      "bad\tp\tmistranslation\tfirst\t<v>x</v>bz\n"
      "worse\tp\tomission\tfirst\tab<v>c\n",
      pairs, "cands.tsv");
  ASSERT_EQ(loaded.candidates.size(), 1u);
  ASSERT_EQ(loaded.rejected.size(), 2u);
  EXPECT_EQ(loaded.rejected[0].candidate_id, "bad");
  EXPECT_EQ(loaded.rejected[0].line, 3u);
  EXPECT_EQ(loaded.candidates[0].edit, (Edit{0, 1, "x"}));
}

TEST(Candidates, UnknownPairIsIntegrityError) {
  const auto pairs = parse_segment_pairs("id\tsource\treference\np\ts\tabc\n",
                                         Direction::parse("en-de"));
  EXPECT_THROW(parse_candidates("id\tpair_id\terror_type\thalf\ttagged_text\n"
                                "c\tq\taddition\tfirst\t<v>x</v>abc\n",
                                pairs),
               IntegrityError);
}

TEST(Decisions, RejectColumnIsTOrEmpty) {
  const auto d = parse_decisions("candidate_id\tannotator_id\treject\nc\ta\tT\nc\tb\t\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_TRUE(d[0].reject);
  EXPECT_FALSE(d[1].reject);
  EXPECT_THROW(parse_decisions("candidate_id\tannotator_id\treject\nc\ta\tyes\n"), ParseError);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorKind::Usage), 2);
  EXPECT_EQ(exit_code(ErrorKind::Integrity), 3);
  EXPECT_EQ(exit_code(ErrorKind::Scorer), 4);
  EXPECT_EQ(exit_code(ErrorKind::Capacity), 5);
}
