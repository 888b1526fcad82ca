#include <gtest/gtest.h>

#include "symscribe/csv.hpp"
#include "symscribe/hash.hpp"
#include "symscribe/text.hpp"

using namespace symscribe;

TEST(Utf8, RoundTripsMultibyte) {
  const std::string s = "fièvre 咳嗽 😷";
  const auto u = utf8::decode(s);
  EXPECT_EQ(u.size(), 11u);
  EXPECT_EQ(utf8::encode(u), s);
  EXPECT_EQ(utf8::length(s), 11u);
}

TEST(Utf8, InvalidBytesBecomeReplacement) {
  const std::string bad = "a\xff\xfe" "b";
  const auto u = utf8::decode(bad);
  ASSERT_EQ(u.size(), 4u);
  EXPECT_EQ(u[1], U'�');
  EXPECT_EQ(u[2], U'�');
  EXPECT_EQ(utf8::sanitize(bad), "a\xEF\xBF\xBD\xEF\xBF\xBD" "b");
}

TEST(Normalize, FoldsCaseAndCollapsesWhitespace) {
  NormalizationPolicy p;
  EXPECT_EQ(normalize_utf8("  Shortness \t of\n\nBreath ", p), "shortness of breath");
  p.case_fold = false;
  EXPECT_EQ(normalize_utf8("SOB", p), "SOB");
  p.collapse_whitespace = false;
  EXPECT_EQ(normalize_utf8("a  b", p), "a  b");
}

TEST(Normalize, SourceMapPointsIntoOriginal) {
  const std::u32string text = U"  Chest   PAIN";
  const auto n = normalize_mapped(text, {});
  ASSERT_EQ(n.text.size(), n.source.size());
  for (std::size_t i = 0; i < n.text.size(); ++i) {
    const auto c = text[n.source[i]];
    if (n.text[i] == U' ') {
      EXPECT_TRUE(is_space(c));
    } else {
      EXPECT_EQ(fold_case(c), n.text[i]);
    }
  }
}

TEST(WordBoundary, LettersAndDigitsJoin) {
  const std::u32string t = U"painless pain, 3pain";
  EXPECT_TRUE(is_word_boundary(t, 0));
  EXPECT_FALSE(is_word_boundary(t, 4));
  EXPECT_TRUE(is_word_boundary(t, 13));
  EXPECT_FALSE(is_word_boundary(t, 16));
  EXPECT_TRUE(is_word_boundary(t, t.size()));
}

TEST(Trim, BothEnds) {
  EXPECT_EQ(trim(std::string_view(" \t x y \n")), "x y");
  EXPECT_EQ(trim(std::string_view("   ")), "");
}

TEST(ListFile, SkipsCommentsAndBlanks) {
  EXPECT_EQ(parse_list("# c\n\n a \nb\n"), (std::vector<std::string>{"a", "b"}));
}

TEST(Csv, QuotedFieldsAndEmbeddedNewlines) {
  const auto rows = csv::parse("a,b\n\"x,1\",\"say \"\"hi\"\"\nthere\"\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][0], "x,1");
  EXPECT_EQ(rows[1][1], "say \"hi\"\nthere");
  EXPECT_EQ(csv::parse(csv::join(rows[1]))[0], rows[1]);
}

TEST(Hash, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
