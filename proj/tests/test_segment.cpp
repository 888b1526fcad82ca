#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "symscribe/csv.hpp"
#include "symscribe/segment.hpp"

using namespace symscribe;

namespace {

std::vector<std::string> sentence_texts(const std::string& text, const Abbreviations& abbr = Abbreviations::defaults()) {
  const auto u = utf8::decode(text);
  const auto sections = split_sections(u, SectionRules::defaults());
  std::vector<std::string> out;
  for (const auto& s : split_sentences(u, sections, abbr)) {
    out.push_back(utf8::encode(std::u32string_view(u).substr(s.span.start, s.span.length())));
  }
  return out;
}

void check_invariants(const std::u32string& text) {
  const auto sections = split_sections(text, SectionRules::defaults());
  std::size_t pos = 0;
  for (const auto& s : sections) {
    EXPECT_EQ(s.span.start, pos);
    pos = s.span.end;
  }
  EXPECT_EQ(pos, text.size());
  const auto sentences = split_sentences(text, sections, Abbreviations::defaults());
  std::size_t prev_end = 0;
  for (const auto& s : sentences) {
    ASSERT_LT(s.section_index, sections.size());
    EXPECT_TRUE(sections[s.section_index].span.contains(s.span));
    EXPECT_GE(s.span.start, prev_end);
    EXPECT_GT(s.span.length(), 0u);
    EXPECT_FALSE(is_space(text[s.span.start]));
    EXPECT_FALSE(is_space(text[s.span.end - 1]));
    prev_end = s.span.end;
  }
}

}  // namespace

TEST(Sections, TwoTitled) {
  const auto secs = split_sections(U"HPI: cough for 3 weeks.\nASSESSMENT: improving.", SectionRules::defaults());
  ASSERT_EQ(secs.size(), 2u);
  EXPECT_EQ(secs[0].title, "HPI");
  EXPECT_EQ(secs[1].title, "ASSESSMENT");
}

TEST(Sections, NoHeaders) {
  const std::u32string t = U"no headers at all";
  const auto secs = split_sections(t, SectionRules::defaults());
  ASSERT_EQ(secs.size(), 1u);
  EXPECT_FALSE(secs[0].title);
  EXPECT_EQ(secs[0].span, (Span{0, t.size()}));
}

TEST(Sections, PreambleThenTitle) {
  const auto secs = split_sections(U"intro line\nPLAN: rest", SectionRules::defaults());
  ASSERT_EQ(secs.size(), 2u);
  EXPECT_FALSE(secs[0].title);
  EXPECT_EQ(secs[1].title, "PLAN");
  EXPECT_EQ(secs[1].span.start, 11u);
}

TEST(Sections, TitleMustStartLine) {
  const auto secs = split_sections(U"We discussed the plan: rest.", SectionRules::defaults());
  EXPECT_EQ(secs.size(), 1u);
}

TEST(Sections, LongestTitleWins) {
  const auto secs = split_sections(U"PAST MEDICAL HISTORY: asthma", SectionRules::defaults());
  ASSERT_EQ(secs.size(), 1u);
  EXPECT_EQ(secs[0].title, "PAST MEDICAL HISTORY");
}

TEST(Sentences, SpecExamples) {
  EXPECT_EQ(sentence_texts("No fever. Denies chills."), (std::vector<std::string>{"No fever.", "Denies chills."}));
  EXPECT_EQ(sentence_texts("Dr. Smith saw the patient."), (std::vector<std::string>{"Dr. Smith saw the patient."}));
  EXPECT_EQ(sentence_texts("Temp 98.6 today."), (std::vector<std::string>{"Temp 98.6 today."}));
}

TEST(Sentences, AbbreviationOnlyWhenListed) {
  EXPECT_EQ(sentence_texts("Dr. Smith saw the patient.", Abbreviations{}).size(), 2u);
  EXPECT_EQ(sentence_texts("Take 1 tab p.r.n. for pain.").size(), 1u);
}

TEST(Sentences, ExclamationAndQuestion) {
  EXPECT_EQ(sentence_texts("Fever? No! Fine."), (std::vector<std::string>{"Fever?", "No!", "Fine."}));
}

TEST(Sentences, ClosingQuoteStaysWithSentence) {
  EXPECT_EQ(sentence_texts("She said \"no pain.\" Then left."),
            (std::vector<std::string>{"She said \"no pain.\"", "Then left."}));
}

TEST(Sentences, WhitespaceRunsForceBoundary) {
  EXPECT_EQ(sentence_texts("negative for fever\n\nheadache present"),
            (std::vector<std::string>{"negative for fever", "headache present"}));
  EXPECT_EQ(sentence_texts("negative for fever   headache present"),
            (std::vector<std::string>{"negative for fever", "headache present"}));
  EXPECT_EQ(sentence_texts("negative for fever\nheadache").size(), 1u);
}

TEST(Sentences, HeadingIsItsOwnSentence) {
  EXPECT_EQ(sentence_texts("HISTORY OF PRESENT ILLNESS: fatigue for weeks."),
            (std::vector<std::string>{"HISTORY OF PRESENT ILLNESS:", "fatigue for weeks."}));
}

TEST(Sentences, NeverCrossSections) {
  const auto t = sentence_texts("HPI: cough\nPLAN: rest");
  EXPECT_EQ(t, (std::vector<std::string>{"HPI:", "cough", "PLAN:", "rest"}));
}

TEST(Sentences, EmptyAndBlank) {
  EXPECT_TRUE(sentence_texts("").empty());
  EXPECT_TRUE(sentence_texts(" \n\t ").empty());
}

TEST(Sentences, IdempotentOnEachSentence) {
  const auto notes = support::synthetic_notes_csv(5, 1500, 11);
  for (const auto& row : csv::parse(notes)) {
    if (row[0] == "note_id") continue;
    for (const auto& s : sentence_texts(row[2])) {
      const auto again = sentence_texts(s);
      // A heading sentence re-splits to itself as a titled section's heading.
      ASSERT_EQ(again.size(), 1u) << s;
      EXPECT_EQ(again[0], s);
    }
  }
}

TEST(Sentences, InvariantsOnRandomText) {
  std::mt19937_64 rng(5);
  const std::u32string alphabet = U"ab .!?\n\t:;,5é";
  for (int k = 0; k < 300; ++k) {
    std::u32string text;
    const auto n = std::uniform_int_distribution<int>(0, 200)(rng);
    for (int i = 0; i < n; ++i) {
      text += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    }
    if (k % 3 == 0) text = U"PLAN: " + text + U"\nHPI: " + text;
    check_invariants(text);
  }
}

TEST(Sentences, Deterministic) {
  const auto notes = support::synthetic_notes_csv(3, 2000, 4);
  EXPECT_EQ(sentence_texts(notes), sentence_texts(notes));
}
