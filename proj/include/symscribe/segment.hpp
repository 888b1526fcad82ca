#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "symscribe/text.hpp"

namespace symscribe {

struct Document {
  std::string note_id;
  std::string site_id;
  std::string text;  // UTF-8, exactly as ingested
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Section {
  std::optional<std::string> title;
  Span span;

  friend bool operator==(const Section&, const Section&) = default;
};

struct Sentence {
  Span span;
  std::size_t section_index = 0;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

class SectionRules {
 public:
  SectionRules() = default;
  explicit SectionRules(std::vector<std::string> titles);

  static SectionRules defaults();
  static SectionRules from_file(const std::string& path);

  const std::vector<std::string>& titles() const { return titles_; }

  // Case-folded titles, longest first, so "PAST MEDICAL HISTORY" wins over
  // "HISTORY" at the same line start.
  struct Pattern {
    std::u32string folded;
    std::size_t title_index;
  };
  const std::vector<Pattern>& patterns() const { return patterns_; }

 private:
  std::vector<std::string> titles_;
  std::vector<Pattern> patterns_;
};

class Abbreviations {
 public:
  Abbreviations() = default;
  explicit Abbreviations(const std::vector<std::string>& entries);

  static Abbreviations defaults();
  static Abbreviations from_file(const std::string& path);

  // `token` is compared case-insensitively and must include its final period.
  bool contains(std::u32string_view token) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::u32string> entries_;
};

const std::vector<std::string>& default_section_titles();
const std::vector<std::string>& default_abbreviations();

// Sections partition [0, text.size()): a non-empty preamble before the first
// recognized title becomes an untitled section. Titles match case-insensitively
// at a line start (after optional blanks), followed by ':' or alone on the line.
std::vector<Section> split_sections(std::u32string_view text, const SectionRules& rules);
std::vector<Section> split_sections(const Document& doc, const SectionRules& rules);

// Sentences end after '.', '!' or '?' followed by whitespace (closing quotes and
// brackets stay with the sentence), unless the terminating token is a listed
// abbreviation or the period sits inside a decimal number. A whitespace run
// holding two or more newlines, or three or more consecutive blanks, always
// ends a sentence. Sentences are trimmed and never cross a section.
std::vector<Sentence> split_sentences(std::u32string_view text, const std::vector<Section>& sections,
                                      const Abbreviations& abbreviations);
std::vector<Sentence> split_sentences(const Document& doc, const std::vector<Section>& sections,
                                      const Abbreviations& abbreviations);

}  // namespace symscribe
