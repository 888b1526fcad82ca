#include "symscribe/segment.hpp"

#include <algorithm>

namespace symscribe {

const std::vector<std::string>& default_section_titles() {
  static const std::vector<std::string> titles = {
      "CHIEF COMPLAINT",        "CC",
      "REASON FOR VISIT",       "HISTORY OF PRESENT ILLNESS",
      "HPI",                    "INTERVAL HISTORY",
      "REVIEW OF SYSTEMS",      "ROS",
      "PAST MEDICAL HISTORY",   "PMH",
      "PAST SURGICAL HISTORY",  "PSH",
      "FAMILY HISTORY",         "FH",
      "SOCIAL HISTORY",         "SH",
      "MEDICATIONS",            "CURRENT MEDICATIONS",
      "HOME MEDICATIONS",       "ALLERGIES",
      "IMMUNIZATIONS",          "VITALS",
      "VITAL SIGNS",            "PHYSICAL EXAM",
      "PHYSICAL EXAMINATION",   "EXAM",
      "LABS",                   "LABORATORY DATA",
      "RESULTS",                "IMAGING",
      "STUDIES",                "SUBJECTIVE",
      "OBJECTIVE",              "ASSESSMENT",
      "ASSESSMENT AND PLAN",    "ASSESSMENT/PLAN",
      "A/P",                    "IMPRESSION",
      "PLAN",                   "DIAGNOSIS",
      "DIAGNOSES",              "PROBLEM LIST",
      "FOLLOW UP",              "DISPOSITION",
      "PATIENT INSTRUCTIONS",
  };
  return titles;
}

const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> entries = {
      "dr.",    "mr.",    "mrs.",  "ms.",   "prof.",  "sr.",    "jr.",   "st.",    "vs.",   "etc.",
      "e.g.",   "i.e.",   "approx.", "appt.", "dept.", "est.",  "fig.",  "inc.",   "mg.",   "mcg.",
      "ml.",    "kg.",    "lb.",   "lbs.",  "oz.",    "cm.",    "mm.",   "hr.",    "hrs.",  "min.",
      "mins.",  "sec.",   "wk.",   "wks.",  "mo.",    "mos.",   "yr.",   "yrs.",   "y.o.",  "p.r.n.",
      "prn.",   "b.i.d.", "t.i.d.", "q.i.d.", "q.d.", "q.h.s.", "p.o.",  "i.v.",   "i.m.",  "s.c.",
      "a.m.",   "p.m.",   "pt.",   "pts.",  "hx.",    "dx.",    "tx.",   "rx.",    "sx.",   "s/p.",
      "w/o.",   "temp.",  "resp.", "abd.",  "ext.",
  };
  return entries;
}

namespace {

std::u32string fold(std::string_view s) {
  auto out = utf8::decode(s);
  for (auto& c : out) c = fold_case(c);
  return out;
}

bool is_blank(char32_t c) { return c == U' ' || c == U'\t'; }

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

bool is_closer(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'}' || c == 0x2019 || c == 0x201D;
}

bool is_opener(char32_t c) {
  return c == U'"' || c == U'\'' || c == U'(' || c == U'[' || c == U'{' || c == 0x2018 || c == 0x201C;
}

// Returns the title index if a section header starts at `line_start`.
std::optional<std::size_t> match_title(std::u32string_view text, std::size_t line_start, const SectionRules& rules) {
  std::size_t p = line_start;
  while (p < text.size() && is_blank(text[p])) ++p;
  for (const auto& pattern : rules.patterns()) {
    const auto& pat = pattern.folded;
    if (pat.empty() || p + pat.size() > text.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < pat.size(); ++k) {
      if (fold_case(text[p + k]) != pat[k]) {
        same = false;
        break;
      }
    }
    if (!same) continue;
    std::size_t q = p + pat.size();
    if (is_word_char(pat.back()) && q < text.size() && is_word_char(text[q])) continue;
    while (q < text.size() && is_blank(text[q])) ++q;
    if (q == text.size() || text[q] == U':' || text[q] == U'\n') return pattern.title_index;
    if (text[q] == U'\r' && (q + 1 == text.size() || text[q + 1] == U'\n')) return pattern.title_index;
  }
  return std::nullopt;
}

void push_trimmed(std::u32string_view text, std::size_t start, std::size_t end, std::size_t section,
                  std::vector<Sentence>& out) {
  while (start < end && is_space(text[start])) ++start;
  while (end > start && is_space(text[end - 1])) --end;
  if (start < end) out.push_back({{start, end}, section});
}

}  // namespace

SectionRules::SectionRules(std::vector<std::string> titles) : titles_(std::move(titles)) {
  for (std::size_t i = 0; i < titles_.size(); ++i) {
    auto folded = fold(trim(titles_[i]));
    if (!folded.empty()) patterns_.push_back({std::move(folded), i});
  }
  std::stable_sort(patterns_.begin(), patterns_.end(),
                   [](const Pattern& a, const Pattern& b) { return a.folded.size() > b.folded.size(); });
}

SectionRules SectionRules::defaults() { return SectionRules(default_section_titles()); }

SectionRules SectionRules::from_file(const std::string& path) { return SectionRules(read_list_file(path)); }

Abbreviations::Abbreviations(const std::vector<std::string>& entries) {
  for (const auto& e : entries) {
    auto folded = fold(trim(e));
    if (!folded.empty()) entries_.insert(std::move(folded));
  }
}

Abbreviations Abbreviations::defaults() { return Abbreviations(default_abbreviations()); }

Abbreviations Abbreviations::from_file(const std::string& path) { return Abbreviations(read_list_file(path)); }

bool Abbreviations::contains(std::u32string_view token) const {
  std::u32string folded(token);
  for (auto& c : folded) c = fold_case(c);
  return entries_.count(folded) > 0;
}

std::vector<Section> split_sections(std::u32string_view text, const SectionRules& rules) {
  std::vector<Section> sections;
  if (text.empty()) return sections;

  std::vector<std::pair<std::size_t, std::size_t>> headers;  // (line start, title index)
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    if (auto idx = match_title(text, line_start, rules)) headers.emplace_back(line_start, *idx);
    auto nl = text.find(U'\n', line_start);
    if (nl == std::u32string_view::npos) break;
    line_start = nl + 1;
  }

  std::size_t first = headers.empty() ? text.size() : headers.front().first;
  if (first > 0) sections.push_back({std::nullopt, {0, first}});
  for (std::size_t h = 0; h < headers.size(); ++h) {
    std::size_t end = h + 1 < headers.size() ? headers[h + 1].first : text.size();
    sections.push_back({rules.titles()[headers[h].second], {headers[h].first, end}});
  }
  return sections;
}

std::vector<Section> split_sections(const Document& doc, const SectionRules& rules) {
  return split_sections(utf8::decode(doc.text), rules);
}

std::vector<Sentence> split_sentences(std::u32string_view text, const std::vector<Section>& sections,
                                      const Abbreviations& abbreviations) {
  std::vector<Sentence> out;
  for (std::size_t si = 0; si < sections.size(); ++si) {
    const std::size_t begin = sections[si].span.start;
    const std::size_t end = std::min(sections[si].span.end, text.size());
    std::size_t sentence_start = begin;
    std::size_t i = begin;
    if (sections[si].title) {
      // The heading is a sentence of its own.
      std::size_t h = begin;
      while (h < end && is_blank(text[h])) ++h;
      h = std::min(end, h + utf8::length(trim(*sections[si].title)));
      std::size_t colon = h;
      while (colon < end && is_blank(text[colon])) ++colon;
      if (colon < end && text[colon] == U':') h = colon + 1;
      push_trimmed(text, begin, h, si, out);
      sentence_start = i = h;
    }
    while (i < end) {
      const char32_t c = text[i];
      if (is_terminator(c)) {
        std::size_t k = i;
        while (k < end && is_terminator(text[k])) ++k;
        const bool single_period = (c == U'.' && k == i + 1);
        while (k < end && is_closer(text[k])) ++k;
        if (k < end && !is_space(text[k])) {
          i = k;
          continue;
        }
        bool exempt = false;
        if (single_period) {
          std::size_t tok = i;
          while (tok > sentence_start && !is_space(text[tok - 1])) --tok;
          while (tok < i && is_opener(text[tok])) ++tok;
          exempt = abbreviations.contains(text.substr(tok, i + 1 - tok));
        }
        if (!exempt) {
          push_trimmed(text, sentence_start, k, si, out);
          sentence_start = k;
        }
        i = k;
        continue;
      }
      if (is_space(c)) {
        std::size_t r = i;
        std::size_t newlines = 0;
        std::size_t blank_run = 0;
        std::size_t longest_blank_run = 0;
        while (r < end && is_space(text[r])) {
          if (text[r] == U'\n') ++newlines;
          if (is_blank(text[r])) {
            longest_blank_run = std::max(longest_blank_run, ++blank_run);
          } else {
            blank_run = 0;
          }
          ++r;
        }
        if (newlines >= 2 || longest_blank_run >= 3) {
          push_trimmed(text, sentence_start, i, si, out);
          sentence_start = r;
        }
        i = r;
        continue;
      }
      ++i;
    }
    push_trimmed(text, sentence_start, end, si, out);
  }
  return out;
}

std::vector<Sentence> split_sentences(const Document& doc, const std::vector<Section>& sections,
                                      const Abbreviations& abbreviations) {
  return split_sentences(utf8::decode(doc.text), sections, abbreviations);
}

}  // namespace symscribe
