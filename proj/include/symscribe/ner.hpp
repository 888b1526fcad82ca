#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "symscribe/lexicon.hpp"
#include "symscribe/segment.hpp"
#include "symscribe/text.hpp"

namespace symscribe {

struct Mention {
  std::string note_id;
  Span span;  // into the original note text
  std::string matched_text;
  std::string concept_id;
  std::string category_id;
  std::size_t sentence_index = 0;
  std::size_t section_index = 0;

  friend bool operator==(const Mention&, const Mention&) = default;
};

// A synonym occurrence inside normalized sentence text.
struct Candidate {
  std::size_t start = 0;  // normalized offsets
  std::size_t end = 0;
  std::uint32_t pattern = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Aho-Corasick automaton over every normalized synonym of one lexicon.
class MatcherIndex {
 public:
  static MatcherIndex compile(const Lexicon& lex);

  std::size_t synonym_count() const { return synonym_count_; }
  std::size_t pattern_count() const { return patterns_.size(); }
  std::size_t state_count() const { return nodes_.size(); }
  const NormalizationPolicy& policy() const { return policy_; }

  // All word-boundary occurrences in `normalized`, unresolved.
  std::vector<Candidate> scan(std::u32string_view normalized) const;

  // Longest-first, then leftmost, greedy non-overlapping selection; result is
  // sorted by start.
  static std::vector<Candidate> resolve(std::vector<Candidate> candidates);

  struct PatternInfo {
    std::size_t length;
    std::string concept_id;
    std::string category_id;
  };
  const PatternInfo& pattern(std::uint32_t id) const { return patterns_[id]; }

 private:
  struct Node {
    std::vector<std::pair<char32_t, std::int32_t>> next;  // sorted by char
    std::int32_t fail = 0;
    std::int32_t output = -1;       // pattern ending exactly here
    std::int32_t dict_link = -1;    // nearest suffix state with an output
  };

  std::int32_t step(std::int32_t state, char32_t c) const;
  static std::int32_t child(const Node& node, char32_t c);

  std::vector<Node> nodes_;
  std::vector<PatternInfo> patterns_;
  NormalizationPolicy policy_;
  std::size_t synonym_count_ = 0;
};

std::vector<Mention> find_mentions(const MatcherIndex& index, std::string_view note_id, std::u32string_view text,
                                   const std::vector<Sentence>& sentences);
std::vector<Mention> find_mentions(const MatcherIndex& index, const Document& doc,
                                   const std::vector<Sentence>& sentences);

// Reference implementation: compares every synonym at every position. Shares no
// matching or selection code with MatcherIndex.
std::vector<Mention> brute_force_mentions(const Lexicon& lex, std::string_view note_id, std::u32string_view text,
                                          const std::vector<Sentence>& sentences);
std::vector<Mention> brute_force_mentions(const Lexicon& lex, const Document& doc,
                                          const std::vector<Sentence>& sentences);

}  // namespace symscribe
