#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "symscribe/text.hpp"

namespace symscribe {

struct Category {
  std::string id;
  std::string display_name;
  std::size_t line = 0;  // 1-based source row, 0 when built in memory

  friend bool operator==(const Category& a, const Category& b) {
    return a.id == b.id && a.display_name == b.display_name;
  }
};

struct Synonym {
  std::string raw;
  std::string normalized;
  std::size_t line = 0;

  friend bool operator==(const Synonym& a, const Synonym& b) {
    return a.raw == b.raw && a.normalized == b.normalized;
  }
};

struct Concept {
  std::string concept_id;
  std::string preferred_term;
  std::string category_id;
  std::vector<Synonym> synonyms;
  std::size_t line = 0;

  friend bool operator==(const Concept& a, const Concept& b) {
    return a.concept_id == b.concept_id && a.preferred_term == b.preferred_term &&
           a.category_id == b.category_id && a.synonyms == b.synonyms;
  }
};

enum class DiagnosticKind {
  MalformedRow,
  DanglingCategory,
  DuplicateSynonym,
  DuplicateCategory,
  EmptySynonym,
  EmptyDisplayName,
  InconsistentConcept,
  PreferredTermNotSynonym,
  EmptyLexicon,
};

std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::size_t line = 0;
  std::string message;
};

class LexiconError : public std::runtime_error {
 public:
  LexiconError(DiagnosticKind kind, std::vector<Diagnostic> diagnostics);

  DiagnosticKind kind() const { return kind_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  DiagnosticKind kind_;
  std::vector<Diagnostic> diagnostics_;
};

struct ConceptRef {
  std::string_view concept_id;
  std::string_view category_id;

  friend bool operator==(const ConceptRef&, const ConceptRef&) = default;
};

// Immutable hierarchical symptom lexicon: categories -> concepts -> synonyms.
// Build one with load_lexicon / parse_lexicon (validated) or Lexicon::assemble
// (unvalidated, for tooling that wants diagnostics instead of exceptions).
class Lexicon {
 public:
  static Lexicon assemble(std::vector<Category> categories, std::vector<Concept> concepts,
                          NormalizationPolicy policy = {});

  const std::vector<Category>& categories() const { return categories_; }
  const std::vector<Concept>& concepts() const { return concepts_; }
  const NormalizationPolicy& policy() const { return policy_; }
  std::size_t synonym_count() const;

  const Category* find_category(std::string_view id) const;
  const Concept* find_concept(std::string_view concept_id) const;

  // Normalizes `surface` under this lexicon's policy and returns its owner.
  std::optional<ConceptRef> lookup(std::string_view surface) const;
  std::optional<ConceptRef> lookup_normalized(std::u32string_view normalized) const;

  // sha256 of the source bytes; empty for in-memory lexicons.
  const std::string& fingerprint() const { return fingerprint_; }
  void set_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

  friend bool operator==(const Lexicon& a, const Lexicon& b) {
    return a.categories_ == b.categories_ && a.concepts_ == b.concepts_ && a.policy_ == b.policy_;
  }

 private:
  std::vector<Category> categories_;
  std::vector<Concept> concepts_;
  NormalizationPolicy policy_;
  std::string fingerprint_;
  std::unordered_map<std::u32string, std::size_t> by_surface_;  // -> concept index
  std::unordered_map<std::string, std::size_t> by_concept_;
  std::unordered_map<std::string, std::size_t> by_category_;
};

std::vector<Diagnostic> validate_lexicon(const Lexicon& lex);

// Parses the TSV lexicon format:
//   CAT <tab> id <tab> display_name
//   SYN <tab> concept_id <tab> preferred_term <tab> category_id <tab> synonym
// Blank lines and lines starting with '#' are ignored.
Lexicon parse_lexicon(std::string_view content, NormalizationPolicy policy = {});
Lexicon load_lexicon(const std::string& path, NormalizationPolicy policy = {});

std::string serialize_lexicon(const Lexicon& lex);

}  // namespace symscribe
