#include "symscribe/lexicon.hpp"

#include <unordered_set>

#include "symscribe/hash.hpp"

namespace symscribe {

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::MalformedRow: return "MalformedRow";
    case DiagnosticKind::DanglingCategory: return "DanglingCategory";
    case DiagnosticKind::DuplicateSynonym: return "DuplicateSynonym";
    case DiagnosticKind::DuplicateCategory: return "DuplicateCategory";
    case DiagnosticKind::EmptySynonym: return "EmptySynonym";
    case DiagnosticKind::EmptyDisplayName: return "EmptyDisplayName";
    case DiagnosticKind::InconsistentConcept: return "InconsistentConcept";
    case DiagnosticKind::PreferredTermNotSynonym: return "PreferredTermNotSynonym";
    case DiagnosticKind::EmptyLexicon: return "EmptyLexicon";
  }
  return "Unknown";
}

namespace {

std::string describe(const std::vector<Diagnostic>& diagnostics) {
  std::string msg = "invalid lexicon";
  for (const auto& d : diagnostics) {
    msg += "\n  ";
    if (d.line > 0) msg += "line " + std::to_string(d.line) + ": ";
    msg += std::string(to_string(d.kind)) + ": " + d.message;
  }
  return msg;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    auto tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      return cells;
    }
    cells.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

}  // namespace

LexiconError::LexiconError(DiagnosticKind kind, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(describe(diagnostics)), kind_(kind), diagnostics_(std::move(diagnostics)) {}

Lexicon Lexicon::assemble(std::vector<Category> categories, std::vector<Concept> concepts,
                          NormalizationPolicy policy) {
  Lexicon lex;
  lex.policy_ = policy;
  lex.categories_ = std::move(categories);
  lex.concepts_ = std::move(concepts);
  for (std::size_t i = 0; i < lex.categories_.size(); ++i) {
    lex.by_category_.emplace(lex.categories_[i].id, i);
  }
  for (std::size_t i = 0; i < lex.concepts_.size(); ++i) {
    auto& c = lex.concepts_[i];
    lex.by_concept_.emplace(c.concept_id, i);
    for (auto& s : c.synonyms) {
      auto norm = normalize(utf8::decode(s.raw), policy);
      s.normalized = utf8::encode(norm);
      if (!norm.empty()) lex.by_surface_.emplace(std::move(norm), i);
    }
  }
  return lex;
}

std::size_t Lexicon::synonym_count() const {
  std::size_t n = 0;
  for (const auto& c : concepts_) n += c.synonyms.size();
  return n;
}

const Category* Lexicon::find_category(std::string_view id) const {
  auto it = by_category_.find(std::string(id));
  return it == by_category_.end() ? nullptr : &categories_[it->second];
}

const Concept* Lexicon::find_concept(std::string_view concept_id) const {
  auto it = by_concept_.find(std::string(concept_id));
  return it == by_concept_.end() ? nullptr : &concepts_[it->second];
}

std::optional<ConceptRef> Lexicon::lookup_normalized(std::u32string_view normalized) const {
  auto it = by_surface_.find(std::u32string(normalized));
  if (it == by_surface_.end()) return std::nullopt;
  const auto& c = concepts_[it->second];
  return ConceptRef{c.concept_id, c.category_id};
}

std::optional<ConceptRef> Lexicon::lookup(std::string_view surface) const {
  return lookup_normalized(normalize(utf8::decode(surface), policy_));
}

std::vector<Diagnostic> validate_lexicon(const Lexicon& lex) {
  std::vector<Diagnostic> out;
  if (lex.categories().empty() || lex.concepts().empty()) {
    out.push_back({DiagnosticKind::EmptyLexicon, 0, "lexicon needs at least one category and one concept"});
  }

  std::unordered_set<std::string> category_ids;
  for (const auto& cat : lex.categories()) {
    if (!category_ids.insert(cat.id).second) {
      out.push_back({DiagnosticKind::DuplicateCategory, cat.line, "category '" + cat.id + "' defined twice"});
    }
    if (trim(cat.display_name).empty()) {
      out.push_back({DiagnosticKind::EmptyDisplayName, cat.line, "category '" + cat.id + "' has no display name"});
    }
  }

  std::unordered_set<std::string> concept_ids;
  std::unordered_map<std::string, std::string> owner;  // normalized surface -> concept_id
  for (const auto& c : lex.concepts()) {
    if (!concept_ids.insert(c.concept_id).second) {
      out.push_back({DiagnosticKind::InconsistentConcept, c.line, "concept '" + c.concept_id + "' defined twice"});
    }
    if (category_ids.count(c.category_id) == 0) {
      out.push_back({DiagnosticKind::DanglingCategory, c.line,
                     "concept '" + c.concept_id + "' references unknown category '" + c.category_id + "'"});
    }
    if (c.synonyms.empty()) {
      out.push_back({DiagnosticKind::EmptySynonym, c.line, "concept '" + c.concept_id + "' has no synonyms"});
    }
    bool preferred_found = false;
    const auto preferred = normalize_utf8(c.preferred_term, lex.policy());
    for (const auto& s : c.synonyms) {
      if (s.normalized.empty()) {
        out.push_back({DiagnosticKind::EmptySynonym, s.line, "empty synonym under concept '" + c.concept_id + "'"});
        continue;
      }
      if (s.normalized == preferred) preferred_found = true;
      auto [it, inserted] = owner.emplace(s.normalized, c.concept_id);
      if (!inserted && it->second != c.concept_id) {
        out.push_back({DiagnosticKind::DuplicateSynonym, s.line,
                       "synonym '" + s.normalized + "' claimed by both '" + it->second + "' and '" + c.concept_id + "'"});
      }
    }
    if (!c.synonyms.empty() && !preferred_found) {
      out.push_back({DiagnosticKind::PreferredTermNotSynonym, c.line,
                     "preferred term '" + c.preferred_term + "' of '" + c.concept_id + "' is not among its synonyms"});
    }
  }
  return out;
}

Lexicon parse_lexicon(std::string_view content, NormalizationPolicy policy) {
  std::vector<Diagnostic> problems;
  std::vector<Category> categories;
  std::vector<Concept> concepts;
  std::unordered_map<std::string, std::size_t> concept_index;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    auto line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;

    auto cells = split_tabs(line);
    if (cells[0] == "CAT") {
      if (cells.size() != 3) {
        problems.push_back({DiagnosticKind::MalformedRow, line_no,
                            "CAT row needs 3 columns, found " + std::to_string(cells.size())});
        continue;
      }
      categories.push_back({std::string(cells[1]), std::string(cells[2]), line_no});
    } else if (cells[0] == "SYN") {
      if (cells.size() != 5) {
        problems.push_back({DiagnosticKind::MalformedRow, line_no,
                            "SYN row needs 5 columns, found " + std::to_string(cells.size())});
        continue;
      }
      std::string id(cells[1]);
      auto [it, inserted] = concept_index.emplace(id, concepts.size());
      if (inserted) {
        concepts.push_back({id, std::string(cells[2]), std::string(cells[3]), {}, line_no});
      } else {
        auto& existing = concepts[it->second];
        if (existing.preferred_term != cells[2] || existing.category_id != cells[3]) {
          problems.push_back({DiagnosticKind::InconsistentConcept, line_no,
                              "concept '" + id + "' disagrees with its first row (line " +
                                  std::to_string(existing.line) + ")"});
          continue;
        }
      }
      concepts[it->second].synonyms.push_back({std::string(cells[4]), {}, line_no});
    } else {
      problems.push_back({DiagnosticKind::MalformedRow, line_no, "unknown record kind '" + std::string(cells[0]) + "'"});
    }
  }

  auto lex = Lexicon::assemble(std::move(categories), std::move(concepts), policy);
  auto diagnostics = validate_lexicon(lex);
  problems.insert(problems.end(), diagnostics.begin(), diagnostics.end());
  if (!problems.empty()) {
    auto kind = problems.front().kind;
    throw LexiconError(kind, std::move(problems));
  }
  lex.set_fingerprint(sha256_hex(content));
  return lex;
}

Lexicon load_lexicon(const std::string& path, NormalizationPolicy policy) {
  return parse_lexicon(read_file(path), policy);
}

std::string serialize_lexicon(const Lexicon& lex) {
  std::string out;
  for (const auto& cat : lex.categories()) {
    out += "CAT\t" + cat.id + "\t" + cat.display_name + "\n";
  }
  for (const auto& c : lex.concepts()) {
    for (const auto& s : c.synonyms) {
      out += "SYN\t" + c.concept_id + "\t" + c.preferred_term + "\t" + c.category_id + "\t" + s.raw + "\n";
    }
  }
  return out;
}

}  // namespace symscribe
