// Brute-force mention finder used as the reference for MatcherIndex.

#include <algorithm>

#include "symscribe/ner.hpp"

namespace symscribe {

namespace {

struct Hit {
  std::size_t start;
  std::size_t end;
  const Concept* owner;
};

bool boundary_at(std::u32string_view s, std::size_t pos) {
  if (pos == 0 || pos == s.size()) return true;
  return !is_word_char(s[pos - 1]) || !is_word_char(s[pos]);
}

}  // namespace

std::vector<Mention> brute_force_mentions(const Lexicon& lex, std::string_view note_id, std::u32string_view text,
                                          const std::vector<Sentence>& sentences) {
  std::vector<Mention> mentions;
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const auto& sentence = sentences[si];
    const auto norm = normalize_mapped(text.substr(sentence.span.start, sentence.span.length()), lex.policy());
    const std::u32string_view hay = norm.text;

    std::vector<Hit> hits;
    for (const auto& c : lex.concepts()) {
      for (const auto& syn : c.synonyms) {
        const auto needle = utf8::decode(syn.normalized);
        if (needle.empty() || needle.size() > hay.size()) continue;
        for (std::size_t p = 0; p + needle.size() <= hay.size(); ++p) {
          if (hay.compare(p, needle.size(), needle) != 0) continue;
          if (!boundary_at(hay, p) || !boundary_at(hay, p + needle.size())) continue;
          Hit h{p, p + needle.size(), &c};
          // Duplicate surface forms within one concept produce one hit.
          if (std::none_of(hits.begin(), hits.end(),
                           [&](const Hit& o) { return o.start == h.start && o.end == h.end; })) {
            hits.push_back(h);
          }
        }
      }
    }

    std::vector<Hit> chosen;
    std::vector<bool> used(hits.size(), false);
    while (true) {
      std::size_t best = hits.size();
      for (std::size_t k = 0; k < hits.size(); ++k) {
        if (used[k]) continue;
        bool clashes = false;
        for (const auto& a : chosen) {
          if (hits[k].start < a.end && a.start < hits[k].end) clashes = true;
        }
        if (clashes) {
          used[k] = true;
          continue;
        }
        if (best == hits.size()) {
          best = k;
          continue;
        }
        const auto len_k = hits[k].end - hits[k].start;
        const auto len_b = hits[best].end - hits[best].start;
        if (len_k > len_b || (len_k == len_b && hits[k].start < hits[best].start)) best = k;
      }
      if (best == hits.size()) break;
      used[best] = true;
      chosen.push_back(hits[best]);
    }
    std::sort(chosen.begin(), chosen.end(), [](const Hit& a, const Hit& b) { return a.start < b.start; });

    for (const auto& h : chosen) {
      const std::size_t start = sentence.span.start + norm.source[h.start];
      const std::size_t end = sentence.span.start + norm.source[h.end - 1] + 1;
      mentions.push_back({std::string(note_id), {start, end}, utf8::encode(text.substr(start, end - start)),
                          h.owner->concept_id, h.owner->category_id, si, sentence.section_index});
    }
  }
  std::stable_sort(mentions.begin(), mentions.end(),
                   [](const Mention& a, const Mention& b) { return a.span.start < b.span.start; });
  return mentions;
}

std::vector<Mention> brute_force_mentions(const Lexicon& lex, const Document& doc,
                                          const std::vector<Sentence>& sentences) {
  return brute_force_mentions(lex, doc.note_id, utf8::decode(doc.text), sentences);
}

}  // namespace symscribe
