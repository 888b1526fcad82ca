#include "symscribe/ner.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace symscribe {

std::int32_t MatcherIndex::child(const Node& node, char32_t c) {
  auto it = std::lower_bound(node.next.begin(), node.next.end(), c,
                             [](const auto& edge, char32_t key) { return edge.first < key; });
  return (it != node.next.end() && it->first == c) ? it->second : -1;
}

MatcherIndex MatcherIndex::compile(const Lexicon& lex) {
  MatcherIndex index;
  index.policy_ = lex.policy();
  index.synonym_count_ = lex.synonym_count();
  index.nodes_.emplace_back();

  std::unordered_map<std::u32string, std::uint32_t> seen;
  for (const auto& c : lex.concepts()) {
    for (const auto& s : c.synonyms) {
      auto norm = utf8::decode(s.normalized);
      if (norm.empty() || seen.count(norm) > 0) continue;
      const auto id = static_cast<std::uint32_t>(index.patterns_.size());
      seen.emplace(norm, id);
      index.patterns_.push_back({norm.size(), c.concept_id, c.category_id});

      std::int32_t state = 0;
      for (char32_t ch : norm) {
        auto next = child(index.nodes_[state], ch);
        if (next < 0) {
          next = static_cast<std::int32_t>(index.nodes_.size());
          index.nodes_.emplace_back();
          auto& edges = index.nodes_[state].next;
          auto pos = std::lower_bound(edges.begin(), edges.end(), ch,
                                      [](const auto& edge, char32_t key) { return edge.first < key; });
          edges.insert(pos, {ch, next});
        }
        state = next;
      }
      index.nodes_[state].output = static_cast<std::int32_t>(id);
    }
  }

  // Breadth-first failure links.
  std::deque<std::int32_t> queue;
  for (const auto& [ch, next] : index.nodes_[0].next) {
    index.nodes_[next].fail = 0;
    queue.push_back(next);
  }
  while (!queue.empty()) {
    const auto state = queue.front();
    queue.pop_front();
    for (const auto& [ch, next] : index.nodes_[state].next) {
      std::int32_t f = index.nodes_[state].fail;
      while (f != 0 && child(index.nodes_[f], ch) < 0) f = index.nodes_[f].fail;
      auto target = child(index.nodes_[f], ch);
      index.nodes_[next].fail = (target >= 0 && target != next) ? target : 0;
      const auto& fail_node = index.nodes_[index.nodes_[next].fail];
      index.nodes_[next].dict_link = fail_node.output >= 0 ? index.nodes_[next].fail : fail_node.dict_link;
      queue.push_back(next);
    }
  }
  return index;
}

std::int32_t MatcherIndex::step(std::int32_t state, char32_t c) const {
  while (true) {
    auto next = child(nodes_[state], c);
    if (next >= 0) return next;
    if (state == 0) return 0;
    state = nodes_[state].fail;
  }
}

std::vector<Candidate> MatcherIndex::scan(std::u32string_view normalized) const {
  std::vector<Candidate> out;
  std::int32_t state = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    state = step(state, normalized[i]);
    const std::size_t end = i + 1;
    if (!is_word_boundary(normalized, end)) continue;
    for (auto s = nodes_[state].output >= 0 ? state : nodes_[state].dict_link; s >= 0; s = nodes_[s].dict_link) {
      const auto id = static_cast<std::uint32_t>(nodes_[s].output);
      const std::size_t start = end - patterns_[id].length;
      if (is_word_boundary(normalized, start)) out.push_back({start, end, id});
    }
  }
  return out;
}

std::vector<Candidate> MatcherIndex::resolve(std::vector<Candidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const auto la = a.end - a.start;
    const auto lb = b.end - b.start;
    if (la != lb) return la > lb;
    return a.start < b.start;
  });
  std::size_t extent = 0;
  for (const auto& c : candidates) extent = std::max(extent, c.end);
  std::vector<bool> taken(extent, false);
  std::vector<Candidate> accepted;
  for (const auto& c : candidates) {
    bool free = true;
    for (std::size_t k = c.start; k < c.end; ++k) {
      if (taken[k]) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    std::fill(taken.begin() + static_cast<std::ptrdiff_t>(c.start), taken.begin() + static_cast<std::ptrdiff_t>(c.end),
              true);
    accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end(), [](const Candidate& a, const Candidate& b) { return a.start < b.start; });
  return accepted;
}

std::vector<Mention> find_mentions(const MatcherIndex& index, std::string_view note_id, std::u32string_view text,
                                   const std::vector<Sentence>& sentences) {
  std::vector<Mention> mentions;
  for (std::size_t si = 0; si < sentences.size(); ++si) {
    const auto& sentence = sentences[si];
    const auto slice = text.substr(sentence.span.start, sentence.span.length());
    const auto norm = normalize_mapped(slice, index.policy());
    for (const auto& c : MatcherIndex::resolve(index.scan(norm.text))) {
      const auto& info = index.pattern(c.pattern);
      Span span{sentence.span.start + norm.source[c.start], sentence.span.start + norm.source[c.end - 1] + 1};
      mentions.push_back({std::string(note_id), span, utf8::encode(text.substr(span.start, span.length())),
                          info.concept_id, info.category_id, si, sentence.section_index});
    }
  }
  std::stable_sort(mentions.begin(), mentions.end(),
                   [](const Mention& a, const Mention& b) { return a.span.start < b.span.start; });
  return mentions;
}

std::vector<Mention> find_mentions(const MatcherIndex& index, const Document& doc,
                                   const std::vector<Sentence>& sentences) {
  return find_mentions(index, doc.note_id, utf8::decode(doc.text), sentences);
}

}  // namespace symscribe
