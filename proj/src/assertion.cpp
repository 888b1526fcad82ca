#include "symscribe/assertion.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

namespace symscribe {

std::string_view to_string(AssertionStatus s) {
  switch (s) {
    case AssertionStatus::Present: return "present";
    case AssertionStatus::Absent: return "absent";
    case AssertionStatus::Hypothetical: return "hypothetical";
    case AssertionStatus::Past: return "past";
    case AssertionStatus::Other: return "other";
  }
  return "other";
}

std::string_view to_string(BinaryAssertion b) {
  return b == BinaryAssertion::Positive ? "positive" : "non_positive";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Forward: return "forward";
    case Direction::Backward: return "backward";
    case Direction::Bidirectional: return "bidirectional";
  }
  return "forward";
}

std::string_view to_string(Engine e) { return e == Engine::RuleEngine ? "rule" : "remote"; }

std::optional<AssertionStatus> parse_status(std::string_view s) {
  const auto v = to_lower_ascii(trim(s));
  for (auto st : {AssertionStatus::Present, AssertionStatus::Absent, AssertionStatus::Hypothetical,
                  AssertionStatus::Past, AssertionStatus::Other}) {
    if (v == to_string(st)) return st;
  }
  return std::nullopt;
}

std::optional<BinaryAssertion> parse_binary(std::string_view s) {
  const auto v = to_lower_ascii(trim(s));
  if (v == "positive" || v == "1") return BinaryAssertion::Positive;
  if (v == "non_positive" || v == "nonpositive" || v == "0") return BinaryAssertion::NonPositive;
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
  const auto v = to_lower_ascii(trim(s));
  for (auto d : {Direction::Forward, Direction::Backward, Direction::Bidirectional}) {
    if (v == to_string(d)) return d;
  }
  return std::nullopt;
}

std::optional<Engine> parse_engine(std::string_view s) {
  if (s == "rule") return Engine::RuleEngine;
  if (s == "remote") return Engine::RemoteClassifier;
  return std::nullopt;
}

const std::vector<TriggerRule>& default_rules() {
  static const std::vector<TriggerRule> rules = [] {
    const std::vector<std::string> stops = {"but", "however", "except", ";"};
    using S = AssertionStatus;
    using D = Direction;
    std::vector<TriggerRule> r = {
        {"no", S::Absent, D::Forward, 6, stops},
        {"denies", S::Absent, D::Forward, std::nullopt, stops},
        {"denied", S::Absent, D::Forward, std::nullopt, stops},
        {"negative for", S::Absent, D::Forward, std::nullopt, stops},
        {"without", S::Absent, D::Forward, std::nullopt, stops},
        {"not", S::Absent, D::Forward, std::nullopt, stops},
        {"history of", S::Past, D::Forward, std::nullopt, stops},
        {"h/o", S::Past, D::Forward, std::nullopt, stops},
        {"resolved", S::Past, D::Backward, 3, stops},
        {"if", S::Hypothetical, D::Forward, std::nullopt, stops},
        {"as needed", S::Hypothetical, D::Bidirectional, 6, stops},
        {"prn", S::Hypothetical, D::Bidirectional, 6, stops},
        {"should", S::Hypothetical, D::Forward, std::nullopt, stops},
        {"in case of", S::Hypothetical, D::Forward, std::nullopt, stops},
        {"hypothetical", S::Hypothetical, D::Forward, std::nullopt, stops},
    };
    return r;
  }();
  return rules;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto k = s.find(sep, pos);
    if (k == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, k - pos));
    pos = k + 1;
  }
}

const NormalizationPolicy kRulePolicy{true, true};

void find_all(std::u32string_view hay, std::u32string_view needle, std::size_t index,
              std::vector<AssertionEngine::Context::Hit>& out) {
  if (needle.empty()) return;
  std::size_t pos = hay.find(needle);
  while (pos != std::u32string_view::npos) {
    if (is_word_boundary(hay, pos) && is_word_boundary(hay, pos + needle.size())) {
      out.push_back({index, pos, pos + needle.size()});
    }
    pos = hay.find(needle, pos + 1);
  }
}

}  // namespace

std::vector<TriggerRule> parse_rules(std::string_view content) {
  std::vector<TriggerRule> rules;
  std::size_t line_no = 0;
  for (auto line : split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    auto cells = split(line, '\t');
    if (cells.size() != 6 || cells[0] != "TRIGGER") {
      throw RuleError(line_no, "expected TRIGGER row with 6 tab-separated columns");
    }
    TriggerRule rule;
    rule.phrase = std::string(trim(cells[1]));
    if (rule.phrase.empty()) throw RuleError(line_no, "empty trigger phrase");
    auto status = parse_status(cells[2]);
    if (!status) throw RuleError(line_no, "unknown status '" + std::string(cells[2]) + "'");
    rule.status = *status;
    auto direction = parse_direction(cells[3]);
    if (!direction) throw RuleError(line_no, "unknown direction '" + std::string(cells[3]) + "'");
    rule.direction = *direction;
    auto scope = trim(cells[4]);
    if (to_lower_ascii(scope) != "sentence") {
      std::size_t n = 0;
      auto [ptr, ec] = std::from_chars(scope.data(), scope.data() + scope.size(), n);
      if (ec != std::errc() || ptr != scope.data() + scope.size() || n < 1) {
        throw RuleError(line_no, "scope must be a positive token count or 'sentence'");
      }
      rule.scope_tokens = n;
    }
    if (!trim(cells[5]).empty()) {
      for (auto t : split(cells[5], ',')) {
        auto term = trim(t);
        if (!term.empty()) rule.terminators.emplace_back(term);
      }
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<TriggerRule> load_rules(const std::string& path) { return parse_rules(read_file(path)); }

std::string serialize_rules(const std::vector<TriggerRule>& rules) {
  std::string out;
  for (const auto& r : rules) {
    out += "TRIGGER\t" + r.phrase + "\t" + std::string(to_string(r.status)) + "\t" +
           std::string(to_string(r.direction)) + "\t" +
           (r.scope_tokens ? std::to_string(*r.scope_tokens) : std::string("sentence")) + "\t";
    for (std::size_t i = 0; i < r.terminators.size(); ++i) {
      if (i > 0) out += ",";
      out += r.terminators[i];
    }
    out += "\n";
  }
  return out;
}

AssertionEngine::AssertionEngine(std::vector<TriggerRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    phrases_.push_back(normalize(utf8::decode(r.phrase), kRulePolicy));
    std::vector<std::size_t> ids;
    for (const auto& t : r.terminators) {
      auto norm = normalize(utf8::decode(t), kRulePolicy);
      auto it = std::find(terminator_phrases_.begin(), terminator_phrases_.end(), norm);
      if (it == terminator_phrases_.end()) {
        ids.push_back(terminator_phrases_.size());
        terminator_phrases_.push_back(std::move(norm));
      } else {
        ids.push_back(static_cast<std::size_t>(it - terminator_phrases_.begin()));
      }
    }
    rule_terminators_.push_back(std::move(ids));
  }
}

AssertionEngine::Context AssertionEngine::analyze(std::u32string_view sentence) const {
  Context ctx;
  ctx.norm = normalize_mapped(sentence, kRulePolicy);
  const auto& text = ctx.norm.text;

  ctx.to_norm.resize(sentence.size() + 1);
  for (std::size_t p = 0, k = 0; p <= sentence.size(); ++p) {
    while (k < text.size() && ctx.norm.source[k] < p) ++k;
    ctx.to_norm[p] = k;
  }

  for (std::size_t i = 0; i < text.size();) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    ctx.words.emplace_back(i, j);
    i = j;
  }

  ctx.triggers.resize(phrases_.size());
  for (std::size_t r = 0; r < phrases_.size(); ++r) find_all(text, phrases_[r], r, ctx.triggers[r]);
  ctx.terminators.resize(terminator_phrases_.size());
  for (std::size_t t = 0; t < terminator_phrases_.size(); ++t) {
    find_all(text, terminator_phrases_[t], t, ctx.terminators[t]);
  }
  return ctx;
}

AssertionResult AssertionEngine::assess(const Context& ctx, Span mention) const {
  AssertionResult result;
  if (ctx.norm.text.empty() || mention.end <= mention.start) return result;

  const std::size_t limit = ctx.to_norm.size() - 1;
  const std::size_t ms = ctx.to_norm[std::min(mention.start, limit)];
  const std::size_t me = std::min(ctx.to_norm[std::min(mention.end, limit) - 1] + 1, ctx.norm.text.size());

  using Hit = Context::Hit;
  const auto words_between = [&](std::size_t from, std::size_t to) -> std::size_t {
    const auto& w = ctx.words;
    const auto lo = std::lower_bound(w.begin(), w.end(), from, [](const auto& x, std::size_t v) { return x.first < v; });
    const auto hi = std::upper_bound(w.begin(), w.end(), to, [](std::size_t v, const auto& x) { return v < x.second; });
    return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
  };
  const auto blocked = [&](std::size_t rule, std::size_t from, std::size_t to) {
    for (auto t : rule_terminators_[rule]) {
      const auto& hits = ctx.terminators[t];
      const auto it = std::lower_bound(hits.begin(), hits.end(), from,
                                       [](const Hit& h, std::size_t v) { return h.start < v; });
      if (it != hits.end() && it->end <= to) return true;
    }
    return false;
  };

  const Hit* best = nullptr;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  const auto consider = [&](const Hit& hit, std::size_t distance) {
    if (best != nullptr) {
      const int p = precedence(rules_[hit.rule].status);
      const int bp = precedence(rules_[best->rule].status);
      if (!(p < bp || (p == bp && (distance < best_distance ||
                                   (distance == best_distance && hit.start < best->start))))) {
        return;
      }
    }
    best = &hit;
    best_distance = distance;
  };
  const auto in_scope = [](const TriggerRule& rule, std::size_t gap) {
    return !rule.scope_tokens || gap + 1 <= *rule.scope_tokens;
  };

  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const auto& rule = rules_[r];
    const auto& hits = ctx.triggers[r];
    if (rule.status == AssertionStatus::Present || hits.empty()) continue;
    // Nearest hit on each side dominates farther ones of the same rule.
    if (rule.direction != Direction::Backward) {
      auto it = std::upper_bound(hits.begin(), hits.end(), ms, [](std::size_t v, const Hit& h) { return v < h.end; });
      if (it != hits.begin()) {
        --it;
        if (!blocked(r, it->end, ms)) {
          const auto gap = words_between(it->end, ms);
          if (in_scope(rule, gap)) {
            while (it != hits.begin() && words_between(std::prev(it)->end, ms) == gap &&
                   !blocked(r, std::prev(it)->end, ms)) {
              --it;
            }
            consider(*it, gap);
          }
        }
      }
    }
    if (rule.direction != Direction::Forward) {
      const auto it = std::lower_bound(hits.begin(), hits.end(), me,
                                       [](const Hit& h, std::size_t v) { return h.start < v; });
      if (it != hits.end() && !blocked(r, me, it->start)) {
        const auto gap = words_between(me, it->start);
        if (in_scope(rule, gap)) consider(*it, gap);
      }
    }
  }

  if (best != nullptr) {
    const auto& rule = rules_[best->rule];
    result.status = rule.status;
    result.binary = collapse(rule.status);
    const auto& src = ctx.norm.source;
    result.trigger = Trigger{rule.phrase, {src[best->start], src[best->end - 1] + 1}};
  }
  return result;
}

AssertionResult AssertionEngine::assess(std::u32string_view sentence, Span mention) const {
  return assess(analyze(sentence), mention);
}

AssertionResult AssertionEngine::assess(std::string_view sentence_utf8, Span mention) const {
  return assess(std::u32string_view(utf8::decode(sentence_utf8)), mention);
}

AssertionResult assert_status(const AssertionEngine& engine, std::string_view sentence_utf8, Span mention) {
  return engine.assess(sentence_utf8, mention);
}

}  // namespace symscribe
