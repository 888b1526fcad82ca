#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symscribe/text.hpp"

namespace symscribe {

enum class AssertionStatus { Present, Absent, Hypothetical, Past, Other };
enum class BinaryAssertion { Positive, NonPositive };
enum class Direction { Forward, Backward, Bidirectional };
enum class Engine { RuleEngine, RemoteClassifier };

std::string_view to_string(AssertionStatus s);
std::string_view to_string(BinaryAssertion b);
std::string_view to_string(Direction d);
std::string_view to_string(Engine e);

// Parsers accept the lowercase names produced by to_string.
std::optional<AssertionStatus> parse_status(std::string_view s);
std::optional<BinaryAssertion> parse_binary(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<Engine> parse_engine(std::string_view s);

constexpr BinaryAssertion collapse(AssertionStatus s) {
  return s == AssertionStatus::Present ? BinaryAssertion::Positive : BinaryAssertion::NonPositive;
}

// Lower rank wins when several triggers cover one mention.
constexpr int precedence(AssertionStatus s) {
  switch (s) {
    case AssertionStatus::Absent: return 0;
    case AssertionStatus::Past: return 1;
    case AssertionStatus::Hypothetical: return 2;
    case AssertionStatus::Other: return 3;
    case AssertionStatus::Present: return 4;
  }
  return 5;
}

struct TriggerRule {
  std::string phrase;
  AssertionStatus status = AssertionStatus::Absent;
  Direction direction = Direction::Forward;
  std::optional<std::size_t> scope_tokens;  // nullopt: until the sentence ends
  std::vector<std::string> terminators;

  friend bool operator==(const TriggerRule&, const TriggerRule&) = default;
};

struct Trigger {
  std::string phrase;
  Span span;

  friend bool operator==(const Trigger&, const Trigger&) = default;
};

struct AssertionResult {
  AssertionStatus status = AssertionStatus::Present;
  BinaryAssertion binary = BinaryAssertion::Positive;
  std::optional<Trigger> trigger;
  Engine engine = Engine::RuleEngine;
  std::optional<double> score;  // remote classifier confidence

  friend bool operator==(const AssertionResult&, const AssertionResult&) = default;
};

class RuleError : public std::runtime_error {
 public:
  RuleError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

const std::vector<TriggerRule>& default_rules();

// TSV rows: TRIGGER <phrase> <status> <direction> <scope> <terminators,comma-sep>
// where scope is a token count or "sentence".
std::vector<TriggerRule> parse_rules(std::string_view content);
std::vector<TriggerRule> load_rules(const std::string& path);
std::string serialize_rules(const std::vector<TriggerRule>& rules);

// ConText-style rule engine over an immutable rule set. Trigger phrases and
// terminators match case-insensitively at word boundaries; scopes count word
// tokens between trigger and mention.
class AssertionEngine {
 public:
  AssertionEngine() : AssertionEngine(default_rules()) {}
  explicit AssertionEngine(std::vector<TriggerRule> rules);

  const std::vector<TriggerRule>& rules() const { return rules_; }

  // Trigger and terminator occurrences of one sentence, reusable across all
  // mentions in it.
  struct Context {
    NormalizedText norm;
    std::vector<std::size_t> to_norm;  // original offset -> normalized offset
    std::vector<std::pair<std::size_t, std::size_t>> words;
    struct Hit {
      std::size_t rule;
      std::size_t start;
      std::size_t end;
    };
    std::vector<std::vector<Hit>> triggers;     // indexed by rule, sorted by start
    std::vector<std::vector<Hit>> terminators;  // indexed like terminator_phrases_
  };

  Context analyze(std::u32string_view sentence) const;

  // `mention` is relative to the sentence; the trigger span in the result is too.
  AssertionResult assess(const Context& ctx, Span mention) const;
  AssertionResult assess(std::u32string_view sentence, Span mention) const;
  AssertionResult assess(std::string_view sentence_utf8, Span mention) const;

 private:
  std::vector<TriggerRule> rules_;
  std::vector<std::u32string> phrases_;
  std::vector<std::u32string> terminator_phrases_;
  std::vector<std::vector<std::size_t>> rule_terminators_;
};

AssertionResult assert_status(const AssertionEngine& engine, std::string_view sentence_utf8, Span mention);

}  // namespace symscribe
