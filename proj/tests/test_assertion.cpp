#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <limits>
#include <random>
#include <thread>

#include "support.hpp"
#include "symscribe/assertion.hpp"
#include "symscribe/remote.hpp"
#include "symscribe/selftest.hpp"

using namespace symscribe;

namespace {

AssertionResult assess(const std::string& sentence, const std::string& mention) {
  static const AssertionEngine engine;
  const auto at = utf8::length(sentence.substr(0, sentence.find(mention)));
  return assert_status(engine, sentence, {at, at + utf8::length(mention)});
}

// Every trigger against every mention, with linear scans for words and terminators.
AssertionResult naive_assess(const AssertionEngine& engine, const AssertionEngine::Context& ctx, Span mention) {
  AssertionResult result;
  if (ctx.norm.text.empty() || mention.end <= mention.start) return result;
  const auto& rules = engine.rules();
  const std::size_t limit = ctx.to_norm.size() - 1;
  const std::size_t ms = ctx.to_norm[std::min(mention.start, limit)];
  const std::size_t me = std::min(ctx.to_norm[std::min(mention.end, limit) - 1] + 1, ctx.norm.text.size());
  const auto words_between = [&](std::size_t from, std::size_t to) {
    std::size_t n = 0;
    for (const auto& [ws, we] : ctx.words) n += ws >= from && we <= to;
    return n;
  };
  const auto blocked = [&](const TriggerRule& rule, std::size_t from, std::size_t to) {
    for (const auto& term : rule.terminators) {
      const auto phrase = normalize(utf8::decode(term), {true, true});
      for (std::size_t p = from; p + phrase.size() <= to; ++p) {
        if (ctx.norm.text.compare(p, phrase.size(), phrase) == 0 && is_word_boundary(ctx.norm.text, p) &&
            is_word_boundary(ctx.norm.text, p + phrase.size())) {
          return true;
        }
      }
    }
    return false;
  };
  const AssertionEngine::Context::Hit* best = nullptr;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  for (const auto& hits : ctx.triggers) {
    for (const auto& hit : hits) {
      const auto& rule = rules[hit.rule];
      if (rule.status == AssertionStatus::Present) continue;
      std::optional<std::size_t> distance;
      const auto ok = [&](std::size_t gap) { return !rule.scope_tokens || gap + 1 <= *rule.scope_tokens; };
      if (rule.direction != Direction::Backward && hit.end <= ms && !blocked(rule, hit.end, ms) &&
          ok(words_between(hit.end, ms))) {
        distance = words_between(hit.end, ms);
      }
      if (rule.direction != Direction::Forward && me <= hit.start && !blocked(rule, me, hit.start) &&
          ok(words_between(me, hit.start))) {
        distance = words_between(me, hit.start);
      }
      if (!distance) continue;
      const int p = precedence(rule.status);
      const int bp = best ? precedence(rules[best->rule].status) : 99;
      if (p < bp || (p == bp && (*distance < best_distance ||
                                 (*distance == best_distance && hit.start < best->start)))) {
        best = &hit;
        best_distance = *distance;
      }
    }
  }
  if (best != nullptr) {
    const auto& rule = rules[best->rule];
    result.status = rule.status;
    result.binary = collapse(rule.status);
    result.trigger = Trigger{rule.phrase, {ctx.norm.source[best->start], ctx.norm.source[best->end - 1] + 1}};
  }
  return result;
}

// Stub classifier on a free port; `handler` decides every response.
class StubClassifier {
 public:
  explicit StubClassifier(httplib::Server::Handler handler) {
    server_.Post("/classify", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubClassifier() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

httplib::Server::Handler reply(std::string body) {
  return [body](const httplib::Request&, httplib::Response& res) { res.set_content(body, "application/json"); };
}

}  // namespace

TEST(Assertion, Collapse) {
  EXPECT_EQ(collapse(AssertionStatus::Present), BinaryAssertion::Positive);
  for (auto s : {AssertionStatus::Absent, AssertionStatus::Past, AssertionStatus::Hypothetical, AssertionStatus::Other}) {
    EXPECT_EQ(collapse(s), BinaryAssertion::NonPositive);
  }
}

TEST(Assertion, AnchorCases) {
  EXPECT_EQ(assess("there is no diarrhea", "diarrhea").status, AssertionStatus::Absent);
  for (const char* m : {"fever", "chills", "fatigue"}) {
    EXPECT_EQ(assess("negative for fever, chills, and fatigue", m).binary, BinaryAssertion::NonPositive) << m;
  }
  EXPECT_EQ(assess("history of migraines", "migraines").status, AssertionStatus::Past);
  EXPECT_EQ(assess("ibuprofen as needed for headache", "headache").status, AssertionStatus::Hypothetical);
  const auto present = assess("Patient reports severe headache.", "headache");
  EXPECT_EQ(present.status, AssertionStatus::Present);
  EXPECT_EQ(present.binary, BinaryAssertion::Positive);
  EXPECT_FALSE(present.trigger);
}

TEST(Assertion, GoldenSuite) {
  const auto& cases = golden_assertion_cases();
  ASSERT_GE(cases.size(), 40u);
  std::size_t bounded = 0;
  const AssertionEngine engine;
  for (const auto& c : cases) {
    const auto r = assert_status(engine, c.sentence, golden_span(c));
    EXPECT_EQ(r.status, c.expected) << c.sentence << " / " << c.mention;
    EXPECT_EQ(r.binary, collapse(r.status));
    EXPECT_EQ(r.trigger.has_value(), r.status != AssertionStatus::Present);
    if (c.tag == "scope" || c.tag == "terminator") ++bounded;
  }
  EXPECT_GE(bounded, 10u);
}

TEST(Assertion, TriggerSpanPointsAtPhrase) {
  const std::string s = "Patient denies chest pain.";
  const auto r = assess(s, "chest pain");
  ASSERT_TRUE(r.trigger);
  EXPECT_EQ(r.trigger->phrase, "denies");
  EXPECT_EQ(r.trigger->span, (Span{8, 14}));
}

TEST(Assertion, PrecedenceAbsentOverPast) {
  EXPECT_EQ(assess("No history of headache.", "headache").status, AssertionStatus::Absent);
  EXPECT_EQ(assess("If no fever, continue.", "fever").status, AssertionStatus::Absent);
}

TEST(Assertion, NoHasLimitedScope) {
  EXPECT_EQ(assess("No a b c d e fatigue.", "fatigue").status, AssertionStatus::Absent);
  EXPECT_EQ(assess("No a b c d e f g fatigue.", "fatigue").status, AssertionStatus::Present);
}

TEST(Assertion, TerminatorFlipsToPresent) {
  for (const char* trig : {"denies", "negative for", "history of", "without"}) {
    const std::string base = std::string(trig) + " cough and fever";
    const std::string cut = std::string(trig) + " cough but fever";
    EXPECT_NE(assess(base, "fever").status, AssertionStatus::Present) << base;
    EXPECT_EQ(assess(cut, "fever").status, AssertionStatus::Present) << cut;
  }
}

TEST(Assertion, TriggerInsideWordIgnored) {
  EXPECT_EQ(assess("Knotted muscles and fatigue.", "fatigue").status, AssertionStatus::Present);
  EXPECT_EQ(assess("Nothing worse; cough noted.", "cough").status, AssertionStatus::Present);
}

TEST(Assertion, ForcedBoundaryContainsScope) {
  const auto& lex = support::demo_lexicon();
  const std::u32string text = U"Negative for fever\n\nheadache persistent";
  const auto sections = split_sections(text, SectionRules::defaults());
  const auto sentences = split_sentences(text, sections, Abbreviations::defaults());
  ASSERT_EQ(sentences.size(), 2u);
  const auto mentions = find_mentions(MatcherIndex::compile(lex), "n", text, sentences);
  ASSERT_EQ(mentions.size(), 2u);
  const AssertionEngine engine;
  for (const auto& m : mentions) {
    const auto& s = sentences[m.sentence_index];
    const auto r = engine.assess(std::u32string_view(text).substr(s.span.start, s.span.length()),
                                 Span{m.span.start - s.span.start, m.span.end - s.span.start});
    EXPECT_EQ(r.status, m.matched_text == "fever" ? AssertionStatus::Absent : AssertionStatus::Present);
  }
}

TEST(Assertion, Deterministic) {
  const AssertionEngine engine;
  for (const auto& c : golden_assertion_cases()) {
    EXPECT_EQ(assert_status(engine, c.sentence, golden_span(c)), assert_status(engine, c.sentence, golden_span(c)));
  }
}

TEST(Assertion, MatchesNaiveScanOnRandomSentences) {
  const AssertionEngine engine;
  std::vector<std::string> vocab = {"fatigue", "fever", "pain", "patient", "reports", "today", ",", ";", "and"};
  for (const auto& r : engine.rules()) {
    vocab.push_back(r.phrase);
    for (const auto& t : r.terminators) vocab.push_back(t);
  }
  std::mt19937_64 rng(11);
  std::size_t non_present = 0;
  for (int c = 0; c < 500; ++c) {
    std::string sentence;
    const auto n = 3 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) sentence += vocab[rng() % vocab.size()] + " ";
    const auto text = utf8::decode(sentence);
    const auto ctx = engine.analyze(text);
    for (int k = 0; k < 10; ++k) {
      const std::size_t a = rng() % text.size();
      const Span mention{a, std::min(text.size(), a + 1 + rng() % 8)};
      const auto expected = naive_assess(engine, ctx, mention);
      ASSERT_EQ(engine.assess(ctx, mention), expected) << sentence << " @" << a;
      non_present += expected.status != AssertionStatus::Present;
    }
  }
  EXPECT_GT(non_present, 500u);
}

TEST(Rules, FileMatchesDefaults) {
  EXPECT_EQ(load_rules(support::data_path("assertion_rules.tsv")), default_rules());
  EXPECT_EQ(parse_rules(serialize_rules(default_rules())), default_rules());
}

TEST(Rules, ParseErrorsNameLine) {
  try {
    parse_rules("TRIGGER\tno\tabsent\tforward\t6\tbut\nTRIGGER\tx\tmaybe\tforward\t6\t\n");
    FAIL();
  } catch (const RuleError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_rules("TRIGGER\t\tabsent\tforward\t6\t\n"), RuleError);
  EXPECT_THROW(parse_rules("TRIGGER\tno\tabsent\tsideways\t6\t\n"), RuleError);
  EXPECT_THROW(parse_rules("TRIGGER\tno\tabsent\tforward\t0\t\n"), RuleError);
}

TEST(Rules, CustomRuleOther) {
  const AssertionEngine engine(parse_rules("TRIGGER\tfamily history of\tother\tforward\tsentence\tbut\n"));
  const std::string s = "Family history of migraines.";
  EXPECT_EQ(assert_status(engine, s, {18, 27}).status, AssertionStatus::Other);
  const AssertionEngine back(parse_rules("TRIGGER\truled out\tabsent\tbackward\t4\t;\n"));
  EXPECT_EQ(assert_status(back, "Pneumonia ruled out.", {0, 9}).status, AssertionStatus::Absent);
  EXPECT_EQ(assert_status(back, "Pneumonia; ruled out.", {0, 9}).status, AssertionStatus::Present);
}

TEST(Remote, ParsesResponses) {
  const auto r = parse_classifier_response(R"({"label":"absent","score":0.9})");
  EXPECT_EQ(r.status, AssertionStatus::Absent);
  EXPECT_EQ(r.binary, BinaryAssertion::NonPositive);
  EXPECT_EQ(r.engine, Engine::RemoteClassifier);
  EXPECT_DOUBLE_EQ(*r.score, 0.9);
  EXPECT_THROW(parse_classifier_response("{"), RemoteError);
  EXPECT_THROW(parse_classifier_response(R"({"label":"maybe"})"), RemoteError);
  EXPECT_THROW(parse_classifier_response(R"({"label":"present","score":2})"), RemoteError);
}

TEST(Remote, RequestCarriesSentenceOffsets) {
  const auto body = make_classifier_request("Fièvre et fatigue", {10, 17});
  EXPECT_NE(body.find("\"start\":10"), std::string::npos);
  EXPECT_NE(body.find("\"end\":17"), std::string::npos);
  EXPECT_NE(body.find("Fièvre"), std::string::npos);
}

TEST(Remote, StubPresentAndAbsent) {
  StubClassifier present(reply(R"({"label":"present","score":0.99})"));
  const RemoteClassifier client(present.url());
  const auto r = client.classify("Patient reports fatigue.", {16, 23});
  EXPECT_EQ(r.status, AssertionStatus::Present);
  EXPECT_EQ(r.binary, BinaryAssertion::Positive);
  EXPECT_FALSE(r.trigger);

  StubClassifier absent(reply(R"({"label":"absent","score":0.9})"));
  EXPECT_EQ(RemoteClassifier(absent.url()).classify("x", {0, 1}).status, AssertionStatus::Absent);
}

TEST(Remote, UnreachableFallsBack) {
  const RemoteClassifier client("http://127.0.0.1:1", {std::chrono::milliseconds(300), 2});
  const AssertionEngine engine;
  const auto r = client.classify_or_fallback(engine, U"There is no diarrhea", {12, 20});
  EXPECT_EQ(r.engine, Engine::RuleEngine);
  EXPECT_EQ(r.status, AssertionStatus::Absent);
  EXPECT_EQ(client.fallback_count(), 1u);
}

TEST(Remote, MalformedFallsBack) {
  StubClassifier stub(reply("not json"));
  const RemoteClassifier client(stub.url());
  try {
    client.classify("x", {0, 1});
    FAIL();
  } catch (const RemoteError& e) {
    EXPECT_EQ(e.kind(), RemoteError::Kind::MalformedResponse);
  }
  const AssertionEngine engine;
  EXPECT_EQ(client.classify_or_fallback(engine, U"fatigue", {0, 7}).engine, Engine::RuleEngine);
  EXPECT_EQ(client.fallback_count(), 1u);
}

TEST(Remote, TimeoutFallsBack) {
  StubClassifier slow([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"label":"present","score":1})", "application/json");
  });
  const RemoteClassifier client(slow.url(), {std::chrono::milliseconds(150), 1});
  try {
    client.classify("x", {0, 1});
    FAIL();
  } catch (const RemoteError& e) {
    EXPECT_EQ(e.kind(), RemoteError::Kind::Timeout);
  }
}
