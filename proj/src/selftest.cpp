#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "symscribe/ner.hpp"
#include "symscribe/selftest.hpp"
#include "symscribe/stats.hpp"

namespace symscribe {

namespace {

using S = AssertionStatus;

}  // namespace

const std::vector<GoldenCase>& golden_assertion_cases() {
  static const std::vector<GoldenCase> cases = {
      // anchored
      {"There is no diarrhea.", "diarrhea", S::Absent, "anchor"},
      {"Negative for fever, chills, and fatigue.", "fever", S::Absent, "anchor"},
      {"Negative for fever, chills, and fatigue.", "chills", S::Absent, "anchor"},
      {"Negative for fever, chills, and fatigue.", "fatigue", S::Absent, "anchor"},
      {"History of migraines.", "migraines", S::Past, "anchor"},
      {"Takes ibuprofen as needed for headache.", "headache", S::Hypothetical, "anchor"},
      // plain assertions
      {"Patient reports fatigue.", "fatigue", S::Present, "basic"},
      {"She complains of headache and nausea.", "nausea", S::Present, "basic"},
      {"Chest pain started yesterday.", "Chest pain", S::Present, "basic"},
      {"Reports shortness of breath on exertion.", "shortness of breath", S::Present, "basic"},
      {"Patient presents with cough and fever.", "fever", S::Present, "basic"},
      {"Symptoms include cough, fever, and loss of taste.", "loss of taste", S::Present, "basic"},
      {"Pain is well controlled.", "Pain", S::Present, "basic"},
      {"Patient reports joint pain and muscle aches.", "muscle aches", S::Present, "basic"},
      {"Patient denies chest pain.", "chest pain", S::Absent, "basic"},
      {"He denied cough or fever.", "fever", S::Absent, "basic"},
      {"Without nausea or vomiting.", "vomiting", S::Absent, "basic"},
      {"Not experiencing dizziness.", "dizziness", S::Absent, "basic"},
      {"Negative for cough, congestion, and sore throat.", "sore throat", S::Absent, "basic"},
      {"She is not short of breath.", "short of breath", S::Absent, "basic"},
      {"Denied any fevers at home.", "fevers", S::Absent, "basic"},
      {"Pt denies SOB.", "SOB", S::Absent, "basic"},
      {"No known history of diabetes.", "diabetes", S::Absent, "basic"},
      {"Patient has h/o seizures.", "seizures", S::Past, "basic"},
      {"The patient has a history of depression and anxiety.", "anxiety", S::Past, "basic"},
      {"Headache resolved.", "Headache", S::Past, "basic"},
      {"Should chest pain recur, call the clinic.", "chest pain", S::Hypothetical, "basic"},
      {"Return in case of shortness of breath.", "shortness of breath", S::Hypothetical, "basic"},
      {"Tylenol prn headache.", "headache", S::Hypothetical, "basic"},
      {"Tramadol for back pain as needed.", "back pain", S::Hypothetical, "basic"},
      {"If fever develops, return to clinic.", "fever", S::Hypothetical, "basic"},
      // scope limits
      {"No fever, chills, or night sweats.", "night sweats", S::Absent, "scope"},
      {"No acute distress and the patient later developed a persistent cough.", "cough", S::Present, "scope"},
      {"No rash, itching, swelling or redness noted and fatigue.", "fatigue", S::Present, "scope"},
      {"Headache has since resolved.", "Headache", S::Past, "scope"},
      {"Fever resolved and headache began.", "headache", S::Present, "scope"},
      {"Nausea resolved but vomiting persists.", "Nausea", S::Past, "scope"},
      // terminators
      {"Denies fever but reports chills.", "chills", S::Present, "terminator"},
      {"Denies fever but reports chills.", "fever", S::Absent, "terminator"},
      {"No cough; positive for headache.", "headache", S::Present, "terminator"},
      {"Negative for nausea, however endorses fatigue.", "fatigue", S::Present, "terminator"},
      {"No complaints except fatigue.", "fatigue", S::Present, "terminator"},
      {"History of asthma but now with wheezing.", "wheezing", S::Present, "terminator"},
      {"If fever develops, return to clinic; cough is present.", "cough", S::Present, "terminator"},
      {"Denies headache; however, reports fatigue.", "fatigue", S::Present, "terminator"},
      {"Without fever but with chills.", "chills", S::Present, "terminator"},
      {"History of pneumonia but currently reports cough.", "cough", S::Present, "terminator"},
      {"Nausea resolved but vomiting persists.", "vomiting", S::Present, "terminator"},
      {"No chest pain, palpitations, or leg swelling, but endorses dizziness.", "dizziness", S::Present, "terminator"},
      {"No pain, but notes fatigue.", "fatigue", S::Present, "terminator"},
      {"No pain, but notes fatigue.", "pain", S::Absent, "terminator"},
  };
  return cases;
}

Span golden_span(const GoldenCase& c) {
  const auto byte = c.sentence.find(c.mention);
  if (byte == std::string::npos) throw std::logic_error("golden mention not in sentence: " + c.mention);
  const auto start = utf8::length(c.sentence.substr(0, byte));
  return {start, start + utf8::length(c.mention)};
}

NerCase random_ner_case(std::uint64_t seed) {
  static const std::vector<std::string> pool = {
      "pain",         "chest pain",    "chest",        "back pain",   "back",
      "fever",        "fevers",        "headache",     "head",        "ache",
      "cough",        "dry cough",     "night sweats", "sweats",      "loss of taste",
      "taste",        "shortness of breath",           "breath",      "sore throat",
      "throat",       "fatigue",       "muscle aches", "aches",       "née",
      "Élan",         "ΔT",            "brain fog",    "fog",         "joint pain",
  };
  static const std::vector<std::string> fillers = {"the", "and", "with", "no", "mild", "severe", "x", "é", "42"};
  static const std::vector<std::string> seps = {" ", " ", " ", "  ", ", ", ". ", "\n", "\n\n", "-", "/", "\t", "", "; "};

  std::mt19937_64 rng(seed);
  const auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  std::vector<std::string> chosen = pool;
  std::shuffle(chosen.begin(), chosen.end(), rng);
  chosen.resize(3 + pick(chosen.size() - 3));

  std::vector<Category> cats;
  const auto n_cats = 1 + pick(3);
  for (std::size_t i = 0; i < n_cats; ++i) cats.push_back({fmt::format("cat{}", i), fmt::format("Category {}", i), 0});
  std::vector<Concept> concepts;
  for (std::size_t i = 0; i < chosen.size();) {
    Concept c;
    c.concept_id = fmt::format("C{:04}", concepts.size());
    c.category_id = cats[pick(cats.size())].id;
    const auto syns = 1 + pick(3);
    for (std::size_t k = 0; k < syns && i < chosen.size(); ++k, ++i) {
      auto raw = chosen[i];
      if (pick(3) == 0) std::transform(raw.begin(), raw.end(), raw.begin(), [](unsigned char ch) { return std::toupper(ch); });
      c.synonyms.push_back({raw, "", 0});
    }
    c.preferred_term = c.synonyms.front().raw;
    concepts.push_back(std::move(c));
  }

  NerCase out;
  out.lexicon = Lexicon::assemble(std::move(cats), std::move(concepts));
  out.note_id = fmt::format("n{}", seed);

  std::string text;
  const auto tokens = pick(40);
  for (std::size_t t = 0; t < tokens; ++t) {
    std::string tok = pick(3) == 0 ? fillers[pick(fillers.size())] : pool[pick(pool.size())];
    if (pick(4) == 0) {
      for (auto& ch : tok) {
        if (pick(2) == 0) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      }
    }
    if (pick(6) == 0) {
      for (auto& ch : tok) {
        if (ch == ' ') ch = pick(2) ? '\n' : '\t';
      }
    }
    text += tok;
    text += seps[pick(seps.size())];
  }
  out.text = utf8::decode(text);
  const auto sections = split_sections(out.text, SectionRules::defaults());
  out.sentences = split_sentences(out.text, sections, Abbreviations::defaults());
  return out;
}

double oracle_spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rank = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        if (w < v[i]) less += 1.0;
        else if (w == v[i]) equal += 1.0;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  return num / (std::sqrt(vx) * std::sqrt(vy));
}

std::vector<double> random_vector(std::uint64_t seed, std::size_t n, bool tied) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  if (tied) {
    std::uniform_int_distribution<int> d(0, 4);
    for (auto& x : v) x = d(rng);
  } else {
    std::uniform_real_distribution<double> d(-100.0, 100.0);
    for (auto& x : v) x = d(rng);
  }
  return v;
}

std::vector<SuiteResult> run_selftest(std::size_t ner_cases, std::size_t spearman_cases, std::uint64_t seed) {
  std::vector<SuiteResult> out;

  SuiteResult ner{"ner oracle", 0, 0, {}};
  for (std::size_t i = 0; i < ner_cases; ++i) {
    const auto c = random_ner_case(seed * 1000003 + i);
    const auto index = MatcherIndex::compile(c.lexicon);
    const bool same = find_mentions(index, c.note_id, c.text, c.sentences) ==
                      brute_force_mentions(c.lexicon, c.note_id, c.text, c.sentences);
    if (same) {
      ++ner.passed;
    } else {
      ++ner.failed;
      if (ner.failures.size() < 5) ner.failures.push_back(fmt::format("case seed {}", seed * 1000003 + i));
    }
  }
  out.push_back(std::move(ner));

  SuiteResult sp{"spearman oracle", 0, 0, {}};
  SpearmanOptions opts;
  opts.method = PValueMethod::TApproximation;
  for (std::size_t i = 0; i < spearman_cases; ++i) {
    const auto n = 3 + (i % 28);
    const auto x = random_vector(seed * 7919 + 2 * i, n, i % 2 == 0);
    const auto y = random_vector(seed * 7919 + 2 * i + 1, n, i % 3 == 0);
    bool ok = false;
    std::string why;
    try {
      const auto got = spearman(x, y, opts).rho;
      const auto want = oracle_spearman_rho(x, y);
      ok = std::abs(got - want) <= 1e-12;
      why = fmt::format("rho {} vs oracle {}", got, want);
    } catch (const StatsError& e) {
      const auto want = oracle_spearman_rho(x, y);
      ok = e.kind() == StatsError::Kind::DegenerateInput && std::isnan(want);
      why = e.what();
    }
    if (ok) {
      ++sp.passed;
    } else {
      ++sp.failed;
      if (sp.failures.size() < 5) sp.failures.push_back(fmt::format("case {}: {}", i, why));
    }
  }
  out.push_back(std::move(sp));

  SuiteResult golden{"assertion golden", 0, 0, {}};
  const AssertionEngine engine;
  for (const auto& c : golden_assertion_cases()) {
    const auto res = assert_status(engine, c.sentence, golden_span(c));
    if (res.status == c.expected && res.binary == collapse(c.expected)) {
      ++golden.passed;
    } else {
      ++golden.failed;
      if (golden.failures.size() < 10) {
        golden.failures.push_back(fmt::format("\"{}\" [{}]: expected {}, got {}", c.sentence, c.mention,
                                              to_string(c.expected), to_string(res.status)));
      }
    }
  }
  out.push_back(std::move(golden));
  return out;
}

}  // namespace symscribe
