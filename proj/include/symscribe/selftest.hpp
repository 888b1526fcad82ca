#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "symscribe/assertion.hpp"
#include "symscribe/lexicon.hpp"
#include "symscribe/segment.hpp"

namespace symscribe {

// Curated assertion sentences. `mention` is located by its first
// case-sensitive occurrence in `sentence`.
struct GoldenCase {
  std::string sentence;
  std::string mention;
  AssertionStatus expected = AssertionStatus::Present;
  std::string tag;  // anchor, terminator, scope or basic
};

const std::vector<GoldenCase>& golden_assertion_cases();

// Mention span (scalar offsets) of a golden case.
Span golden_span(const GoldenCase& c);

// A random lexicon and text drawn from an overlapping vocabulary, for
// comparing the automaton against the brute-force matcher.
struct NerCase {
  Lexicon lexicon;
  std::string note_id;
  std::u32string text;
  std::vector<Sentence> sentences;
};

NerCase random_ner_case(std::uint64_t seed);

// Spearman rho by counting ranks and a direct two-pass Pearson; shares no
// code with the stats module.
double oracle_spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// Random vector of length n; ties are frequent when `tied` is set.
std::vector<double> random_vector(std::uint64_t seed, std::size_t n, bool tied);

struct SuiteResult {
  std::string name;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::vector<std::string> failures;  // first few only
};

std::vector<SuiteResult> run_selftest(std::size_t ner_cases = 200, std::size_t spearman_cases = 200,
                                      std::uint64_t seed = 1);

}  // namespace symscribe
