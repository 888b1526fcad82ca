#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "symscribe/assertion.hpp"
#include "symscribe/docmodel.hpp"

namespace symscribe {

struct MentionKey {
  std::string note_id;
  Span span;

  friend bool operator==(const MentionKey&, const MentionKey&) = default;
  friend auto operator<=>(const MentionKey&, const MentionKey&) = default;
};

struct LabeledPair {
  MentionKey key;
  BinaryAssertion predicted = BinaryAssertion::Positive;
  BinaryAssertion gold = BinaryAssertion::Positive;
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { EmptyInput, LengthMismatch, EmptyReference, SubsetViolation, DuplicateKey };
  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Positive-class precision/recall/F1 plus support-weighted F1 and balanced
// accuracy. Vanishing denominators yield 0.
struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double weighted_f1 = 0.0;
  double balanced_accuracy = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

MetricReport score(const std::vector<LabeledPair>& pairs);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// Per-label scores over whatever alphabet the two vectors carry.
std::map<std::string, ClassScores> per_class_scores(const std::vector<std::string>& predicted,
                                                    const std::vector<std::string>& gold);
double weighted_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"precision", "recall", "f1", "weighted_f1", "balanced_accuracy"};
  return names;
}
double metric_value(const MetricReport& r, const std::string& name);

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // population SD over iterations
  double ci_low = 0.0;
  double ci_high = 0.0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct BootstrapReport {
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::map<std::string, MetricSummary> metrics;
  std::map<std::string, std::vector<double>> samples;  // one value per iteration

  friend bool operator==(const BootstrapReport&, const BootstrapReport&) = default;
};

// Resamples notes with replacement; iteration i draws from mt19937_64(seed + i).
BootstrapReport bootstrap(const std::vector<LabeledPair>& pairs, std::size_t iterations = 100, std::uint64_t seed = 0);

// Linear interpolation between order statistics, q in [0, 100].
double percentile(std::vector<double> values, double q);

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);
double cohens_kappa(const std::vector<BinaryAssertion>& a, const std::vector<BinaryAssertion>& b);

double pooled_recall(const std::set<MentionKey>& system_correct, const std::set<MentionKey>& reference_union);

// ---- gold files and prediction join ----

struct GoldLabel {
  MentionKey key;
  BinaryAssertion label = BinaryAssertion::Positive;
};

std::string gold_jsonl_line(const GoldLabel& g);
GoldLabel parse_gold_line(std::string_view line);  // throws FormatError
std::vector<GoldLabel> read_gold(const std::string& path);

struct JoinResult {
  std::vector<LabeledPair> pairs;  // ordered by key
  std::size_t unmatched_predictions = 0;
  std::size_t unmatched_gold = 0;
};

// Pairs predicted mentions with gold labels by (note_id, start, end).
JoinResult join_predictions(const std::vector<PipelineOutput>& predictions, const std::vector<GoldLabel>& gold);

std::string eval_report_json(const MetricReport& point, const BootstrapReport* boot, const JoinResult& join);

}  // namespace symscribe
