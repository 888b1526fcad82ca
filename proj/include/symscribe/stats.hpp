#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "symscribe/docmodel.hpp"
#include "symscribe/lexicon.hpp"

namespace symscribe {

class StatsError : public std::runtime_error {
 public:
  enum class Kind { UnknownSite, UnknownCategory, LengthMismatch, DegenerateInput, TooFewObservations };
  StatsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(StatsError::Kind k);

enum class Polarity { Positive, Negative };

// Site x category mention counts split by binary assertion.
struct PrevalenceTable {
  std::vector<std::string> sites;
  std::vector<std::string> categories;
  std::vector<std::vector<std::uint64_t>> positive_counts;  // [site][category]
  std::vector<std::vector<std::uint64_t>> negative_counts;

  const std::vector<std::vector<std::uint64_t>>& counts(Polarity p) const {
    return p == Polarity::Positive ? positive_counts : negative_counts;
  }
  friend bool operator==(const PrevalenceTable&, const PrevalenceTable&) = default;
};

// Sites are the sorted distinct values of site_of. Categories are taken from
// `categories` when given, otherwise the sorted distinct ids seen.
PrevalenceTable build_table(const std::vector<PipelineOutput>& outputs, const std::map<std::string, std::string>& site_of,
                            const std::vector<std::string>& categories = {});
std::vector<std::string> category_axis(const Lexicon& lex);

// note_id,site_id CSV with a header row.
std::map<std::string, std::string> read_site_map(const std::string& path);

enum class PValueMethod { Auto, TApproximation, MonteCarlo };

struct SpearmanOptions {
  PValueMethod method = PValueMethod::Auto;
  std::size_t t_min_n = 10;  // Auto uses the t-approximation from this n upward
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
};

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  PValueMethod method = PValueMethod::TApproximation;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const CorrelationResult&, const CorrelationResult&) = default;
};

std::string_view to_string(PValueMethod m);

// Mean ranks for ties, 1-based.
std::vector<double> average_ranks(const std::vector<double>& x);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y, const SpearmanOptions& opts = {});

struct CorrelationCell {
  std::optional<CorrelationResult> result;
  std::optional<StatsError::Kind> error;
};

struct CorrelationMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<CorrelationCell>> cells;  // [row][col]
  std::vector<std::uint64_t> row_totals;            // category matrices only
};

// Sites x (sites + "overall"), each vector running over categories.
CorrelationMatrix pairwise_site_correlations(const PrevalenceTable& table, Polarity polarity,
                                             const SpearmanOptions& opts = {});
// Categories x categories, each vector running over sites.
CorrelationMatrix pairwise_category_correlations(const PrevalenceTable& table, Polarity polarity,
                                                 const SpearmanOptions& opts = {});

std::string counts_csv(const PrevalenceTable& table);
std::string correlation_csv(const CorrelationMatrix& m);
std::string prevalence_summary_json(const PrevalenceTable& table, const CorrelationMatrix& site_pos,
                                    const CorrelationMatrix& site_neg, const CorrelationMatrix& category_pos,
                                    const SpearmanOptions& opts);

}  // namespace symscribe
