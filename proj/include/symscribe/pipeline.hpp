#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "symscribe/assertion.hpp"
#include "symscribe/docmodel.hpp"
#include "symscribe/lexicon.hpp"
#include "symscribe/ner.hpp"
#include "symscribe/remote.hpp"
#include "symscribe/segment.hpp"

namespace symscribe {

inline constexpr const char* kPipelineVersion = "symscribe-0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::string lexicon_path;
  std::string section_rules_path;   // empty: built-in titles
  std::string abbreviations_path;   // empty: built-in list
  std::string assertion_rules_path; // empty: built-in rules
  std::optional<std::string> remote_classifier_url;
  std::size_t remote_timeout_ms = 2000;
  std::size_t remote_max_in_flight = 8;
  std::size_t workers = 1;
  std::size_t batch_size = 64;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::string nlp_date;  // YYYY-MM-DD; empty: today

  // Throws ConfigError naming the first unusable field.
  void validate() const;
};

// `key = value` lines; '#' starts a comment; values may be double-quoted;
// [table] headers are ignored. Relative paths resolve against base_dir.
PipelineConfig parse_config(std::string_view content, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);

// Immutable state shared by all workers.
class PipelineContext {
 public:
  static std::shared_ptr<const PipelineContext> load(const PipelineConfig& config);
  PipelineContext(Lexicon lexicon, SectionRules sections, Abbreviations abbreviations, AssertionEngine engine,
                  std::unique_ptr<RemoteClassifier> remote = nullptr);

  const Lexicon& lexicon() const { return lexicon_; }
  const MatcherIndex& index() const { return index_; }
  const SectionRules& section_rules() const { return sections_; }
  const Abbreviations& abbreviations() const { return abbreviations_; }
  const AssertionEngine& engine() const { return engine_; }
  const RemoteClassifier* remote() const { return remote_.get(); }

 private:
  Lexicon lexicon_;
  MatcherIndex index_;
  SectionRules sections_;
  Abbreviations abbreviations_;
  AssertionEngine engine_;
  std::unique_ptr<RemoteClassifier> remote_;
};

// Segments, matches and asserts one note. Timing covers every stage except
// serialization, which the caller adds.
PipelineOutput process_note(const PipelineContext& ctx, const Document& doc);

// Processes documents on `workers` threads; results keep input order.
std::vector<PipelineOutput> process_documents(const PipelineContext& ctx, const std::vector<Document>& docs,
                                              std::size_t workers);

struct StageStats {
  double mean = 0.0;
  double sd = 0.0;
};

struct RunSummary {
  std::size_t input_rows = 0;
  std::size_t notes_processed = 0;
  std::size_t notes_skipped = 0;
  std::size_t mentions = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::map<std::string, StageStats> timing;  // seconds per note, by stage
  double wall_clock_seconds = 0.0;
  std::size_t workers = 1;
  std::size_t remote_fallbacks = 0;
  std::string pipeline_version;
  std::string lexicon_fingerprint;
  std::vector<std::string> diagnostics;

  std::string to_json() const;
};

// Population mean and SD of each stage over the records.
std::map<std::string, StageStats> summarize_timing(const std::vector<TimingRecord>& records);

struct RunOptions {
  bool dry_run = false;  // process but write nothing
};

// Reads `input_path` (CSV or JSONL) and writes mentions.jsonl,
// mentions.bioc.xml, note_nlp.csv, timing.csv and run_summary.json into
// config.output_dir.
RunSummary run_pipeline(const PipelineConfig& config, const std::string& input_path, const RunOptions& options = {});
RunSummary run_pipeline(const PipelineConfig& config, std::shared_ptr<const PipelineContext> ctx,
                        const std::string& input_path, const RunOptions& options = {});

}  // namespace symscribe
