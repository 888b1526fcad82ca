#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symscribe/assertion.hpp"
#include "symscribe/csv.hpp"
#include "symscribe/ner.hpp"
#include "symscribe/segment.hpp"

namespace symscribe {

// Wall-clock seconds per pipeline stage for one note.
struct TimingRecord {
  double segment_sections = 0.0;
  double segment_sentences = 0.0;
  double ner = 0.0;
  double assertion = 0.0;
  double serialization = 0.0;
  double total = 0.0;

  double stage_sum() const { return segment_sections + segment_sentences + ner + assertion + serialization; }

  friend bool operator==(const TimingRecord&, const TimingRecord&) = default;
};

struct MentionResult {
  Mention mention;
  AssertionResult assertion;  // trigger span in original note offsets

  friend bool operator==(const MentionResult&, const MentionResult&) = default;
};

struct PipelineOutput {
  std::string note_id;
  std::string site_id;
  std::vector<Section> sections;
  std::vector<MentionResult> mentions;  // sorted by span.start
  std::optional<TimingRecord> timing;   // left out of mentions.jsonl so runs stay byte-stable
  std::string pipeline_version;
  std::string lexicon_fingerprint;

  friend bool operator==(const PipelineOutput&, const PipelineOutput&) = default;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- internal JSONL (one PipelineOutput per line, canonical key order) ----

std::string to_jsonl_line(const PipelineOutput& out);
PipelineOutput from_jsonl_line(std::string_view line);  // throws FormatError
std::vector<PipelineOutput> read_jsonl(const std::string& path);

// ---- note ingestion ----

enum class NoteFormat { Csv, Jsonl };

// .jsonl / .ndjson -> Jsonl, anything else -> Csv.
NoteFormat detect_format(std::string_view path);

class IngestError : public std::runtime_error {
 public:
  enum class Kind { UnreadableFile, MissingColumn };
  IngestError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Streams Documents in file order. Rows lacking note_id, site_id or text are
// skipped, logged and counted. Extra CSV columns / JSON string keys become
// metadata. Text is re-encoded as valid UTF-8.
class NoteReader {
 public:
  NoteReader(const std::string& path, NoteFormat format);
  explicit NoteReader(const std::string& path) : NoteReader(path, detect_format(path)) {}
  NoteReader(const NoteReader&) = delete;
  NoteReader& operator=(const NoteReader&) = delete;

  std::optional<Document> next();

  std::size_t rows() const { return rows_; }
  std::size_t skipped() const { return skipped_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::optional<Document> next_csv();
  std::optional<Document> next_jsonl();
  void skip(std::size_t line, const std::string& why);

  std::string path_;
  NoteFormat format_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t col_note_ = 0, col_site_ = 0, col_text_ = 0;
  std::size_t line_ = 0;
  std::size_t rows_ = 0;
  std::size_t skipped_ = 0;
  std::vector<std::string> diagnostics_;
  std::unique_ptr<csv::Reader> csv_;
};

std::vector<Document> ingest_notes(const std::string& path, NoteFormat format);

// ---- BioC ----

class UnknownNoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BiocOptions {
  std::string source = "symscribe";
  std::string date;  // YYYYMMDD; empty -> today
  std::string key = "symscribe.key";
};

// Streams a BioC collection: one document per note, one passage per section,
// one annotation per mention. Offsets are Unicode scalar offsets into the
// original note text.
class BiocWriter {
 public:
  BiocWriter(std::ostream& out, const BiocOptions& options);
  void write(const PipelineOutput& output, const Document& doc);
  void write_fragment(std::string_view document_xml);  // from bioc_document_xml
  void finish();

 private:
  std::ostream& out_;
  bool finished_ = false;
};

// One <document> element.
std::string bioc_document_xml(const PipelineOutput& output, const Document& doc);

std::string to_bioc(const std::vector<PipelineOutput>& outputs, const std::vector<Document>& docs,
                    const BiocOptions& options = {});
std::string to_bioc_json(const std::vector<PipelineOutput>& outputs, const std::vector<Document>& docs,
                         const BiocOptions& options = {});

struct BiocLocation {
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct BiocAnnotation {
  std::string id;
  std::map<std::string, std::string> infons;
  std::vector<BiocLocation> locations;
  std::string text;
};

struct BiocPassage {
  std::map<std::string, std::string> infons;
  std::size_t offset = 0;
  std::string text;
  std::vector<BiocAnnotation> annotations;
};

struct BiocDocument {
  std::string id;
  std::map<std::string, std::string> infons;
  std::vector<BiocPassage> passages;
};

struct BiocCollection {
  std::string source;
  std::string date;
  std::string key;
  std::vector<BiocDocument> documents;
};

BiocCollection parse_bioc(std::string_view xml);  // throws FormatError

// ---- OMOP note_nlp ----

// Full OMOP CDM v5.4 note_nlp column set; columns the pipeline has no datum
// for stay empty.
inline const std::vector<std::string>& note_nlp_columns() {
  static const std::vector<std::string> cols = {
      "note_nlp_id",  "note_id",        "section_concept_id", "snippet",      "offset",
      "lexical_variant", "note_nlp_concept_id", "note_nlp_source_concept_id", "nlp_system",
      "nlp_date",     "nlp_datetime",   "term_exists",        "term_temporal", "term_modifiers",
  };
  return cols;
}

struct NoteNlpRow {
  std::size_t note_nlp_id = 0;
  std::string note_id;
  std::string offset;
  std::string lexical_variant;
  std::string note_nlp_concept_id;
  std::string note_nlp_source_concept_id;
  std::string nlp_system;
  std::string nlp_date;
  std::string term_exists;
  std::string term_temporal;

  std::vector<std::string> fields() const;
  friend bool operator==(const NoteNlpRow&, const NoteNlpRow&) = default;
};

std::vector<NoteNlpRow> to_omop_note_nlp(const std::vector<PipelineOutput>& outputs, std::string_view nlp_date,
                                         std::size_t first_id = 1);
std::string note_nlp_header();
std::string note_nlp_csv(const std::vector<NoteNlpRow>& rows);
std::vector<NoteNlpRow> parse_note_nlp_csv(std::string_view content);  // throws FormatError

// Empty when every row honours the column contract.
std::vector<std::string> validate_note_nlp(const std::vector<NoteNlpRow>& rows);

// ---- timing.csv ----

std::string timing_header();
std::string timing_row(std::string_view note_id, const TimingRecord& t);

std::string today_iso();       // YYYY-MM-DD
std::string today_compact();   // YYYYMMDD

}  // namespace symscribe
