#include <charconv>
#include <chrono>
#include <ctime>
#include <regex>

#include <fmt/format.h>

#include "symscribe/docmodel.hpp"

namespace symscribe {

std::vector<std::string> NoteNlpRow::fields() const {
  return {std::to_string(note_nlp_id),
          note_id,
          "",
          "",
          offset,
          lexical_variant,
          note_nlp_concept_id,
          note_nlp_source_concept_id,
          nlp_system,
          nlp_date,
          "",
          term_exists,
          term_temporal,
          ""};
}

std::vector<NoteNlpRow> to_omop_note_nlp(const std::vector<PipelineOutput>& outputs, std::string_view nlp_date,
                                         std::size_t first_id) {
  std::vector<NoteNlpRow> rows;
  std::size_t id = first_id;
  for (const auto& o : outputs) {
    for (const auto& mr : o.mentions) {
      NoteNlpRow row;
      row.note_nlp_id = id++;
      row.note_id = o.note_id;
      row.offset = std::to_string(mr.mention.span.start) + "-" + std::to_string(mr.mention.span.end);
      row.lexical_variant = mr.mention.matched_text;
      row.note_nlp_concept_id = mr.mention.concept_id;
      row.note_nlp_source_concept_id = mr.mention.category_id;
      row.nlp_system = o.pipeline_version;
      row.nlp_date = std::string(nlp_date);
      row.term_exists = mr.assertion.binary == BinaryAssertion::Positive ? "Y" : "N";
      row.term_temporal = std::string(to_string(mr.assertion.status));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string note_nlp_header() { return csv::join(note_nlp_columns()) + "\n"; }

std::string note_nlp_csv(const std::vector<NoteNlpRow>& rows) {
  std::string out = note_nlp_header();
  for (const auto& r : rows) out += csv::join(r.fields()) + "\n";
  return out;
}

std::vector<NoteNlpRow> parse_note_nlp_csv(std::string_view content) {
  auto records = csv::parse(content);
  if (records.empty() || records.front() != note_nlp_columns()) throw FormatError("note_nlp header mismatch");
  std::vector<NoteNlpRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.size() == 1 && r[0].empty()) continue;
    if (r.size() != note_nlp_columns().size()) {
      throw FormatError("note_nlp row " + std::to_string(i) + " has " + std::to_string(r.size()) + " fields");
    }
    NoteNlpRow row;
    auto [ptr, ec] = std::from_chars(r[0].data(), r[0].data() + r[0].size(), row.note_nlp_id);
    if (ec != std::errc() || ptr != r[0].data() + r[0].size()) {
      throw FormatError("note_nlp row " + std::to_string(i) + " has a non-numeric note_nlp_id");
    }
    row.note_id = r[1];
    row.offset = r[4];
    row.lexical_variant = r[5];
    row.note_nlp_concept_id = r[6];
    row.note_nlp_source_concept_id = r[7];
    row.nlp_system = r[8];
    row.nlp_date = r[9];
    row.term_exists = r[11];
    row.term_temporal = r[12];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> validate_note_nlp(const std::vector<NoteNlpRow>& rows) {
  static const std::regex kOffset(R"((\d+)-(\d+))");
  static const std::regex kDate(R"(\d{4}-\d{2}-\d{2})");
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto where = "row " + std::to_string(i + 1) + ": ";
    if (i == 0 ? r.note_nlp_id < 1 : r.note_nlp_id != rows[i - 1].note_nlp_id + 1) {
      problems.push_back(where + "note_nlp_id is not sequential");
    }
    if (r.note_id.empty()) problems.push_back(where + "empty note_id");
    if (r.lexical_variant.empty()) problems.push_back(where + "empty lexical_variant");
    if (r.note_nlp_concept_id.empty()) problems.push_back(where + "empty note_nlp_concept_id");
    if (r.note_nlp_source_concept_id.empty()) problems.push_back(where + "empty note_nlp_source_concept_id");
    if (r.nlp_system.empty()) problems.push_back(where + "empty nlp_system");
    std::smatch m;
    if (!std::regex_match(r.offset, m, kOffset) || std::stoull(m[1]) >= std::stoull(m[2])) {
      problems.push_back(where + "offset must be 'start-end' with start < end");
    } else if (std::stoull(m[2]) - std::stoull(m[1]) != utf8::length(r.lexical_variant)) {
      problems.push_back(where + "offset length disagrees with lexical_variant");
    }
    if (!std::regex_match(r.nlp_date, kDate)) problems.push_back(where + "nlp_date is not YYYY-MM-DD");
    const auto status = parse_status(r.term_temporal);
    if (!status) {
      problems.push_back(where + "term_temporal is not an assertion status");
    } else if (r.term_exists != (*status == AssertionStatus::Present ? "Y" : "N")) {
      problems.push_back(where + "term_exists disagrees with term_temporal");
    }
  }
  return problems;
}

std::string timing_header() {
  return "note_id,segment_sections,segment_sentences,ner,assertion,serialization,total\n";
}

std::string timing_row(std::string_view note_id, const TimingRecord& t) {
  return fmt::format("{},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", csv::escape(note_id), t.segment_sections,
                     t.segment_sentences, t.ner, t.assertion, t.serialization, t.total);
}

namespace {

std::tm local_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  return tm;
}

}  // namespace

std::string today_iso() {
  const auto tm = local_now();
  return fmt::format("{:04}-{:02}-{:02}", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday);
}

std::string today_compact() {
  const auto tm = local_now();
  return fmt::format("{:04}{:02}{:02}", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday);
}

}  // namespace symscribe
