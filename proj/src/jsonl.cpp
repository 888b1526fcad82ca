#include <fstream>

#include <json.hpp>

#include "symscribe/docmodel.hpp"

namespace symscribe {

using ojson = nlohmann::ordered_json;

namespace {

template <typename T>
T field(const ojson& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("bad type for key '") + key + "'");
  }
}

Span span_field(const ojson& j) {
  Span s{field<std::size_t>(j, "start"), field<std::size_t>(j, "end")};
  if (s.end < s.start) throw FormatError("span end before start");
  return s;
}

}  // namespace

std::string to_jsonl_line(const PipelineOutput& out) {
  ojson j;
  j["note_id"] = out.note_id;
  j["site_id"] = out.site_id;
  j["pipeline_version"] = out.pipeline_version;
  j["lexicon_fingerprint"] = out.lexicon_fingerprint;

  auto sections = ojson::array();
  for (const auto& s : out.sections) {
    ojson sj;
    sj["title"] = s.title ? ojson(*s.title) : ojson(nullptr);
    sj["start"] = s.span.start;
    sj["end"] = s.span.end;
    sections.push_back(std::move(sj));
  }
  j["sections"] = std::move(sections);

  auto mentions = ojson::array();
  for (const auto& mr : out.mentions) {
    const auto& m = mr.mention;
    const auto& a = mr.assertion;
    ojson mj;
    mj["start"] = m.span.start;
    mj["end"] = m.span.end;
    mj["text"] = m.matched_text;
    mj["concept_id"] = m.concept_id;
    mj["category_id"] = m.category_id;
    mj["sentence_index"] = m.sentence_index;
    mj["section_index"] = m.section_index;
    mj["status"] = std::string(to_string(a.status));
    mj["binary"] = std::string(to_string(a.binary));
    mj["engine"] = std::string(to_string(a.engine));
    if (a.score) mj["score"] = *a.score;
    if (a.trigger) {
      ojson tj;
      tj["phrase"] = a.trigger->phrase;
      tj["start"] = a.trigger->span.start;
      tj["end"] = a.trigger->span.end;
      mj["trigger"] = std::move(tj);
    }
    mentions.push_back(std::move(mj));
  }
  j["mentions"] = std::move(mentions);

  if (out.timing) {
    const auto& t = *out.timing;
    j["timing"] = ojson{{"segment_sections", t.segment_sections}, {"segment_sentences", t.segment_sentences},
                        {"ner", t.ner},
                        {"assertion", t.assertion},
                        {"serialization", t.serialization},
                        {"total", t.total}};
  }
  return j.dump();
}

PipelineOutput from_jsonl_line(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("record is not a JSON object");

  PipelineOutput out;
  out.note_id = field<std::string>(j, "note_id");
  out.site_id = field<std::string>(j, "site_id");
  out.pipeline_version = field<std::string>(j, "pipeline_version");
  out.lexicon_fingerprint = field<std::string>(j, "lexicon_fingerprint");

  const auto sections = field<ojson>(j, "sections");
  if (!sections.is_array()) throw FormatError("'sections' is not an array");
  for (const auto& sj : sections) {
    Section s;
    if (!sj.is_object() || !sj.contains("title")) throw FormatError("section lacks 'title'");
    if (!sj["title"].is_null()) s.title = field<std::string>(sj, "title");
    s.span = span_field(sj);
    out.sections.push_back(std::move(s));
  }

  const auto mentions = field<ojson>(j, "mentions");
  if (!mentions.is_array()) throw FormatError("'mentions' is not an array");
  for (const auto& mj : mentions) {
    MentionResult mr;
    auto& m = mr.mention;
    m.note_id = out.note_id;
    m.span = span_field(mj);
    m.matched_text = field<std::string>(mj, "text");
    m.concept_id = field<std::string>(mj, "concept_id");
    m.category_id = field<std::string>(mj, "category_id");
    m.sentence_index = field<std::size_t>(mj, "sentence_index");
    m.section_index = field<std::size_t>(mj, "section_index");

    auto& a = mr.assertion;
    auto status = parse_status(field<std::string>(mj, "status"));
    auto binary = parse_binary(field<std::string>(mj, "binary"));
    auto engine = parse_engine(field<std::string>(mj, "engine"));
    if (!status || !binary || !engine) throw FormatError("bad status/binary/engine value");
    if (*binary != collapse(*status)) throw FormatError("binary label disagrees with status");
    a.status = *status;
    a.binary = *binary;
    a.engine = *engine;
    if (mj.contains("score")) a.score = field<double>(mj, "score");
    if (mj.contains("trigger")) {
      const auto& tj = mj["trigger"];
      a.trigger = Trigger{field<std::string>(tj, "phrase"), span_field(tj)};
    }
    out.mentions.push_back(std::move(mr));
  }

  if (j.contains("timing")) {
    const auto& tj = j["timing"];
    TimingRecord t;
    t.segment_sections = field<double>(tj, "segment_sections");
    t.segment_sentences = field<double>(tj, "segment_sentences");
    t.ner = field<double>(tj, "ner");
    t.assertion = field<double>(tj, "assertion");
    t.serialization = field<double>(tj, "serialization");
    t.total = field<double>(tj, "total");
    out.timing = t;
  }
  return out;
}

std::vector<PipelineOutput> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<PipelineOutput> outputs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      outputs.push_back(from_jsonl_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return outputs;
}

}  // namespace symscribe
