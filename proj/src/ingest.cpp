#include <spdlog/spdlog.h>

#include <json.hpp>

#include "symscribe/docmodel.hpp"

namespace symscribe {

NoteFormat detect_format(std::string_view path) {
  const auto lower = to_lower_ascii(path);
  const auto ends_with = [&](std::string_view suffix) {
    return lower.size() >= suffix.size() && lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return (ends_with(".jsonl") || ends_with(".ndjson")) ? NoteFormat::Jsonl : NoteFormat::Csv;
}

NoteReader::NoteReader(const std::string& path, NoteFormat format) : path_(path), format_(format) {
  in_.open(path, std::ios::binary);
  if (!in_) throw IngestError(IngestError::Kind::UnreadableFile, "cannot read notes file " + path);
  if (format_ != NoteFormat::Csv) return;

  csv_ = std::make_unique<csv::Reader>(in_);
  auto header = csv_->next();
  if (!header) {
    throw IngestError(IngestError::Kind::MissingColumn, path + ": empty CSV, expected header note_id,site_id,text");
  }
  header_ = std::move(*header);
  if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) header_[0].erase(0, 3);
  for (auto& h : header_) h = std::string(trim(h));
  const auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) return i;
    }
    throw IngestError(IngestError::Kind::MissingColumn, path + ": missing column '" + std::string(name) + "'");
  };
  col_note_ = column("note_id");
  col_site_ = column("site_id");
  col_text_ = column("text");
}

void NoteReader::skip(std::size_t line, const std::string& why) {
  ++skipped_;
  auto msg = path_ + ":" + std::to_string(line) + ": skipped row: " + why;
  spdlog::warn("{}", msg);
  diagnostics_.push_back(std::move(msg));
}

std::optional<Document> NoteReader::next() {
  return format_ == NoteFormat::Csv ? next_csv() : next_jsonl();
}

std::optional<Document> NoteReader::next_csv() {
  while (auto row = csv_->next()) {
    const auto line = csv_->line();
    if (row->size() == 1 && row->front().empty()) continue;  // blank line
    ++rows_;
    if (row->size() != header_.size()) {
      skip(line, "expected " + std::to_string(header_.size()) + " fields, found " + std::to_string(row->size()));
      continue;
    }
    Document doc;
    doc.note_id = utf8::sanitize((*row)[col_note_]);
    doc.site_id = utf8::sanitize((*row)[col_site_]);
    doc.text = utf8::sanitize((*row)[col_text_]);
    if (doc.note_id.empty()) {
      skip(line, "empty note_id");
      continue;
    }
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i != col_note_ && i != col_site_ && i != col_text_) doc.metadata[header_[i]] = utf8::sanitize((*row)[i]);
    }
    return doc;
  }
  return std::nullopt;
}

std::optional<Document> NoteReader::next_jsonl() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++rows_;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      skip(line_, std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!j.is_object()) {
      skip(line_, "not a JSON object");
      continue;
    }
    bool ok = true;
    for (const char* key : {"note_id", "site_id", "text"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        skip(line_, std::string("missing string field '") + key + "'");
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    Document doc;
    doc.note_id = j["note_id"].get<std::string>();
    doc.site_id = j["site_id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    if (doc.note_id.empty()) {
      skip(line_, "empty note_id");
      continue;
    }
    for (const auto& [key, value] : j.items()) {
      if (key != "note_id" && key != "site_id" && key != "text" && value.is_string()) {
        doc.metadata[key] = value.get<std::string>();
      }
    }
    return doc;
  }
  return std::nullopt;
}

std::vector<Document> ingest_notes(const std::string& path, NoteFormat format) {
  NoteReader reader(path, format);
  std::vector<Document> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

}  // namespace symscribe
