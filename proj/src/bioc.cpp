#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <json.hpp>
#include <sstream>
#include <unordered_map>

#include "symscribe/docmodel.hpp"

namespace symscribe {

namespace {

// XML 1.0 text escaping. '\r' becomes a character reference so parsers do not
// fold CRLF and shift offsets; characters XML cannot carry become U+FFFD,
// which keeps scalar offsets intact.
std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : utf8::decode(s)) {
    switch (c) {
      case U'&': out += "&amp;"; break;
      case U'<': out += "&lt;"; break;
      case U'>': out += "&gt;"; break;
      case U'"': out += "&quot;"; break;
      case U'\'': out += "&apos;"; break;
      case U'\r': out += "&#13;"; break;
      default:
        if ((c < 0x20 && c != U'\t' && c != U'\n') || c == 0xFFFE || c == 0xFFFF) c = 0xFFFD;
        utf8::append(out, c);
    }
  }
  return out;
}

void infon(std::ostream& out, std::string_view key, std::string_view value) {
  out << "<infon key=\"" << xml_escape(key) << "\">" << xml_escape(value) << "</infon>";
}

struct PassageSlice {
  std::optional<std::string> title;
  Span span;
};

std::vector<PassageSlice> passages_for(const PipelineOutput& output, std::size_t text_len) {
  std::vector<PassageSlice> out;
  for (const auto& s : output.sections) out.push_back({s.title, s.span});
  if (out.empty() && text_len > 0) out.push_back({std::nullopt, {0, text_len}});
  return out;
}

std::size_t passage_of(const MentionResult& mr, const std::vector<PassageSlice>& passages) {
  if (mr.mention.section_index < passages.size() &&
      passages[mr.mention.section_index].span.contains(mr.mention.span)) {
    return mr.mention.section_index;
  }
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (passages[i].span.contains(mr.mention.span)) return i;
  }
  return passages.size();
}

const Document& find_doc(const std::unordered_map<std::string, const Document*>& by_id, const std::string& note_id) {
  auto it = by_id.find(note_id);
  if (it == by_id.end()) throw UnknownNoteError("no original document for note '" + note_id + "'");
  return *it->second;
}

}  // namespace

BiocWriter::BiocWriter(std::ostream& out, const BiocOptions& options) : out_(out) {
  out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<!DOCTYPE collection SYSTEM \"BioC.dtd\">\n"
       << "<collection><source>" << xml_escape(options.source) << "</source><date>"
       << xml_escape(options.date.empty() ? today_compact() : options.date) << "</date><key>"
       << xml_escape(options.key) << "</key>\n";
}

std::string bioc_document_xml(const PipelineOutput& output, const Document& doc) {
  std::ostringstream out;
  const auto text = utf8::decode(doc.text);
  const auto passages = passages_for(output, text.size());

  std::vector<std::vector<const MentionResult*>> grouped(passages.size());
  for (const auto& mr : output.mentions) {
    const auto p = passage_of(mr, passages);
    if (p == passages.size()) {
      throw UnknownNoteError("mention outside every section of note '" + output.note_id + "'");
    }
    grouped[p].push_back(&mr);
  }

  out << "<document><id>" << xml_escape(output.note_id) << "</id>";
  infon(out, "site_id", output.site_id);
  infon(out, "pipeline_version", output.pipeline_version);
  infon(out, "lexicon_fingerprint", output.lexicon_fingerprint);
  std::size_t annotation_no = 0;
  for (std::size_t p = 0; p < passages.size(); ++p) {
    const auto& slice = passages[p];
    out << "\n<passage>";
    infon(out, "type", "section");
    if (slice.title) infon(out, "section_title", *slice.title);
    const auto end = std::min(slice.span.end, text.size());
    const auto start = std::min(slice.span.start, end);
    out << "<offset>" << slice.span.start << "</offset><text>"
         << xml_escape(utf8::encode(std::u32string_view(text).substr(start, end - start))) << "</text>";
    for (const auto* mr : grouped[p]) {
      const auto& m = mr->mention;
      const auto& a = mr->assertion;
      out << "\n<annotation id=\"" << xml_escape(output.note_id) << "." << annotation_no++ << "\">";
      infon(out, "type", "symptom");
      infon(out, "concept_id", m.concept_id);
      infon(out, "category_id", m.category_id);
      infon(out, "status", to_string(a.status));
      infon(out, "binary", to_string(a.binary));
      infon(out, "engine", to_string(a.engine));
      out << "<location offset=\"" << m.span.start << "\" length=\"" << m.span.length() << "\"/>"
           << "<text>" << xml_escape(m.matched_text) << "</text></annotation>";
    }
    out << "</passage>";
  }
  out << "</document>\n";
  return out.str();
}

void BiocWriter::write(const PipelineOutput& output, const Document& doc) { out_ << bioc_document_xml(output, doc); }

void BiocWriter::write_fragment(std::string_view document_xml) { out_ << document_xml; }

void BiocWriter::finish() {
  if (finished_) return;
  out_ << "</collection>\n";
  finished_ = true;
}

std::string to_bioc(const std::vector<PipelineOutput>& outputs, const std::vector<Document>& docs,
                    const BiocOptions& options) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id.emplace(d.note_id, &d);
  std::ostringstream out;
  BiocWriter writer(out, options);
  for (const auto& o : outputs) writer.write(o, find_doc(by_id, o.note_id));
  writer.finish();
  return out.str();
}

std::string to_bioc_json(const std::vector<PipelineOutput>& outputs, const std::vector<Document>& docs,
                         const BiocOptions& options) {
  using ojson = nlohmann::ordered_json;
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id.emplace(d.note_id, &d);

  ojson collection;
  collection["source"] = options.source;
  collection["date"] = options.date.empty() ? today_compact() : options.date;
  collection["key"] = options.key;
  collection["documents"] = ojson::array();
  for (const auto& o : outputs) {
    const auto& doc = find_doc(by_id, o.note_id);
    const auto text = utf8::decode(doc.text);
    const auto passages = passages_for(o, text.size());
    ojson dj;
    dj["id"] = o.note_id;
    dj["infons"] = ojson{{"site_id", o.site_id},
                         {"pipeline_version", o.pipeline_version},
                         {"lexicon_fingerprint", o.lexicon_fingerprint}};
    dj["passages"] = ojson::array();
    for (const auto& slice : passages) {
      ojson pj;
      pj["infons"] = ojson{{"type", "section"}};
      if (slice.title) pj["infons"]["section_title"] = *slice.title;
      pj["offset"] = slice.span.start;
      const auto end = std::min(slice.span.end, text.size());
      pj["text"] = utf8::encode(std::u32string_view(text).substr(std::min(slice.span.start, end),
                                                                  end - std::min(slice.span.start, end)));
      pj["annotations"] = ojson::array();
      dj["passages"].push_back(std::move(pj));
    }
    std::size_t annotation_no = 0;
    for (const auto& mr : o.mentions) {
      const auto p = passage_of(mr, passages);
      if (p == passages.size()) throw UnknownNoteError("mention outside every section of note '" + o.note_id + "'");
      ojson aj;
      aj["id"] = o.note_id + "." + std::to_string(annotation_no++);
      aj["infons"] = ojson{{"type", "symptom"},
                           {"concept_id", mr.mention.concept_id},
                           {"category_id", mr.mention.category_id},
                           {"status", to_string(mr.assertion.status)},
                           {"binary", to_string(mr.assertion.binary)},
                           {"engine", to_string(mr.assertion.engine)}};
      aj["locations"] = ojson::array({ojson{{"offset", mr.mention.span.start}, {"length", mr.mention.span.length()}}});
      aj["text"] = mr.mention.matched_text;
      dj["passages"][p]["annotations"].push_back(std::move(aj));
    }
    collection["documents"].push_back(std::move(dj));
  }
  return collection.dump(2);
}

BiocCollection parse_bioc(std::string_view xml) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw FormatError(std::string("invalid BioC XML: ") + e.what());
  }
  auto root = tree.get_child_optional("collection");
  if (!root) throw FormatError("BioC XML lacks <collection>");

  const auto infons_of = [](const pt::ptree& node) {
    std::map<std::string, std::string> infons;
    for (const auto& [name, child] : node) {
      if (name == "infon") infons[child.get<std::string>("<xmlattr>.key", "")] = child.data();
    }
    return infons;
  };

  BiocCollection out;
  try {
    out.source = root->get<std::string>("source", "");
    out.date = root->get<std::string>("date", "");
    out.key = root->get<std::string>("key", "");
    for (const auto& [name, dnode] : *root) {
      if (name != "document") continue;
      BiocDocument doc;
      doc.id = dnode.get<std::string>("id");
      doc.infons = infons_of(dnode);
      for (const auto& [pname, pnode] : dnode) {
        if (pname != "passage") continue;
        BiocPassage passage;
        passage.infons = infons_of(pnode);
        passage.offset = pnode.get<std::size_t>("offset");
        passage.text = pnode.get<std::string>("text", "");
        for (const auto& [aname, anode] : pnode) {
          if (aname != "annotation") continue;
          BiocAnnotation ann;
          ann.id = anode.get<std::string>("<xmlattr>.id", "");
          ann.infons = infons_of(anode);
          ann.text = anode.get<std::string>("text", "");
          for (const auto& [lname, lnode] : anode) {
            if (lname != "location") continue;
            ann.locations.push_back(
                {lnode.get<std::size_t>("<xmlattr>.offset"), lnode.get<std::size_t>("<xmlattr>.length")});
          }
          passage.annotations.push_back(std::move(ann));
        }
        doc.passages.push_back(std::move(passage));
      }
      out.documents.push_back(std::move(doc));
    }
  } catch (const pt::ptree_error& e) {
    throw FormatError(std::string("malformed BioC element: ") + e.what());
  }
  return out;
}

}  // namespace symscribe
