#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "symscribe/pipeline.hpp"

namespace symscribe {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point a, Clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return v;
}

std::string resolve(const std::string& base_dir, const std::string& value) {
  if (value.empty()) return value;
  fs::path p(value);
  return p.is_absolute() ? value : (fs::path(base_dir) / p).lexically_normal().string();
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (lexicon_path.empty()) throw ConfigError("config lacks 'lexicon'");
  const auto must_exist = [](const std::string& key, const std::string& path) {
    if (!path.empty() && !fs::exists(path)) throw ConfigError(key + " path does not exist: " + path);
  };
  must_exist("lexicon", lexicon_path);
  must_exist("section_rules", section_rules_path);
  must_exist("abbreviations", abbreviations_path);
  must_exist("assertion_rules", assertion_rules_path);
}

PipelineConfig parse_config(std::string_view content, const std::string& base_dir) {
  PipelineConfig cfg;
  std::istringstream in{std::string(content)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    const auto t = std::string(trim(line));
    if (t.empty() || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = std::string(trim(t.substr(0, eq)));
    auto value = std::string(trim(t.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);

    if (key == "lexicon") cfg.lexicon_path = resolve(base_dir, value);
    else if (key == "section_rules") cfg.section_rules_path = resolve(base_dir, value);
    else if (key == "abbreviations") cfg.abbreviations_path = resolve(base_dir, value);
    else if (key == "assertion_rules") cfg.assertion_rules_path = resolve(base_dir, value);
    else if (key == "remote_classifier") cfg.remote_classifier_url = value.empty() ? std::nullopt : std::optional(value);
    else if (key == "remote_timeout_ms") cfg.remote_timeout_ms = parse_count(key, value);
    else if (key == "remote_max_in_flight") cfg.remote_max_in_flight = parse_count(key, value);
    else if (key == "workers") cfg.workers = parse_count(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_count(key, value);
    else if (key == "output_dir") cfg.output_dir = resolve(base_dir, value);
    else if (key == "seed") cfg.seed = parse_count(key, value);
    else if (key == "nlp_date") cfg.nlp_date = value;
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = fs::path(path).parent_path().string();
  return parse_config(ss.str(), base.empty() ? "." : base);
}

PipelineContext::PipelineContext(Lexicon lexicon, SectionRules sections, Abbreviations abbreviations,
                                 AssertionEngine engine, std::unique_ptr<RemoteClassifier> remote)
    : lexicon_(std::move(lexicon)),
      index_(MatcherIndex::compile(lexicon_)),
      sections_(std::move(sections)),
      abbreviations_(std::move(abbreviations)),
      engine_(std::move(engine)),
      remote_(std::move(remote)) {}

std::shared_ptr<const PipelineContext> PipelineContext::load(const PipelineConfig& config) {
  config.validate();
  auto lexicon = load_lexicon(config.lexicon_path);
  auto sections = config.section_rules_path.empty() ? SectionRules::defaults()
                                                    : SectionRules::from_file(config.section_rules_path);
  auto abbrevs = config.abbreviations_path.empty() ? Abbreviations::defaults()
                                                   : Abbreviations::from_file(config.abbreviations_path);
  auto engine = config.assertion_rules_path.empty() ? AssertionEngine()
                                                    : AssertionEngine(load_rules(config.assertion_rules_path));
  std::unique_ptr<RemoteClassifier> remote;
  if (config.remote_classifier_url) {
    RemoteClassifier::Options opts;
    opts.timeout = std::chrono::milliseconds(config.remote_timeout_ms);
    opts.max_in_flight = static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config.remote_max_in_flight));
    remote = std::make_unique<RemoteClassifier>(*config.remote_classifier_url, opts);
  }
  return std::make_shared<const PipelineContext>(std::move(lexicon), std::move(sections), std::move(abbrevs),
                                                 std::move(engine), std::move(remote));
}

PipelineOutput process_note(const PipelineContext& ctx, const Document& doc) {
  const auto t0 = Clock::now();
  PipelineOutput out;
  out.note_id = doc.note_id;
  out.site_id = doc.site_id;
  out.pipeline_version = kPipelineVersion;
  out.lexicon_fingerprint = ctx.lexicon().fingerprint();

  const auto text = utf8::decode(doc.text);
  out.sections = split_sections(text, ctx.section_rules());
  const auto t1 = Clock::now();
  const auto sentences = split_sentences(text, out.sections, ctx.abbreviations());
  const auto t2 = Clock::now();
  auto mentions = find_mentions(ctx.index(), doc.note_id, text, sentences);
  const auto t3 = Clock::now();

  std::optional<AssertionEngine::Context> analyzed;
  std::size_t analyzed_sentence = 0;
  const std::u32string_view view(text);
  for (auto& m : mentions) {
    const auto& sentence = sentences[m.sentence_index];
    const auto sentence_text = view.substr(sentence.span.start, sentence.span.length());
    const Span rel{m.span.start - sentence.span.start, m.span.end - sentence.span.start};
    AssertionResult res;
    if (ctx.remote()) {
      res = ctx.remote()->classify_or_fallback(ctx.engine(), sentence_text, rel);
    } else {
      if (!analyzed || analyzed_sentence != m.sentence_index) {
        analyzed = ctx.engine().analyze(sentence_text);
        analyzed_sentence = m.sentence_index;
      }
      res = ctx.engine().assess(*analyzed, rel);
    }
    if (res.trigger) {
      res.trigger->span.start += sentence.span.start;
      res.trigger->span.end += sentence.span.start;
    }
    out.mentions.push_back({std::move(m), std::move(res)});
  }
  const auto t4 = Clock::now();

  TimingRecord timing;
  timing.segment_sections = seconds(t0, t1);
  timing.segment_sentences = seconds(t1, t2);
  timing.ner = seconds(t2, t3);
  timing.assertion = seconds(t3, t4);
  timing.total = seconds(t0, t4);
  out.timing = timing;
  return out;
}

std::vector<PipelineOutput> process_documents(const PipelineContext& ctx, const std::vector<Document>& docs,
                                              std::size_t workers) {
  std::vector<PipelineOutput> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) { out[i] = process_note(ctx, docs[i]); });
  return out;
}

std::map<std::string, StageStats> summarize_timing(const std::vector<TimingRecord>& records) {
  const std::vector<std::pair<std::string, double TimingRecord::*>> stages = {
      {"segment_sections", &TimingRecord::segment_sections},
      {"segment_sentences", &TimingRecord::segment_sentences},
      {"ner", &TimingRecord::ner},
      {"assertion", &TimingRecord::assertion},
      {"serialization", &TimingRecord::serialization},
      {"total", &TimingRecord::total}};
  std::map<std::string, StageStats> out;
  for (const auto& [name, field] : stages) {
    StageStats s;
    if (!records.empty()) {
      const double n = static_cast<double>(records.size());
      for (const auto& r : records) s.mean += r.*field;
      s.mean /= n;
      double ss = 0.0;
      for (const auto& r : records) ss += (r.*field - s.mean) * (r.*field - s.mean);
      s.sd = std::sqrt(ss / n);
    }
    out[name] = s;
  }
  return out;
}

std::string RunSummary::to_json() const {
  nlohmann::ordered_json j;
  j["pipeline_version"] = pipeline_version;
  j["lexicon_fingerprint"] = lexicon_fingerprint;
  j["input_rows"] = input_rows;
  j["notes_processed"] = notes_processed;
  j["notes_skipped"] = notes_skipped;
  j["mentions"] = mentions;
  j["positive"] = positive;
  j["negative"] = negative;
  j["workers"] = workers;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["remote_fallbacks"] = remote_fallbacks;
  for (const auto& [stage, s] : timing) j["timing_seconds_per_note"][stage] = {{"mean", s.mean}, {"sd", s.sd}};
  j["diagnostics"] = diagnostics;
  return j.dump(2);
}

RunSummary run_pipeline(const PipelineConfig& config, const std::string& input_path, const RunOptions& options) {
  return run_pipeline(config, PipelineContext::load(config), input_path, options);
}

RunSummary run_pipeline(const PipelineConfig& config, std::shared_ptr<const PipelineContext> ctx,
                        const std::string& input_path, const RunOptions& options) {
  config.validate();
  const auto start = Clock::now();
  NoteReader reader(input_path);

  const auto nlp_date = config.nlp_date.empty() ? today_iso() : config.nlp_date;
  std::string bioc_date;
  for (char c : nlp_date) {
    if (c != '-') bioc_date += c;
  }

  const bool write = !options.dry_run;
  const fs::path dir(config.output_dir.empty() ? "." : config.output_dir);
  std::ofstream jsonl, bioc, omop, timing;
  std::unique_ptr<BiocWriter> bioc_writer;
  if (write) {
    fs::create_directories(dir);
    const auto open = [&](std::ofstream& f, const char* name) {
      f.open(dir / name, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    };
    open(jsonl, "mentions.jsonl");
    open(bioc, "mentions.bioc.xml");
    open(omop, "note_nlp.csv");
    open(timing, "timing.csv");
    BiocOptions bo;
    bo.date = bioc_date;
    bioc_writer = std::make_unique<BiocWriter>(bioc, bo);
    omop << note_nlp_header();
    timing << timing_header();
  }

  RunSummary summary;
  summary.workers = config.workers;
  summary.pipeline_version = kPipelineVersion;
  summary.lexicon_fingerprint = ctx->lexicon().fingerprint();
  std::vector<TimingRecord> timings;
  std::size_t next_nlp_id = 1;
  std::size_t failed = 0;

  struct Slot {
    PipelineOutput output;
    std::string jsonl;
    std::string bioc;
    std::string error;
  };

  const auto batch_limit = config.batch_size * config.workers;
  std::vector<Document> batch;
  for (bool more = true; more;) {
    batch.clear();
    while (batch.size() < batch_limit) {
      auto doc = reader.next();
      if (!doc) {
        more = false;
        break;
      }
      batch.push_back(std::move(*doc));
    }
    std::vector<Slot> slots(batch.size());
    parallel_for(batch.size(), config.workers, [&](std::size_t i) {
      auto& slot = slots[i];
      try {
        slot.output = process_note(*ctx, batch[i]);
        const auto s0 = Clock::now();
        auto stable = slot.output;
        stable.timing.reset();
        slot.jsonl = to_jsonl_line(stable);
        slot.bioc = bioc_document_xml(stable, batch[i]);
        const auto s1 = Clock::now();
        slot.output.timing->serialization = seconds(s0, s1);
        slot.output.timing->total += slot.output.timing->serialization;
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    });

    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto& slot = slots[i];
      if (!slot.error.empty()) {
        ++failed;
        auto msg = "note " + batch[i].note_id + " skipped: " + slot.error;
        spdlog::warn("{}", msg);
        summary.diagnostics.push_back(std::move(msg));
        continue;
      }
      ++summary.notes_processed;
      for (const auto& mr : slot.output.mentions) {
        ++summary.mentions;
        if (mr.assertion.binary == BinaryAssertion::Positive) ++summary.positive;
        else ++summary.negative;
      }
      timings.push_back(*slot.output.timing);
      if (write) {
        jsonl << slot.jsonl << '\n';
        bioc_writer->write_fragment(slot.bioc);
        const auto rows = to_omop_note_nlp({slot.output}, nlp_date, next_nlp_id);
        next_nlp_id += rows.size();
        for (const auto& r : rows) omop << csv::join(r.fields()) << '\n';
        timing << timing_row(slot.output.note_id, *slot.output.timing);
      }
    }
  }

  for (const auto& d : reader.diagnostics()) summary.diagnostics.push_back(d);
  summary.input_rows = reader.rows();
  summary.notes_skipped = reader.skipped() + failed;
  summary.timing = summarize_timing(timings);
  summary.remote_fallbacks = ctx->remote() ? ctx->remote()->fallback_count() : 0;
  summary.wall_clock_seconds = seconds(start, Clock::now());

  if (write) {
    bioc_writer->finish();
    for (auto* f : {&jsonl, &bioc, &omop, &timing}) {
      f->flush();
      if (!*f) throw std::runtime_error("write failure in " + dir.string());
    }
    std::ofstream s(dir / "run_summary.json", std::ios::binary | std::ios::trunc);
    s << summary.to_json() << '\n';
    if (!s) throw std::runtime_error("cannot write " + (dir / "run_summary.json").string());
  }
  return summary;
}

}  // namespace symscribe
