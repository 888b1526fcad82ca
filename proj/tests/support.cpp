#include "support.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "symscribe/csv.hpp"

extern char** environ;

namespace symscribe::support {

namespace fs = std::filesystem;

fs::path temp_dir(std::string_view tag) {
  static std::atomic<int> counter{0};
  auto dir = fs::temp_directory_path() /
             fmt::format("symscribe-{}-{}-{}", tag, static_cast<long>(::getpid()), counter++);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string data_path(std::string_view name) { return (fs::path(SYMSCRIBE_DATA_DIR) / name).string(); }

const Lexicon& demo_lexicon() {
  static const Lexicon lex = load_lexicon(data_path("demo_lexicon.tsv"));
  return lex;
}

PipelineConfig demo_config(const fs::path& output_dir, std::size_t workers) {
  PipelineConfig cfg;
  cfg.lexicon_path = data_path("demo_lexicon.tsv");
  cfg.section_rules_path = data_path("section_titles.txt");
  cfg.abbreviations_path = data_path("abbreviations.txt");
  cfg.assertion_rules_path = data_path("assertion_rules.tsv");
  cfg.workers = workers;
  cfg.output_dir = output_dir.string();
  cfg.nlp_date = "2024-01-01";
  return cfg;
}

void write_text(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

namespace {

const std::vector<std::string>& symptom_terms() {
  static const std::vector<std::string> terms = {
      "fatigue",     "headache",       "chest pain", "shortness of breath", "diarrhea",      "fever",
      "chills",      "brain fog",      "cough",      "palpitations",        "dizziness",     "nausea",
      "joint pain",  "myalgias",       "anxiety",    "insomnia",            "loss of smell", "hair loss",
      "sore throat", "loose stools",   "migraines",  "dyspnea",             "malaise",       "vomiting",
  };
  return terms;
}

const std::vector<std::string>& templates() {
  static const std::vector<std::string> t = {
      "Patient reports {} and {} since the infection.",
      "She denies {} but endorses {}.",
      "There is no {} today.",
      "Negative for {}, {}, and {}.",
      "History of {} treated last year.",
      "Ibuprofen as needed for {}.",
      "He continues to have {} with exertion; {} is improving.",
      "Vitals stable, temp 98.6 F, no acute distress.",
      "Follow up with Dr. Smith in 4 weeks regarding {}.",
      "If {} recurs, return to clinic.",
      "Ongoing {} limits daily activities.",
      "Without {} or {} on review.",
  };
  return t;
}

const std::vector<std::string>& headers() {
  static const std::vector<std::string> h = {"CHIEF COMPLAINT:", "HISTORY OF PRESENT ILLNESS:", "REVIEW OF SYSTEMS:",
                                             "ASSESSMENT:", "PLAN:"};
  return h;
}

std::string fill(const std::string& tmpl, std::mt19937_64& rng) {
  const auto& terms = symptom_terms();
  std::uniform_int_distribution<std::size_t> pick(0, terms.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += terms[pick(rng)];
      ++i;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

}  // namespace

std::string synthetic_notes_csv(std::size_t n, std::size_t approx_bytes, std::uint64_t seed, std::size_t sites) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_t(0, templates().size() - 1);
  std::string csv = "note_id,site_id,text\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    std::size_t h = 0;
    while (text.size() < approx_bytes) {
      if (text.size() >= h * approx_bytes / headers().size() && h < headers().size()) {
        if (!text.empty()) text += "\n\n";
        text += headers()[h++] + " ";
      }
      text += fill(templates()[pick_t(rng)], rng) + " ";
    }
    csv += csv::join({fmt::format("syn{:05}", i), fmt::format("site_{}", i % std::max<std::size_t>(1, sites)),
                      std::string(trim(text))});
    csv += "\n";
  }
  return csv;
}

PipelineOutput random_output(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto coin = [&rng] { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; };
  auto upto = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n)(rng); };
  static const std::vector<std::string> words = {"fatigue", "céphalée", "fièvre", "咳嗽", "pain \"quoted\"",
                                                 "back\\slash", "tab\there", "line\nbreak", "😷 mask"};

  PipelineOutput o;
  o.note_id = fmt::format("note-{}", seed);
  o.site_id = coin() ? "site_a" : "sité_β";
  o.pipeline_version = kPipelineVersion;
  o.lexicon_fingerprint = fmt::format("{:016x}{:016x}", rng(), rng());

  std::size_t pos = 0;
  const auto n_sections = upto(4);
  for (std::size_t s = 0; s < n_sections; ++s) {
    Section sec;
    if (coin()) sec.title = words[upto(words.size() - 1)];
    sec.span = {pos, pos + 1 + upto(500)};
    pos = sec.span.end;
    o.sections.push_back(sec);
  }

  std::size_t start = 0;
  const auto n_mentions = upto(8);
  for (std::size_t k = 0; k < n_mentions; ++k) {
    MentionResult mr;
    start += upto(40);
    mr.mention.note_id = o.note_id;
    mr.mention.matched_text = words[upto(words.size() - 1)];
    mr.mention.span = {start, start + utf8::length(mr.mention.matched_text)};
    start = mr.mention.span.end;
    mr.mention.concept_id = fmt::format("C{:07}", upto(9999999));
    mr.mention.category_id = coin() ? "pain" : "fever";
    mr.mention.sentence_index = upto(20);
    mr.mention.section_index = upto(4);
    const auto status = static_cast<AssertionStatus>(upto(4));
    mr.assertion.status = status;
    mr.assertion.binary = collapse(status);
    if (coin()) {
      mr.assertion.engine = Engine::RemoteClassifier;
      mr.assertion.score = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    } else if (status != AssertionStatus::Present) {
      mr.assertion.trigger = Trigger{"negative for", {upto(100), 0}};
      mr.assertion.trigger->span.end = mr.assertion.trigger->span.start + 12;
    }
    o.mentions.push_back(std::move(mr));
  }
  return o;
}

Session synthetic_session(std::size_t n, std::vector<std::string> annotators) {
  Session s;
  s.id = fmt::format("synthetic-{}", n);
  s.source = "synthetic";
  s.annotators = std::move(annotators);
  for (std::size_t i = 0; i < n; ++i) {
    AnnotationTask t;
    t.note_id = fmt::format("n{:04}", i / 10);
    const std::size_t start = (i % 10) * 20;
    t.mention = {start, start + 7};
    t.task_id = fmt::format("{}:{}-{}", t.note_id, t.mention.start, t.mention.end);
    t.mention_text = "fatigue";
    t.context_passage = "Patient reports fatigue.";
    t.highlight = {16, 23};
    t.suggested_category = "fatigue";
    t.concept_id = "C0015672";
    t.predicted_status = "present";
    s.tasks.push_back(std::move(t));
  }
  return s;
}

RecordSets fixture_records(const Session& s, std::size_t conflicts, std::size_t unrelated) {
  RecordSets sets(s.annotators.size());
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    for (std::size_t a = 0; a < s.annotators.size(); ++a) {
      AnnotationRecord r;
      r.task_id = s.tasks[i].task_id;
      r.annotator_id = s.annotators[a];
      r.related = true;
      r.status = AssertionStatus::Present;
      r.timestamp = "2024-01-01T00:00:00Z";
      if (a == 1 && i < conflicts) r.status = AssertionStatus::Absent;
      if (a == 1 && i >= conflicts && i < conflicts + unrelated) {
        r.related = false;
        r.status.reset();
      }
      sets[a][r.task_id] = r;
    }
  }
  return sets;
}

ProcessResult run_process(const std::vector<std::string>& argv) {
  const auto dir = temp_dir("proc");
  const auto out_path = (dir / "stdout").string();
  const auto err_path = (dir / "stderr").string();

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error("cannot spawn " + argv.front());

  int wstatus = 0;
  ::waitpid(pid, &wstatus, 0);
  ProcessResult r;
  r.status = WIFEXITED(wstatus) ? WEXITSTATUS(wstatus) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  fs::remove_all(dir);
  return r;
}

}  // namespace symscribe::support
