#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "symscribe/annotate_service.hpp"
#include "symscribe/eval.hpp"
#include "symscribe/pipeline.hpp"
#include "symscribe/selftest.hpp"
#include "symscribe/stats.hpp"

namespace fs = std::filesystem;
using namespace symscribe;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

// Raised for user-correctable input problems.
struct Invalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Invalid(fmt::format("missing {} path", what));
  if (!fs::exists(path)) throw Invalid(fmt::format("{} not found: {}", what, path));
}

int lexicon_check(const std::string& path) {
  require_file(path, "lexicon");
  try {
    load_lexicon(path);
  } catch (const LexiconError& e) {
    for (const auto& d : e.diagnostics()) {
      std::cerr << fmt::format("{}:{}: {}: {}\n", path, d.line, to_string(d.kind), d.message);
    }
    return kInvalid;
  }
  return kOk;
}

struct ExtractArgs {
  std::string config;
  std::string input;
  std::string output;
  std::size_t workers = 0;
  std::string section_rules;
  std::string abbrev_list;
};

int extract(const ExtractArgs& a, bool dry_run) {
  PipelineConfig cfg;
  if (!a.config.empty()) {
    require_file(a.config, "config");
    cfg = load_config(a.config);
  }
  if (!a.output.empty()) cfg.output_dir = a.output;
  if (a.workers > 0) cfg.workers = a.workers;
  if (!a.section_rules.empty()) cfg.section_rules_path = a.section_rules;
  if (!a.abbrev_list.empty()) cfg.abbreviations_path = a.abbrev_list;
  require_file(a.input, "input notes file");
  if (cfg.output_dir.empty() && !dry_run) throw Invalid("no output directory; pass --out or set output_dir");

  RunOptions opts;
  opts.dry_run = dry_run;
  const auto summary = run_pipeline(cfg, a.input, opts);
  std::cout << summary.to_json() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::size_t bootstrap = 100;
  std::uint64_t seed = 7;
  std::string out = "eval_report.json";
};

int evaluate(const EvalArgs& a, bool dry_run) {
  require_file(a.pred, "predictions file");
  require_file(a.gold, "gold file");
  const auto join = join_predictions(read_jsonl(a.pred), read_gold(a.gold));
  if (join.pairs.empty()) throw Invalid("no predicted mention matches a gold entry");
  const auto point = score(join.pairs);
  std::optional<BootstrapReport> boot;
  if (a.bootstrap > 0) boot = bootstrap(join.pairs, a.bootstrap, a.seed);
  const auto report = eval_report_json(point, boot ? &*boot : nullptr, join);
  std::cout << report << "\n";
  if (!dry_run) write_file(a.out, report + "\n");
  return kOk;
}

struct PrevalenceArgs {
  std::string mentions;
  std::string sites;
  std::string lexicon;
  std::string out;
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
};

int prevalence(const PrevalenceArgs& a, bool dry_run) {
  require_file(a.mentions, "mentions file");
  const auto outputs = read_jsonl(a.mentions);
  std::map<std::string, std::string> site_of;
  if (!a.sites.empty()) {
    require_file(a.sites, "site map");
    site_of = read_site_map(a.sites);
  } else {
    for (const auto& o : outputs) site_of[o.note_id] = o.site_id;
  }
  std::vector<std::string> categories;
  if (!a.lexicon.empty()) {
    require_file(a.lexicon, "lexicon");
    categories = category_axis(load_lexicon(a.lexicon));
  }
  const auto table = build_table(outputs, site_of, categories);

  SpearmanOptions opts;
  opts.permutations = a.permutations;
  opts.seed = a.seed;
  const auto guarded = [&](auto fn) -> CorrelationMatrix {
    try {
      return fn();
    } catch (const StatsError& e) {
      spdlog::warn("{}", e.what());
      return {};
    }
  };
  const auto site_pos = guarded([&] { return pairwise_site_correlations(table, Polarity::Positive, opts); });
  const auto site_neg = guarded([&] { return pairwise_site_correlations(table, Polarity::Negative, opts); });
  const auto cat_pos = guarded([&] { return pairwise_category_correlations(table, Polarity::Positive, opts); });
  const auto summary = prevalence_summary_json(table, site_pos, site_neg, cat_pos, opts);
  std::cout << summary << "\n";
  if (!dry_run) {
    if (a.out.empty()) throw Invalid("no output directory; pass --out");
    const fs::path dir(a.out);
    write_file(dir / "counts.csv", counts_csv(table));
    write_file(dir / "site_corr_pos.csv", correlation_csv(site_pos));
    write_file(dir / "site_corr_neg.csv", correlation_csv(site_neg));
    write_file(dir / "category_corr_pos.csv", correlation_csv(cat_pos));
    write_file(dir / "summary.json", summary + "\n");
  }
  return kOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8680;
  std::string data_dir;
  std::string ui_dir;
};

int serve(ServeArgs a, bool dry_run) {
  if (a.data_dir.empty()) {
    const char* env = std::getenv("SYMSCRIBE_DATA");
    a.data_dir = env && *env ? env : "symscribe-data";
  }
  if (dry_run) {
    std::cout << fmt::format("would serve {} on {}:{}\n", a.data_dir, a.host, a.port);
    return kOk;
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  AnnotationStore store(a.data_dir);
  AnnotateServer server(store, {a.host, a.port, a.ui_dir});
  const int port = server.bind();
  std::cout << fmt::format("listening on http://{}:{}", a.host, port) << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

struct SelftestArgs {
  std::size_t ner_cases = 200;
  std::size_t spearman_cases = 200;
  std::uint64_t seed = 1;
};

int selftest(const SelftestArgs& a) {
  bool ok = true;
  for (const auto& r : run_selftest(a.ner_cases, a.spearman_cases, a.seed)) {
    std::cout << fmt::format("{}: {} passed, {} failed\n", r.name, r.passed, r.failed);
    for (const auto& f : r.failures) std::cout << "  " << f << "\n";
    ok = ok && r.failed == 0;
  }
  return ok ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symptom extraction, assertion and evaluation toolkit"};
  app.set_version_flag("--version", std::string(kPipelineVersion));
  app.require_subcommand(1);
  app.fallthrough();
  bool dry_run = false;
  app.add_flag("--dry-run", dry_run, "Validate and compute without writing files");
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  auto* lex = app.add_subcommand("lexicon", "Lexicon tools");
  lex->require_subcommand(1);
  std::string lex_path;
  auto* check = lex->add_subcommand("check", "Validate a lexicon file");
  check->add_option("path", lex_path, "Lexicon TSV")->required();

  ExtractArgs ex;
  auto* extract_cmd = app.add_subcommand("extract", "Run the pipeline over a notes file");
  extract_cmd->add_option("--config", ex.config, "Pipeline config file");
  extract_cmd->add_option("--in", ex.input, "Notes CSV or JSONL")->required();
  extract_cmd->add_option("--out", ex.output, "Output directory");
  extract_cmd->add_option("--workers", ex.workers, "Worker threads")->check(CLI::PositiveNumber);
  extract_cmd->add_option("--section-rules", ex.section_rules, "Section title list");
  extract_cmd->add_option("--abbrev-list", ex.abbrev_list, "Abbreviation list");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold labels");
  eval_cmd->add_option("--pred", ev.pred, "Predicted mentions.jsonl")->required();
  eval_cmd->add_option("--gold", ev.gold, "Gold JSONL")->required();
  eval_cmd->add_option("--bootstrap", ev.bootstrap, "Bootstrap iterations (0 disables)");
  eval_cmd->add_option("--seed", ev.seed, "Bootstrap seed");
  eval_cmd->add_option("--out", ev.out, "Report path");

  PrevalenceArgs pv;
  auto* prev_cmd = app.add_subcommand("prevalence", "Per-site counts and Spearman correlations");
  prev_cmd->add_option("--mentions", pv.mentions, "mentions.jsonl")->required();
  prev_cmd->add_option("--sites", pv.sites, "note_id,site_id CSV (default: site_id in the mentions)");
  prev_cmd->add_option("--lexicon", pv.lexicon, "Lexicon giving the category axis");
  prev_cmd->add_option("--out", pv.out, "Report directory");
  prev_cmd->add_option("--permutations", pv.permutations, "Monte-Carlo permutations");
  prev_cmd->add_option("--seed", pv.seed, "Monte-Carlo seed");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation service");
  serve_cmd->add_option("--host", sv.host, "Bind address");
  serve_cmd->add_option("--port", sv.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--data-dir", sv.data_dir, "Session storage (default $SYMSCRIBE_DATA)");
  serve_cmd->add_option("--ui-dir", sv.ui_dir, "Static UI assets");

  SelftestArgs st;
  auto* self_cmd = app.add_subcommand("selftest", "Run the embedded oracle suites");
  self_cmd->add_option("--ner-cases", st.ner_cases, "Random NER oracle cases");
  self_cmd->add_option("--spearman-cases", st.spearman_cases, "Random Spearman oracle cases");
  self_cmd->add_option("--seed", st.seed, "Case seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("symscribe"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*check) return lexicon_check(lex_path);
    if (*extract_cmd) return extract(ex, dry_run);
    if (*eval_cmd) return evaluate(ev, dry_run);
    if (*prev_cmd) return prevalence(pv, dry_run);
    if (*serve_cmd) return serve(sv, dry_run);
    if (*self_cmd) return selftest(st);
  } catch (const Invalid& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const LexiconError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& d : e.diagnostics()) std::cerr << fmt::format("  line {}: {}\n", d.line, d.message);
    return kInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const RuleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const EvalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const StatsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kRuntime;
}
