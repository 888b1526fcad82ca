#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "symscribe/assertion.hpp"
#include "symscribe/docmodel.hpp"
#include "symscribe/eval.hpp"

namespace httplib {
class Server;
}

namespace symscribe {

class ServiceError : public std::runtime_error {
 public:
  enum class Kind {
    EmptyRun,
    UnknownSession,
    UnknownTask,
    UnknownAnnotator,
    MissingStatus,
    IncompleteSession,
    BadRequest,
  };
  ServiceError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(ServiceError::Kind k);

struct AnnotationTask {
  std::string task_id;  // note_id:start-end
  std::string note_id;
  Span mention;  // note offsets
  std::string mention_text;
  std::string context_passage;  // the mention's section text
  Span highlight;               // within context_passage
  std::string suggested_category;
  std::string concept_id;
  std::string predicted_status;

  friend bool operator==(const AnnotationTask&, const AnnotationTask&) = default;
};

struct AnnotationRecord {
  std::string task_id;
  std::string annotator_id;
  bool related = true;
  std::optional<AssertionStatus> status;  // present iff related
  std::string timestamp;                  // ISO 8601 UTC; empty on submit: server clock

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

std::string record_json(const AnnotationRecord& r);
AnnotationRecord parse_record(std::string_view json);  // throws ServiceError(BadRequest)

struct Session {
  std::string id;
  std::string source;
  std::vector<std::string> annotators;
  std::vector<AnnotationTask> tasks;  // ordered by (note_id, mention.start)
  std::string created_at;
};

// One task per BioC annotation.
std::vector<AnnotationTask> tasks_from_bioc(const BiocCollection& collection);

struct Disagreement {
  std::string task_id;
  std::string reason;  // "unrelated" or "status_conflict"
};

struct AgreementReport {
  std::vector<std::string> annotators;
  std::size_t tasks = 0;
  double kappa_related = 1.0;
  std::optional<double> kappa_binary;  // over tasks both marked related
  std::optional<double> kappa_status;  // five-way, same tasks
  std::vector<Disagreement> disagreements;
};

struct GoldSet {
  std::vector<GoldLabel> entries;
  std::vector<std::string> annotators;
  std::optional<double> kappa;
  std::size_t removed = 0;
  std::size_t total = 0;
};

// Agreement and gold for explicit record sets; records[a] maps task_id to the
// record of annotators[a].
AgreementReport compute_agreement(const Session& session,
                                  const std::vector<std::map<std::string, AnnotationRecord>>& records);
GoldSet export_gold(const Session& session, const std::vector<std::map<std::string, AnnotationRecord>>& records);

struct SubmitResult {
  bool changed = false;
  AnnotationRecord stored;
};

// Sessions under <data_dir>/sessions/<id>/: session.json, tasks.jsonl and an
// append-only journal.jsonl that is fsynced before submit returns. The index is
// rebuilt from the journals on construction.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::string data_dir);

  const std::string& data_dir() const { return data_dir_; }

  // Idempotent: the id derives from the tasks and annotators.
  Session create_session(const std::string& run_path, const std::vector<std::string>& annotators);
  Session create_session(std::vector<AnnotationTask> tasks, const std::vector<std::string>& annotators,
                         const std::string& source);

  std::vector<std::string> session_ids() const;
  Session session(const std::string& id) const;
  std::size_t record_count(const std::string& id) const;
  std::map<std::string, std::size_t> progress(const std::string& id) const;

  SubmitResult submit(const std::string& session_id, AnnotationRecord record);
  std::optional<AnnotationRecord> record(const std::string& session_id, const std::string& task_id,
                                         const std::string& annotator) const;

  AgreementReport agreement(const std::string& session_id) const;
  GoldSet gold(const std::string& session_id) const;

 private:
  struct SessionState {
    Session session;
    std::map<std::string, std::size_t> task_index;
    std::vector<std::map<std::string, AnnotationRecord>> records;  // per annotator
    std::string dir;
  };

  const SessionState& state(const std::string& id) const;
  void load_session(const std::string& dir);
  static bool apply(SessionState& s, const AnnotationRecord& r, std::size_t annotator);

  std::string data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8680;           // 0: any free port
  std::string static_dir;    // UI assets; empty: none
};

class AnnotateServer {
 public:
  AnnotateServer(AnnotationStore& store, ServerOptions options);
  ~AnnotateServer();

  // Binds and returns the bound port; throws std::runtime_error on failure.
  int bind();
  void listen();  // blocks until stop()
  void stop();

 private:
  void routes();

  AnnotationStore& store_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

std::string utc_timestamp();

}  // namespace symscribe
