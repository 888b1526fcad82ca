#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "symscribe/annotate_service.hpp"
#include "symscribe/hash.hpp"

namespace symscribe {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string_view to_string(ServiceError::Kind k) {
  switch (k) {
    case ServiceError::Kind::EmptyRun: return "EmptyRun";
    case ServiceError::Kind::UnknownSession: return "UnknownSession";
    case ServiceError::Kind::UnknownTask: return "UnknownTask";
    case ServiceError::Kind::UnknownAnnotator: return "UnknownAnnotator";
    case ServiceError::Kind::MissingStatus: return "MissingStatus";
    case ServiceError::Kind::IncompleteSession: return "IncompleteSession";
    case ServiceError::Kind::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

namespace {

json task_json(const AnnotationTask& t) {
  json j;
  j["task_id"] = t.task_id;
  j["note_id"] = t.note_id;
  j["start"] = t.mention.start;
  j["end"] = t.mention.end;
  j["mention_text"] = t.mention_text;
  j["context_passage"] = t.context_passage;
  j["highlight_start"] = t.highlight.start;
  j["highlight_end"] = t.highlight.end;
  j["suggested_category"] = t.suggested_category;
  j["concept_id"] = t.concept_id;
  j["predicted_status"] = t.predicted_status;
  return j;
}

AnnotationTask parse_task(const json& j) {
  AnnotationTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.note_id = j.at("note_id").get<std::string>();
  t.mention = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
  t.mention_text = j.at("mention_text").get<std::string>();
  t.context_passage = j.at("context_passage").get<std::string>();
  t.highlight = {j.at("highlight_start").get<std::size_t>(), j.at("highlight_end").get<std::size_t>()};
  t.suggested_category = j.at("suggested_category").get<std::string>();
  t.concept_id = j.at("concept_id").get<std::string>();
  t.predicted_status = j.at("predicted_status").get<std::string>();
  return t;
}

json record_to_json(const AnnotationRecord& r) {
  json j;
  j["task_id"] = r.task_id;
  j["annotator_id"] = r.annotator_id;
  j["related"] = r.related;
  j["status"] = r.status ? json(std::string(to_string(*r.status))) : json(nullptr);
  j["timestamp"] = r.timestamp;
  return j;
}

std::string task_id_of(const std::string& note_id, Span s) {
  return note_id + ":" + std::to_string(s.start) + "-" + std::to_string(s.end);
}

void append_durably(const std::string& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open journal " + path);
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw std::runtime_error("journal write failed: " + path);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw std::runtime_error("journal fsync failed: " + path);
  }
  ::close(fd);
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  const int fd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
  fs::rename(tmp, path);
}

std::optional<BinaryAssertion> binary_of(const AnnotationRecord& r) {
  if (!r.related || !r.status) return std::nullopt;
  return collapse(*r.status);
}

void require_complete(const Session& s, const std::vector<std::map<std::string, AnnotationRecord>>& records) {
  if (s.annotators.size() < 2) {
    throw ServiceError(ServiceError::Kind::IncompleteSession, "agreement needs two annotators");
  }
  if (s.tasks.empty()) throw ServiceError(ServiceError::Kind::IncompleteSession, "session has no tasks");
  for (std::size_t a = 0; a < s.annotators.size(); ++a) {
    const auto have = a < records.size() ? records[a].size() : 0;
    if (have < s.tasks.size()) {
      throw ServiceError(ServiceError::Kind::IncompleteSession,
                         fmt::format("annotator {} has completed {} of {} tasks", s.annotators[a], have,
                                     s.tasks.size()));
    }
  }
}

}  // namespace

std::string record_json(const AnnotationRecord& r) { return record_to_json(r).dump(); }

AnnotationRecord parse_record(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ServiceError(ServiceError::Kind::BadRequest, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ServiceError(ServiceError::Kind::BadRequest, "annotation must be a JSON object");
  AnnotationRecord r;
  try {
    r.task_id = j.at("task_id").get<std::string>();
    r.annotator_id = j.at("annotator_id").get<std::string>();
    r.related = j.at("related").get<bool>();
    if (j.contains("status") && !j["status"].is_null()) {
      auto s = parse_status(j["status"].get<std::string>());
      if (!s) throw ServiceError(ServiceError::Kind::BadRequest, "unknown status " + j["status"].dump());
      r.status = *s;
    }
    if (j.contains("timestamp") && !j["timestamp"].is_null()) r.timestamp = j["timestamp"].get<std::string>();
  } catch (const json::exception& e) {
    throw ServiceError(ServiceError::Kind::BadRequest, std::string("bad annotation: ") + e.what());
  }
  return r;
}

std::vector<AnnotationTask> tasks_from_bioc(const BiocCollection& collection) {
  std::vector<AnnotationTask> tasks;
  for (const auto& doc : collection.documents) {
    for (const auto& passage : doc.passages) {
      const auto passage_len = utf8::length(passage.text);
      for (const auto& ann : passage.annotations) {
        if (ann.locations.empty()) continue;
        const auto& loc = ann.locations.front();
        AnnotationTask t;
        t.note_id = doc.id;
        t.mention = {loc.offset, loc.offset + loc.length};
        t.task_id = task_id_of(doc.id, t.mention);
        t.mention_text = ann.text;
        t.context_passage = passage.text;
        if (loc.offset < passage.offset || t.mention.end - passage.offset > passage_len) {
          throw FormatError("annotation " + ann.id + " lies outside its passage");
        }
        t.highlight = {loc.offset - passage.offset, t.mention.end - passage.offset};
        const auto infon = [&](const char* key) {
          auto it = ann.infons.find(key);
          return it == ann.infons.end() ? std::string() : it->second;
        };
        t.suggested_category = infon("category_id");
        t.concept_id = infon("concept_id");
        t.predicted_status = infon("status");
        tasks.push_back(std::move(t));
      }
    }
  }
  return tasks;
}

AgreementReport compute_agreement(const Session& session,
                                  const std::vector<std::map<std::string, AnnotationRecord>>& records) {
  require_complete(session, records);
  AgreementReport rep;
  rep.annotators = {session.annotators[0], session.annotators[1]};
  rep.tasks = session.tasks.size();
  std::vector<std::string> rel_a, rel_b, bin_a, bin_b, st_a, st_b;
  for (const auto& t : session.tasks) {
    const auto& a = records[0].at(t.task_id);
    const auto& b = records[1].at(t.task_id);
    rel_a.push_back(a.related ? "related" : "unrelated");
    rel_b.push_back(b.related ? "related" : "unrelated");
    if (!a.related || !b.related) {
      rep.disagreements.push_back({t.task_id, "unrelated"});
      continue;
    }
    bin_a.emplace_back(to_string(*binary_of(a)));
    bin_b.emplace_back(to_string(*binary_of(b)));
    st_a.emplace_back(to_string(*a.status));
    st_b.emplace_back(to_string(*b.status));
    if (bin_a.back() != bin_b.back()) rep.disagreements.push_back({t.task_id, "status_conflict"});
  }
  rep.kappa_related = cohens_kappa(rel_a, rel_b);
  if (!bin_a.empty()) {
    rep.kappa_binary = cohens_kappa(bin_a, bin_b);
    rep.kappa_status = cohens_kappa(st_a, st_b);
  }
  return rep;
}

GoldSet export_gold(const Session& session, const std::vector<std::map<std::string, AnnotationRecord>>& records) {
  const auto rep = compute_agreement(session, records);
  std::set<std::string> removed;
  for (const auto& d : rep.disagreements) removed.insert(d.task_id);
  GoldSet gold;
  gold.annotators = rep.annotators;
  gold.kappa = rep.kappa_binary;
  gold.total = session.tasks.size();
  for (const auto& t : session.tasks) {
    if (removed.count(t.task_id)) continue;
    gold.entries.push_back({{t.note_id, t.mention}, *binary_of(records[0].at(t.task_id))});
  }
  gold.removed = gold.total - gold.entries.size();
  return gold;
}

// ---- store ----

AnnotationStore::AnnotationStore(std::string data_dir) : data_dir_(std::move(data_dir)) {
  const auto root = fs::path(data_dir_) / "sessions";
  fs::create_directories(root);
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "session.json")) continue;
    try {
      load_session(entry.path().string());
    } catch (const std::exception& e) {
      spdlog::error("cannot load session {}: {}", entry.path().string(), e.what());
    }
  }
}

void AnnotationStore::load_session(const std::string& dir) {
  auto state = std::make_unique<SessionState>();
  state->dir = dir;
  std::ifstream meta_in(fs::path(dir) / "session.json", std::ios::binary);
  const auto meta = json::parse(meta_in);
  auto& s = state->session;
  s.id = meta.at("id").get<std::string>();
  s.source = meta.at("source").get<std::string>();
  s.annotators = meta.at("annotators").get<std::vector<std::string>>();
  s.created_at = meta.at("created_at").get<std::string>();

  std::ifstream tasks_in(fs::path(dir) / "tasks.jsonl", std::ios::binary);
  std::string line;
  while (std::getline(tasks_in, line)) {
    if (trim(line).empty()) continue;
    s.tasks.push_back(parse_task(json::parse(line)));
  }
  for (std::size_t i = 0; i < s.tasks.size(); ++i) state->task_index[s.tasks[i].task_id] = i;
  state->records.resize(s.annotators.size());

  std::ifstream journal(fs::path(dir) / "journal.jsonl", std::ios::binary);
  std::size_t line_no = 0;
  while (std::getline(journal, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto r = parse_record(line);
      const auto it = std::find(s.annotators.begin(), s.annotators.end(), r.annotator_id);
      if (it == s.annotators.end() || !state->task_index.count(r.task_id)) {
        throw ServiceError(ServiceError::Kind::BadRequest, "unknown task or annotator");
      }
      apply(*state, r, static_cast<std::size_t>(it - s.annotators.begin()));
    } catch (const ServiceError& e) {
      spdlog::warn("{}/journal.jsonl:{}: ignored entry: {}", dir, line_no, e.what());
    }
  }
  const auto id = s.id;
  sessions_[id] = std::move(state);
}

bool AnnotationStore::apply(SessionState& s, const AnnotationRecord& r, std::size_t annotator) {
  auto& slot = s.records[annotator];
  auto it = slot.find(r.task_id);
  if (it != slot.end() && r.timestamp < it->second.timestamp) return false;
  slot[r.task_id] = r;
  return true;
}

Session AnnotationStore::create_session(const std::string& run_path, const std::vector<std::string>& annotators) {
  fs::path p(run_path);
  if (fs::is_directory(p)) p /= "mentions.bioc.xml";
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ServiceError(ServiceError::Kind::BadRequest, "cannot read run output " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<AnnotationTask> tasks;
  try {
    tasks = tasks_from_bioc(parse_bioc(ss.str()));
  } catch (const FormatError& e) {
    throw ServiceError(ServiceError::Kind::BadRequest, e.what());
  }
  return create_session(std::move(tasks), annotators, fs::absolute(p).lexically_normal().string());
}

Session AnnotationStore::create_session(std::vector<AnnotationTask> tasks, const std::vector<std::string>& annotators,
                                        const std::string& source) {
  if (tasks.empty()) throw ServiceError(ServiceError::Kind::EmptyRun, "run has no mentions");
  if (annotators.empty()) throw ServiceError(ServiceError::Kind::BadRequest, "at least one annotator is required");
  std::set<std::string> unique(annotators.begin(), annotators.end());
  if (unique.size() != annotators.size() || unique.count("")) {
    throw ServiceError(ServiceError::Kind::BadRequest, "annotator ids must be distinct and non-empty");
  }
  std::stable_sort(tasks.begin(), tasks.end(), [](const AnnotationTask& a, const AnnotationTask& b) {
    return std::tie(a.note_id, a.mention.start, a.mention.end) < std::tie(b.note_id, b.mention.start, b.mention.end);
  });
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (!ids.insert(t.task_id).second) throw ServiceError(ServiceError::Kind::BadRequest, "duplicate task " + t.task_id);
  }

  std::string tasks_jsonl;
  for (const auto& t : tasks) tasks_jsonl += task_json(t).dump() + "\n";
  std::string key = tasks_jsonl;
  for (const auto& a : annotators) key += "\x1f" + a;
  const auto id = sha256_hex(key).substr(0, 16);

  std::unique_lock lock(mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second->session;

  const auto dir = fs::path(data_dir_) / "sessions" / id;
  fs::create_directories(dir);
  write_file_atomically(dir / "tasks.jsonl", tasks_jsonl);
  if (!fs::exists(dir / "journal.jsonl")) std::ofstream(dir / "journal.jsonl", std::ios::binary);

  auto state = std::make_unique<SessionState>();
  state->dir = dir.string();
  auto& s = state->session;
  s.id = id;
  s.source = source;
  s.annotators = annotators;
  s.tasks = std::move(tasks);
  s.created_at = utc_timestamp();
  for (std::size_t i = 0; i < s.tasks.size(); ++i) state->task_index[s.tasks[i].task_id] = i;
  state->records.resize(annotators.size());

  json meta;
  meta["id"] = s.id;
  meta["source"] = s.source;
  meta["annotators"] = s.annotators;
  meta["created_at"] = s.created_at;
  meta["tasks"] = s.tasks.size();
  write_file_atomically(dir / "session.json", meta.dump(2) + "\n");

  auto copy = s;
  sessions_[id] = std::move(state);
  return copy;
}

const AnnotationStore::SessionState& AnnotationStore::state(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(ServiceError::Kind::UnknownSession, "unknown session " + id);
  return *it->second;
}

std::vector<std::string> AnnotationStore::session_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

Session AnnotationStore::session(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return state(id).session;
}

std::size_t AnnotationStore::record_count(const std::string& id) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& r : state(id).records) n += r.size();
  return n;
}

std::map<std::string, std::size_t> AnnotationStore::progress(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto& s = state(id);
  std::map<std::string, std::size_t> out;
  for (std::size_t a = 0; a < s.session.annotators.size(); ++a) out[s.session.annotators[a]] = s.records[a].size();
  return out;
}

SubmitResult AnnotationStore::submit(const std::string& session_id, AnnotationRecord record) {
  if (record.related && !record.status) {
    throw ServiceError(ServiceError::Kind::MissingStatus, "a related mention needs a status");
  }
  if (!record.related && record.status) {
    throw ServiceError(ServiceError::Kind::MissingStatus, "an unrelated mention must not carry a status");
  }
  if (record.timestamp.empty()) record.timestamp = utc_timestamp();

  std::unique_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(ServiceError::Kind::UnknownSession, "unknown session " + session_id);
  auto& s = *it->second;
  if (!s.task_index.count(record.task_id)) {
    throw ServiceError(ServiceError::Kind::UnknownTask, "unknown task " + record.task_id);
  }
  const auto& ann = s.session.annotators;
  const auto pos = std::find(ann.begin(), ann.end(), record.annotator_id);
  if (pos == ann.end()) throw ServiceError(ServiceError::Kind::UnknownAnnotator, "unknown annotator " + record.annotator_id);
  const auto a = static_cast<std::size_t>(pos - ann.begin());

  auto& slot = s.records[a];
  if (auto cur = slot.find(record.task_id); cur != slot.end()) {
    const auto& c = cur->second;
    if ((c.related == record.related && c.status == record.status) || record.timestamp < c.timestamp) {
      return {false, c};
    }
  }
  append_durably((fs::path(s.dir) / "journal.jsonl").string(), record_json(record) + "\n");
  apply(s, record, a);
  return {true, record};
}

std::optional<AnnotationRecord> AnnotationStore::record(const std::string& session_id, const std::string& task_id,
                                                        const std::string& annotator) const {
  std::shared_lock lock(mutex_);
  const auto& s = state(session_id);
  const auto& ann = s.session.annotators;
  const auto pos = std::find(ann.begin(), ann.end(), annotator);
  if (pos == ann.end()) throw ServiceError(ServiceError::Kind::UnknownAnnotator, "unknown annotator " + annotator);
  const auto& slot = s.records[static_cast<std::size_t>(pos - ann.begin())];
  auto it = slot.find(task_id);
  if (it == slot.end()) return std::nullopt;
  return it->second;
}

AgreementReport AnnotationStore::agreement(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  const auto& s = state(session_id);
  return compute_agreement(s.session, s.records);
}

GoldSet AnnotationStore::gold(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  const auto& s = state(session_id);
  return export_gold(s.session, s.records);
}

// ---- HTTP ----

namespace {

int http_status(ServiceError::Kind k) {
  switch (k) {
    case ServiceError::Kind::UnknownSession:
    case ServiceError::Kind::UnknownTask: return 404;
    case ServiceError::Kind::IncompleteSession: return 409;
    case ServiceError::Kind::UnknownAnnotator:
    case ServiceError::Kind::MissingStatus:
    case ServiceError::Kind::EmptyRun: return 422;
    case ServiceError::Kind::BadRequest: return 400;
  }
  return 500;
}

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_json(res, {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}, http_status(e.kind()));
    } catch (const json::exception& e) {
      send_json(res, {{"error", "BadRequest"}, {"message", e.what()}}, 400);
    } catch (const std::exception& e) {
      spdlog::error("request {} {} failed: {}", req.method, req.path, e.what());
      send_json(res, {{"error", "Internal"}, {"message", e.what()}}, 500);
    }
  };
}

json session_summary(const AnnotationStore& store, const Session& s) {
  json j;
  j["id"] = s.id;
  j["source"] = s.source;
  j["annotators"] = s.annotators;
  j["tasks"] = s.tasks.size();
  j["created_at"] = s.created_at;
  j["progress"] = store.progress(s.id);
  return j;
}

std::size_t query_count(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ServiceError(ServiceError::Kind::BadRequest, std::string("query parameter '") + key + "' must be a count");
  }
}

}  // namespace

AnnotateServer::AnnotateServer(AnnotationStore& store, ServerOptions options)
    : store_(store), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

AnnotateServer::~AnnotateServer() = default;

void AnnotateServer::routes() {
  auto& srv = *server_;
  auto& store = store_;

  srv.Get("/api/sessions", guarded([&store](const httplib::Request&, httplib::Response& res) {
            auto list = json::array();
            for (const auto& id : store.session_ids()) list.push_back(session_summary(store, store.session(id)));
            send_json(res, list);
          }));

  srv.Post("/api/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
             const auto body = json::parse(req.body);
             std::string run;
             if (body.contains("run")) run = body["run"].get<std::string>();
             else if (body.contains("run_path")) run = body["run_path"].get<std::string>();
             else throw ServiceError(ServiceError::Kind::BadRequest, "body needs 'run'");
             const auto annotators = body.at("annotators").get<std::vector<std::string>>();
             const auto before = store.session_ids().size();
             const auto s = store.create_session(run, annotators);
             send_json(res, session_summary(store, s), store.session_ids().size() > before ? 201 : 200);
           }));

  srv.Get(R"(/api/sessions/([^/]+)/tasks)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
            const auto id = req.matches[1].str();
            const auto s = store.session(id);
            const auto cursor = query_count(req, "cursor", 0);
            const auto limit = std::clamp<std::size_t>(query_count(req, "limit", 50), 1, 1000);
            std::optional<std::string> annotator;
            if (req.has_param("annotator")) annotator = req.get_param_value("annotator");
            json j;
            j["session_id"] = id;
            j["total"] = s.tasks.size();
            j["cursor"] = cursor;
            auto tasks = json::array();
            const auto end = std::min(s.tasks.size(), cursor + limit);
            for (std::size_t i = std::min(cursor, s.tasks.size()); i < end; ++i) {
              auto tj = task_json(s.tasks[i]);
              if (annotator) {
                const auto r = store.record(id, s.tasks[i].task_id, *annotator);
                tj["record"] = r ? record_to_json(*r) : json(nullptr);
              }
              tasks.push_back(std::move(tj));
            }
            j["tasks"] = std::move(tasks);
            j["next_cursor"] = end < s.tasks.size() ? json(end) : json(nullptr);
            send_json(res, j);
          }));

  srv.Post("/api/annotations", guarded([&store](const httplib::Request& req, httplib::Response& res) {
             const auto body = json::parse(req.body);
             if (!body.contains("session_id")) throw ServiceError(ServiceError::Kind::BadRequest, "body needs 'session_id'");
             const auto session_id = body["session_id"].get<std::string>();
             const auto result = store.submit(session_id, parse_record(req.body));
             send_json(res, {{"ok", true}, {"changed", result.changed}, {"record", record_to_json(result.stored)}});
           }));

  srv.Get(R"(/api/sessions/([^/]+)/agreement)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
            const auto rep = store.agreement(req.matches[1].str());
            json j;
            j["annotators"] = rep.annotators;
            j["tasks"] = rep.tasks;
            j["kappa"] = rep.kappa_binary ? json(*rep.kappa_binary) : json(nullptr);
            j["kappa_related"] = rep.kappa_related;
            j["kappa_binary"] = rep.kappa_binary ? json(*rep.kappa_binary) : json(nullptr);
            j["kappa_status"] = rep.kappa_status ? json(*rep.kappa_status) : json(nullptr);
            auto dis = json::array();
            for (const auto& d : rep.disagreements) dis.push_back({{"task_id", d.task_id}, {"reason", d.reason}});
            j["disagreements"] = std::move(dis);
            send_json(res, j);
          }));

  srv.Get(R"(/api/sessions/([^/]+)/gold)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
            const auto id = req.matches[1].str();
            const auto gold = store.gold(id);
            std::string body;
            for (const auto& g : gold.entries) body += gold_jsonl_line(g) + "\n";
            res.set_header("Content-Disposition", "attachment; filename=\"gold-" + id + ".jsonl\"");
            res.set_header("X-Gold-Total", std::to_string(gold.total));
            res.set_header("X-Gold-Removed", std::to_string(gold.removed));
            res.set_content(body, "application/x-ndjson");
          }));

  if (!options_.static_dir.empty()) {
    if (!srv.set_mount_point("/", options_.static_dir)) {
      spdlog::warn("static directory {} not found; serving the API only", options_.static_dir);
    }
  }
}

int AnnotateServer::bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
    if (port < 0) throw std::runtime_error("cannot bind " + options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", options_.host, port));
  }
  return port;
}

void AnnotateServer::listen() { server_->listen_after_bind(); }

void AnnotateServer::stop() { server_->stop(); }

}  // namespace symscribe
