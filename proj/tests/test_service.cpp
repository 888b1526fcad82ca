#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <functional>
#include <regex>
#include <thread>

#include "support.hpp"
#include "symscribe/annotate_service.hpp"
#include "symscribe/pipeline.hpp"

using namespace symscribe;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

AnnotationRecord rec(const std::string& task, const std::string& who, std::optional<AssertionStatus> status,
                     bool related = true, std::string ts = "") {
  return {task, who, related, status, std::move(ts)};
}

ServiceError::Kind service_error(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ServiceError";
  return ServiceError::Kind::BadRequest;
}

// A demo run directory shared by the tests that need one.
const fs::path& demo_run() {
  static const fs::path dir = [] {
    auto d = support::temp_dir("svc-run");
    run_pipeline(support::demo_config(d), support::data_path("demo_notes.csv"));
    return d;
  }();
  return dir;
}

class Running {
 public:
  explicit Running(AnnotationStore& store) : server_(store, {"127.0.0.1", 0, ""}) {
    port_ = server_.bind();
    thread_ = std::thread([this] { server_.listen(); });
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

 private:
  AnnotateServer server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Session, TasksFromRun) {
  AnnotationStore store(support::temp_dir("svc").string());
  const auto s = store.create_session(demo_run().string(), {"ann1", "ann2"});
  const auto outputs = read_jsonl((demo_run() / "mentions.jsonl").string());
  std::size_t mentions = 0;
  for (const auto& o : outputs) mentions += o.mentions.size();
  ASSERT_EQ(s.tasks.size(), mentions);
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const auto& t = s.tasks[i];
    EXPECT_FALSE(t.context_passage.empty());
    const auto passage = utf8::decode(t.context_passage);
    ASSERT_LE(t.highlight.end, passage.size());
    EXPECT_EQ(utf8::encode(std::u32string_view(passage).substr(t.highlight.start, t.highlight.length())),
              t.mention_text);
    if (i > 0) {
      const auto& p = s.tasks[i - 1];
      EXPECT_TRUE(std::tie(p.note_id, p.mention.start) < std::tie(t.note_id, t.mention.start));
    }
  }
}

TEST(Session, CreateIsIdempotent) {
  AnnotationStore store(support::temp_dir("svc").string());
  const auto a = store.create_session(demo_run().string(), {"ann1", "ann2"});
  const auto b = store.create_session(demo_run().string(), {"ann1", "ann2"});
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.tasks, b.tasks);
  EXPECT_EQ(store.session_ids().size(), 1u);
  const auto c = store.create_session(demo_run().string(), {"ann1", "ann3"});
  EXPECT_NE(c.id, a.id);
}

TEST(Session, EmptyRunRejected) {
  const auto dir = support::temp_dir("svc-empty");
  support::write_text(dir / "notes.csv", "note_id,site_id,text\n1,a,nothing here\n");
  run_pipeline(support::demo_config(dir / "run"), (dir / "notes.csv").string());
  AnnotationStore store((dir / "data").string());
  EXPECT_EQ(service_error([&] { store.create_session((dir / "run").string(), {"a"}); }), ServiceError::Kind::EmptyRun);
  EXPECT_EQ(service_error([&] { store.create_session(std::vector<AnnotationTask>{}, {"a"}, "x"); }),
            ServiceError::Kind::EmptyRun);
}

TEST(Submit, ValidationErrors) {
  AnnotationStore store(support::temp_dir("svc").string());
  const auto s = store.create_session(support::synthetic_session(3).tasks, {"ann1", "ann2"}, "synthetic");
  const auto task = s.tasks[0].task_id;
  EXPECT_EQ(service_error([&] { store.submit(s.id, rec(task, "ann1", std::nullopt)); }),
            ServiceError::Kind::MissingStatus);
  EXPECT_EQ(service_error([&] { store.submit(s.id, rec(task, "ann1", AssertionStatus::Absent, false)); }),
            ServiceError::Kind::MissingStatus);
  EXPECT_EQ(service_error([&] { store.submit(s.id, rec("nope:0-1", "ann1", AssertionStatus::Present)); }),
            ServiceError::Kind::UnknownTask);
  EXPECT_EQ(service_error([&] { store.submit(s.id, rec(task, "mallory", AssertionStatus::Present)); }),
            ServiceError::Kind::UnknownAnnotator);
  EXPECT_EQ(service_error([&] { store.submit("nosuch", rec(task, "ann1", AssertionStatus::Present)); }),
            ServiceError::Kind::UnknownSession);
  EXPECT_EQ(store.record_count(s.id), 0u);
}

TEST(Submit, LatestWinsAndIdempotent) {
  const auto dir = support::temp_dir("svc");
  AnnotationStore store(dir.string());
  const auto s = store.create_session(support::synthetic_session(3).tasks, {"ann1", "ann2"}, "synthetic");
  const auto task = s.tasks[1].task_id;
  EXPECT_TRUE(store.submit(s.id, rec(task, "ann1", AssertionStatus::Present, true, "2024-01-01T00:00:00Z")).changed);
  EXPECT_FALSE(store.submit(s.id, rec(task, "ann1", AssertionStatus::Present, true, "2024-01-01T00:00:00Z")).changed);
  EXPECT_TRUE(store.submit(s.id, rec(task, "ann1", AssertionStatus::Past, true, "2024-01-02T00:00:00Z")).changed);
  EXPECT_FALSE(store.submit(s.id, rec(task, "ann1", AssertionStatus::Absent, true, "2023-12-31T00:00:00Z")).changed);
  EXPECT_EQ(store.record(s.id, task, "ann1")->status, AssertionStatus::Past);
  EXPECT_EQ(store.record_count(s.id), 1u);
  EXPECT_FALSE(store.record(s.id, task, "ann2"));

  const auto journal = read_file((dir / "sessions" / s.id / "journal.jsonl").string());
  EXPECT_EQ(std::count(journal.begin(), journal.end(), '\n'), 2);
}

TEST(Submit, ServerClockWhenTimestampEmpty) {
  AnnotationStore store(support::temp_dir("svc").string());
  const auto s = store.create_session(support::synthetic_session(1).tasks, {"ann1"}, "synthetic");
  const auto r = store.submit(s.id, rec(s.tasks[0].task_id, "ann1", AssertionStatus::Present));
  EXPECT_TRUE(std::regex_match(r.stored.timestamp, std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\d(\.\d{3})?Z)")))
      << r.stored.timestamp;
}

TEST(Store, RecoversAfterRestart) {
  const auto dir = support::temp_dir("svc");
  std::string id;
  {
    AnnotationStore store(dir.string());
    const auto s = store.create_session(support::synthetic_session(30).tasks, {"ann1", "ann2"}, "synthetic");
    id = s.id;
    for (const auto& t : s.tasks) {
      store.submit(id, rec(t.task_id, "ann1", AssertionStatus::Present));
      store.submit(id, rec(t.task_id, "ann2", std::nullopt, false));
    }
  }
  // A torn final line must not lose the records before it.
  {
    std::ofstream j(dir / "sessions" / id / "journal.jsonl", std::ios::app);
    j << "{\"task_id\":\"n0000:0-7\",\"annot";
  }
  AnnotationStore again(dir.string());
  EXPECT_EQ(again.record_count(id), 60u);
  EXPECT_EQ(again.progress(id).at("ann1"), 30u);
  EXPECT_FALSE(again.record(id, again.session(id).tasks[0].task_id, "ann2")->related);
}

TEST(Agreement, IdenticalAnnotations) {
  const auto s = support::synthetic_session(10);
  const auto rep = compute_agreement(s, support::fixture_records(s, 0, 0));
  EXPECT_EQ(rep.kappa_binary, 1.0);
  EXPECT_TRUE(rep.disagreements.empty());
}

TEST(Agreement, HalfKappaFixture) {
  const auto s = support::synthetic_session(4);
  support::RecordSets r(2);
  const AssertionStatus a[] = {AssertionStatus::Present, AssertionStatus::Present, AssertionStatus::Absent,
                               AssertionStatus::Absent};
  const AssertionStatus b[] = {AssertionStatus::Present, AssertionStatus::Absent, AssertionStatus::Absent,
                               AssertionStatus::Absent};
  for (std::size_t i = 0; i < 4; ++i) {
    r[0][s.tasks[i].task_id] = rec(s.tasks[i].task_id, "ann1", a[i]);
    r[1][s.tasks[i].task_id] = rec(s.tasks[i].task_id, "ann2", b[i]);
  }
  const auto rep = compute_agreement(s, r);
  ASSERT_TRUE(rep.kappa_binary);
  EXPECT_NEAR(*rep.kappa_binary, 0.5, 1e-12);
  ASSERT_EQ(rep.disagreements.size(), 1u);
  EXPECT_EQ(rep.disagreements[0].task_id, s.tasks[1].task_id);
  EXPECT_EQ(rep.disagreements[0].reason, "status_conflict");
}

TEST(Agreement, IncompleteSession) {
  const auto s = support::synthetic_session(4);
  auto r = support::fixture_records(s, 0, 0);
  r[1].erase(s.tasks[2].task_id);
  EXPECT_EQ(service_error([&] { compute_agreement(s, r); }), ServiceError::Kind::IncompleteSession);
  EXPECT_EQ(service_error([&] { export_gold(s, r); }), ServiceError::Kind::IncompleteSession);
}

TEST(Gold, RemovalArithmetic) {
  const auto s = support::synthetic_session(2301);
  const auto g = export_gold(s, support::fixture_records(s, 20, 4));
  EXPECT_EQ(g.total, 2301u);
  EXPECT_EQ(g.removed, 24u);
  EXPECT_EQ(g.entries.size(), 2277u);
  EXPECT_EQ(g.annotators, s.annotators);
  ASSERT_TRUE(g.kappa);
}

TEST(Gold, AllAgreedAndAllUnrelated) {
  const auto s = support::synthetic_session(12);
  const auto agreed = export_gold(s, support::fixture_records(s, 0, 0));
  EXPECT_EQ(agreed.removed, 0u);
  EXPECT_EQ(agreed.entries.size(), 12u);
  for (const auto& e : agreed.entries) EXPECT_EQ(e.label, BinaryAssertion::Positive);

  const auto unrelated = export_gold(s, support::fixture_records(s, 0, 12));
  EXPECT_TRUE(unrelated.entries.empty());
  EXPECT_EQ(unrelated.removed, unrelated.total);
}

TEST(Gold, SubsetOfSessionMentions) {
  const auto s = support::synthetic_session(40);
  const auto g = export_gold(s, support::fixture_records(s, 3, 5));
  EXPECT_EQ(g.entries.size() + g.removed, g.total);
  for (const auto& e : g.entries) {
    EXPECT_TRUE(std::any_of(s.tasks.begin(), s.tasks.end(), [&](const AnnotationTask& t) {
      return t.note_id == e.key.note_id && t.mention == e.key.span;
    }));
  }
}

TEST(Record, JsonRoundTrip) {
  const auto r = rec("n:1-2", "ann1", AssertionStatus::Hypothetical, true, "2024-01-01T00:00:00Z");
  EXPECT_EQ(parse_record(record_json(r)), r);
  const auto u = rec("n:1-2", "ann1", std::nullopt, false, "2024-01-01T00:00:00Z");
  EXPECT_EQ(parse_record(record_json(u)), u);
  EXPECT_EQ(service_error([] { parse_record("{"); }), ServiceError::Kind::BadRequest);
  EXPECT_EQ(service_error([] { parse_record(R"({"task_id":"x","annotator_id":"a","related":true,"status":"meh"})"); }),
            ServiceError::Kind::BadRequest);
}

TEST(Http, EndToEnd) {
  AnnotationStore store(support::temp_dir("http").string());
  Running server(store);
  auto c = server.client();

  const json create = {{"run_path", demo_run().string()}, {"annotators", {"ann1", "ann2"}}};
  auto res = c.Post("/api/sessions", create.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const auto id = json::parse(res->body)["id"].get<std::string>();
  res = c.Post("/api/sessions", create.dump(), "application/json");
  EXPECT_EQ(res->status, 200);

  res = c.Get("/api/sessions");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).size(), 1u);

  res = c.Get("/api/sessions/" + id + "/tasks?annotator=ann1&limit=5");
  ASSERT_EQ(res->status, 200);
  auto page = json::parse(res->body);
  ASSERT_EQ(page["tasks"].size(), 5u);
  EXPECT_EQ(page["next_cursor"], 5);
  EXPECT_TRUE(page["tasks"][0]["record"].is_null());
  const auto task = page["tasks"][0]["task_id"].get<std::string>();

  json sub = {{"session_id", id}, {"task_id", task}, {"annotator_id", "ann1"}, {"related", true}, {"status", "present"}};
  res = c.Post("/api/annotations", sub.dump(), "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_TRUE(json::parse(res->body)["changed"].get<bool>());

  res = c.Get("/api/sessions/" + id + "/tasks?annotator=ann1&limit=1");
  EXPECT_EQ(json::parse(res->body)["tasks"][0]["record"]["status"], "present");
  res = c.Get("/api/sessions/" + id + "/tasks?annotator=ann2&limit=1");
  EXPECT_TRUE(json::parse(res->body)["tasks"][0]["record"].is_null());

  sub.erase("status");
  res = c.Post("/api/annotations", sub.dump(), "application/json");
  EXPECT_EQ(res->status, 422);
  sub["task_id"] = "nope:1-2";
  sub["status"] = "present";
  res = c.Post("/api/annotations", sub.dump(), "application/json");
  EXPECT_EQ(res->status, 404);
  res = c.Post("/api/annotations", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
  res = c.Get("/api/sessions/nosuch/tasks");
  EXPECT_EQ(res->status, 404);
  res = c.Get("/api/sessions/" + id + "/tasks?cursor=abc");
  EXPECT_EQ(res->status, 400);

  res = c.Get("/api/sessions/" + id + "/agreement");
  EXPECT_EQ(res->status, 409);
  res = c.Get("/api/sessions/" + id + "/gold");
  EXPECT_EQ(res->status, 409);
}

TEST(Http, AgreementAndGoldDownload) {
  AnnotationStore store(support::temp_dir("http").string());
  const auto s = store.create_session(support::synthetic_session(10).tasks, {"ann1", "ann2"}, "synthetic");
  const auto records = support::fixture_records(s, 1, 1);
  for (std::size_t a = 0; a < 2; ++a)
    for (const auto& [task, r] : records[a]) store.submit(s.id, r);

  Running server(store);
  auto c = server.client();
  auto res = c.Get("/api/sessions/" + s.id + "/agreement");
  ASSERT_EQ(res->status, 200);
  const auto j = json::parse(res->body);
  EXPECT_EQ(j["disagreements"].size(), 2u);
  EXPECT_EQ(j["tasks"], 10);

  res = c.Get("/api/sessions/" + s.id + "/gold");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("X-Gold-Total"), "10");
  EXPECT_EQ(res->get_header_value("X-Gold-Removed"), "2");
  EXPECT_EQ(std::count(res->body.begin(), res->body.end(), '\n'), 8);
  const auto first = parse_gold_line(res->body.substr(0, res->body.find('\n')));
  EXPECT_EQ(first.label, BinaryAssertion::Positive);
}

TEST(Http, ServesStaticAssets) {
  const auto dir = support::temp_dir("static");
  support::write_text(dir / "ui" / "index.html", "<html>ui</html>");
  AnnotationStore store((dir / "data").string());
  AnnotateServer server(store, {"127.0.0.1", 0, (dir / "ui").string()});
  const int port = server.bind();
  std::thread t([&] { server.listen(); });
  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/index.html");
  server.stop();
  t.join();
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, "<html>ui</html>");
}
