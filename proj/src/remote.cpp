#include "symscribe/remote.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

namespace symscribe {

using json = nlohmann::json;

RemoteClassifier::RemoteClassifier(std::string endpoint) : RemoteClassifier(std::move(endpoint), Options{}) {}

RemoteClassifier::RemoteClassifier(std::string endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(options) {
  std::string_view rest = endpoint_;
  constexpr std::string_view kScheme = "http://";
  if (rest.substr(0, kScheme.size()) == kScheme) {
    rest.remove_prefix(kScheme.size());
  } else if (rest.find("://") != std::string_view::npos) {
    throw std::invalid_argument("only http:// classifier endpoints are supported: " + endpoint_);
  }
  auto slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) base_path_ = std::string(rest.substr(slash));
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    host_ = std::string(authority.substr(0, colon));
    port_ = std::stoi(std::string(authority.substr(colon + 1)));
  } else {
    host_ = std::string(authority);
  }
  if (host_.empty()) throw std::invalid_argument("classifier endpoint has no host: " + endpoint_);
  in_flight_ = std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, options_.max_in_flight));
}

std::string make_classifier_request(std::string_view sentence_utf8, Span mention) {
  return json{{"sentence", sentence_utf8}, {"start", mention.start}, {"end", mention.end}}.dump();
}

AssertionResult parse_classifier_response(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw RemoteError(RemoteError::Kind::MalformedResponse, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
    throw RemoteError(RemoteError::Kind::MalformedResponse, "response lacks a string 'label'");
  }
  auto status = parse_status(j["label"].get<std::string>());
  if (!status) {
    throw RemoteError(RemoteError::Kind::MalformedResponse, "unknown label '" + j["label"].get<std::string>() + "'");
  }
  AssertionResult r;
  r.status = *status;
  r.binary = collapse(*status);
  r.engine = Engine::RemoteClassifier;
  if (j.contains("score")) {
    if (!j["score"].is_number()) throw RemoteError(RemoteError::Kind::MalformedResponse, "'score' is not a number");
    const double score = j["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      throw RemoteError(RemoteError::Kind::MalformedResponse, "'score' outside [0,1]");
    }
    r.score = score;
  }
  return r;
}

AssertionResult RemoteClassifier::classify(std::string_view sentence_utf8, Span mention) const {
  struct Slot {
    std::counting_semaphore<>& sem;
    explicit Slot(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
  } slot(*in_flight_);

  ++requests_;
  httplib::Client client(host_, port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  auto res = client.Post(base_path_ + "/classify", make_classifier_request(sentence_utf8, mention),
                         "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
                          ? RemoteError::Kind::Timeout
                          : RemoteError::Kind::Transport;
    throw RemoteError(kind, "classifier request failed: " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw RemoteError(RemoteError::Kind::MalformedResponse, "classifier returned HTTP " + std::to_string(res->status));
  }
  return parse_classifier_response(res->body);
}

AssertionResult RemoteClassifier::classify_or_fallback(const AssertionEngine& engine, std::u32string_view sentence,
                                                       Span mention) const {
  try {
    return classify(utf8::encode(sentence), mention);
  } catch (const RemoteError& e) {
    ++fallbacks_;
    spdlog::warn("remote classifier fallback: {}", e.what());
    return engine.assess(sentence, mention);
  }
}

}  // namespace symscribe
