#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>

#include "symscribe/assertion.hpp"

namespace symscribe {

class RemoteError : public std::runtime_error {
 public:
  enum class Kind { Timeout, Transport, MalformedResponse };
  RemoteError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Client for an external assertion classifier.
//
// Wire protocol: POST <endpoint>/classify with
//   {"sentence": string, "start": int, "end": int}
// where offsets are Unicode scalar offsets into the sentence, answered by
//   {"label": "present"|"absent"|"hypothetical"|"past"|"other", "score": float in [0,1]}.
class RemoteClassifier {
 public:
  struct Options {
    std::chrono::milliseconds timeout{2000};
    std::ptrdiff_t max_in_flight = 8;
  };

  explicit RemoteClassifier(std::string endpoint);
  RemoteClassifier(std::string endpoint, Options options);

  const std::string& endpoint() const { return endpoint_; }

  // Throws RemoteError.
  AssertionResult classify(std::string_view sentence_utf8, Span mention) const;

  // Falls back to the rule engine on any RemoteError and counts the fallback.
  AssertionResult classify_or_fallback(const AssertionEngine& engine, std::u32string_view sentence,
                                       Span mention) const;

  std::size_t fallback_count() const { return fallbacks_.load(); }
  std::size_t request_count() const { return requests_.load(); }

 private:
  std::string endpoint_;
  std::string host_;
  int port_ = 80;
  std::string base_path_;
  Options options_;
  mutable std::unique_ptr<std::counting_semaphore<>> in_flight_;
  mutable std::atomic<std::size_t> fallbacks_{0};
  mutable std::atomic<std::size_t> requests_{0};
};

// Parses a classifier response body; throws RemoteError(MalformedResponse).
AssertionResult parse_classifier_response(std::string_view body);
std::string make_classifier_request(std::string_view sentence_utf8, Span mention);

}  // namespace symscribe
