#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "oocheck/backend.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/evidence.hpp"

namespace oocheck::backend {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
};

/// Runs `fn`, retrying only on TransportError with exponential backoff
/// (initial, 2x initial, ...). Any other exception propagates immediately.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn,
                  const std::function<void(std::chrono::milliseconds)>& sleep) -> decltype(fn()) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.attempts) throw;
      sleep(delay);
      delay *= 2;
    }
  }
}

struct HttpEndpoint {
  std::string id;
  std::string url;    ///< e.g. https://api.example.com/v1/chat/completions
  std::string model;
  std::string auth_header = "Authorization";
  std::string auth_scheme = "Bearer";
  std::string token_env;  ///< name of the environment variable holding the token
  /// JSON pointer to the completion text (or embedding array) in the response.
  std::string response_path = "/choices/0/message/content";
  int timeout_seconds = 120;
  RetryPolicy retry;
};

/// Request body in chat-completion form; local images are inlined as base64.
nlohmann::json build_completion_body(const CompletionRequest& request);

/// Reads the string at `pointer`; throws TransportError if it is missing.
std::string extract_completion_text(const nlohmann::json& body, const std::string& pointer);

/// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

class HttpCompletionBackend final : public CompletionBackend {
 public:
  explicit HttpCompletionBackend(HttpEndpoint endpoint);

  std::string id() const override { return endpoint_.id; }
  std::size_t network_calls() const override { return calls_.load(); }
  CompletionResponse complete(const CompletionRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  std::atomic<std::size_t> calls_{0};
};

/// POSTs {"model", "input"} and reads the vector at endpoint.response_path
/// (default for this class: /data/0/embedding).
class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(HttpEndpoint endpoint);

  std::string id() const override { return endpoint_.id; }
  EmbeddingVector embed(std::string_view text) override;

 private:
  HttpEndpoint endpoint_;
};

/// POSTs {"model", "image": {"data"|"url"}} and reads an array of
/// {"name", "score"} objects at endpoint.response_path (default: /entities).
class HttpEntityClient final : public EntityClient {
 public:
  explicit HttpEntityClient(HttpEndpoint endpoint);

  std::string id() const override { return endpoint_.id; }
  std::vector<DetectedEntity> detect(const std::string& image) override;

 private:
  HttpEndpoint endpoint_;
};

namespace detail {
/// POST `body` as JSON and return the parsed response, with retries.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);
}  // namespace detail

}  // namespace oocheck::backend
