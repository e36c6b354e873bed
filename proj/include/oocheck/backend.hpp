#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace oocheck::backend {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);

struct Message {
  Role role = Role::User;
  std::string text;
  std::optional<std::string> image;  ///< only on user messages
};

inline constexpr double kDefaultTemperature = 0.0;
inline constexpr int kDefaultMaxTokens = 256;

struct CompletionRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = kDefaultTemperature;
  int max_tokens = kDefaultMaxTokens;

  /// Throws PreconditionError on an empty message list, an image on a
  /// non-user message, more than one image, negative temperature or
  /// non-positive max_tokens.
  void validate() const;

  /// The single attached image, if any.
  std::optional<std::string> image() const;
};

struct CompletionResponse {
  std::string text;
  std::string backend_id;
  bool cached = false;
  std::uint64_t latency_ms = 0;
};

/// A chat (text-only) or vision (image + text) completion endpoint.
/// Implementations must be callable from several threads at once.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  virtual std::string id() const = 0;
  /// Requests that reached the model itself; cache hits are not counted.
  virtual std::size_t network_calls() const = 0;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

/// Validates the request, then forwards to the backend.
CompletionResponse complete(CompletionBackend& backend, const CompletionRequest& request);

/// Hex SHA-256 over backend id, model id, every message role/text/image
/// content digest, temperature and max_tokens. Throws ImageUnavailable when an
/// attached local image cannot be read.
std::string cache_key(std::string_view backend_id, const CompletionRequest& request);

/// Deterministic mock: an ordered list of substring rules, first match wins.
/// The haystack is every message text joined with newlines.
class ScriptedBackend final : public CompletionBackend {
 public:
  enum class Fault { None, Transport, Refused };

  struct Rule {
    std::string match;
    std::string response;
    Fault fault = Fault::None;
  };

  ScriptedBackend(std::string id, std::vector<Rule> rules, std::optional<std::string> fallback = std::nullopt);

  /// {"id": str, "rules": [{"match": str, "response": str, "fault": "transport"|"refused"}], "default": str?}
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& script);
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  std::size_t network_calls() const override { return calls_.load(); }
  CompletionResponse complete(const CompletionRequest& request) override;

  /// Every request seen so far, in arrival order.
  std::vector<CompletionRequest> requests() const;

 private:
  std::string id_;
  std::vector<Rule> rules_;
  std::optional<std::string> fallback_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex log_mutex_;
  std::vector<CompletionRequest> log_;
};

/// One file per key: <dir>/<first two hex chars>/<digest>.json holding
/// {request_digest, response_text, created_at, backend_id}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path_for(std::string_view digest) const;

  std::optional<std::string> get(std::string_view digest) const;
  /// Write-then-rename; a key that already exists is left untouched.
  /// Returns false when the entry was already present.
  bool put(std::string_view digest, std::string_view response_text, std::string_view backend_id);

 private:
  std::filesystem::path dir_;
};

/// Serves repeated requests from a ResponseCache. Concurrent requests for the
/// same key are serialized so the inner backend sees each key at most once.
class CachedBackend final : public CompletionBackend {
 public:
  CachedBackend(std::shared_ptr<CompletionBackend> inner, std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  std::size_t network_calls() const override { return inner_->network_calls(); }
  CompletionResponse complete(const CompletionRequest& request) override;

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 private:
  std::shared_ptr<std::mutex> key_lock(const std::string& key);

  std::shared_ptr<CompletionBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::mutex locks_mutex_;
  std::unordered_map<std::string, std::shared_ptr<std::mutex>> locks_;
};

// Embeddings

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
};

/// cos(u, v) = <u, v> / (|u| |v|); 0 when either vector is zero.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  /// Throws EmptyText when `text` is empty after trimming.
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Hashed bag-of-words: lowercase alphanumeric tokens are hashed (FNV-1a 64)
/// into `dim` buckets and the count vector is L2-normalized.
class HashingEmbedder final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDefaultDim = 256;

  explicit HashingEmbedder(std::size_t dim = kDefaultDim);

  std::string id() const override;
  EmbeddingVector embed(std::string_view text) override;

  std::size_t bucket(std::string_view token) const;

 private:
  std::size_t dim_;
};

}  // namespace oocheck::backend
