#include "oocheck/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "oocheck/digest.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/text.hpp"

namespace oocheck::backend {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

void CompletionRequest::validate() const {
  if (messages.empty()) throw PreconditionError("completion request has no messages");
  std::size_t images = 0;
  for (const auto& m : messages) {
    if (m.image) {
      if (m.role != Role::User) throw PreconditionError("images may only be attached to user messages");
      ++images;
    }
  }
  if (images > 1) throw PreconditionError("completion request carries more than one image");
  if (!(temperature >= 0.0)) throw PreconditionError("temperature must be >= 0");
  if (max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
}

std::optional<std::string> CompletionRequest::image() const {
  for (const auto& m : messages)
    if (m.image) return m.image;
  return std::nullopt;
}

CompletionResponse complete(CompletionBackend& backend, const CompletionRequest& request) {
  request.validate();
  return backend.complete(request);
}

namespace {

void append_field(std::string& buf, std::string_view field) {
  buf += std::to_string(field.size());
  buf += ':';
  buf += field;
  buf += ';';
}

std::string haystack_of(const CompletionRequest& request) {
  std::string all;
  for (const auto& m : request.messages) {
    if (!all.empty()) all += '\n';
    all += m.text;
  }
  return all;
}

}  // namespace

std::string cache_key(std::string_view backend_id, const CompletionRequest& request) {
  request.validate();
  std::string buf;
  append_field(buf, "oocheck-cache-v1");
  append_field(buf, backend_id);
  append_field(buf, request.model_id);
  append_field(buf, std::to_string(request.messages.size()));
  for (const auto& m : request.messages) {
    append_field(buf, to_string(m.role));
    append_field(buf, m.text);
    append_field(buf, m.image ? image_digest(*m.image) : std::string("-"));
  }
  char temp[64];
  std::snprintf(temp, sizeof temp, "%.17g", request.temperature);
  append_field(buf, temp);
  append_field(buf, std::to_string(request.max_tokens));
  return sha256_hex(buf);
}

// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::string id, std::vector<Rule> rules, std::optional<std::string> fallback)
    : id_(std::move(id)), rules_(std::move(rules)), fallback_(std::move(fallback)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const nlohmann::json& script) {
  std::vector<Rule> rules;
  for (const auto& r : script.value("rules", nlohmann::json::array())) {
    Rule rule;
    rule.match = r.at("match").get<std::string>();
    rule.response = r.value("response", std::string());
    auto fault = r.value("fault", std::string());
    if (fault == "transport") rule.fault = Fault::Transport;
    else if (fault == "refused") rule.fault = Fault::Refused;
    else if (!fault.empty()) throw PreconditionError("unknown scripted fault: " + fault);
    rules.push_back(std::move(rule));
  }
  std::optional<std::string> fallback;
  if (script.contains("default") && !script["default"].is_null()) fallback = script["default"].get<std::string>();
  return std::make_shared<ScriptedBackend>(script.value("id", std::string("scripted")), std::move(rules),
                                           std::move(fallback));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileUnreadable("cannot read mock script: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("invalid mock script " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
  request.validate();
  {
    std::lock_guard lock(log_mutex_);
    log_.push_back(request);
  }
  ++calls_;
  const auto haystack = haystack_of(request);
  for (const auto& rule : rules_) {
    if (haystack.find(rule.match) == std::string::npos) continue;
    switch (rule.fault) {
      case Fault::Transport: throw TransportError("scripted transport failure (" + rule.match + ")");
      case Fault::Refused: throw BackendRefused(500, "scripted refusal (" + rule.match + ")");
      case Fault::None: break;
    }
    return {rule.response, id_, false, 0};
  }
  if (fallback_) return {*fallback_, id_, false, 0};
  throw ScriptMiss("no scripted response matches the request to " + id_);
}

std::vector<CompletionRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

// Embeddings

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw PreconditionError("cosine of vectors with different dimensions");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu == 0 || nv == 0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw PreconditionError("embedding dimension must be positive");
}

std::string HashingEmbedder::id() const { return "hashing-bow-" + std::to_string(dim_); }

std::size_t HashingEmbedder::bucket(std::string_view token) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h % dim_);
}

EmbeddingVector HashingEmbedder::embed(std::string_view input) {
  auto trimmed = text::trim(input);
  if (trimmed.empty()) throw EmptyText("cannot embed empty text");
  auto tokens = text::tokenize(trimmed);
  // punctuation-only text still gets a non-zero vector
  if (tokens.empty()) tokens.emplace_back(trimmed);
  EmbeddingVector v{std::vector<double>(dim_, 0.0)};
  for (const auto& t : tokens) v.values[bucket(t)] += 1.0;
  double norm = 0;
  for (double x : v.values) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v.values) x /= norm;
  return v;
}

}  // namespace oocheck::backend
