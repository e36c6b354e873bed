#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oocheck/backend.hpp"
#include "oocheck/core.hpp"
#include "oocheck/evidence.hpp"
#include "oocheck/prompts.hpp"

namespace oocheck::pipeline {

enum class EntitySource { Stored, Live, None };
enum class ComposeMode { Model, Shortcut };

std::string_view to_string(EntitySource s);
std::string_view to_string(ComposeMode m);
std::optional<EntitySource> entity_source_from_string(std::string_view s);
std::optional<ComposeMode> compose_mode_from_string(std::string_view s);

struct PipelineConfig {
  prompts::EvidenceLimits evidence;
  EntitySource entity_source = EntitySource::Stored;
  ComposeMode compose_mode = ComposeMode::Model;
  std::size_t concurrency = 1;
  std::string vision_model;
  std::string chat_model;
  /// Relative claim image paths are resolved against this directory.
  std::filesystem::path image_root;

  nlohmann::json to_json() const;
};

struct PipelineContext {
  std::shared_ptr<backend::CompletionBackend> vision;
  std::shared_ptr<backend::CompletionBackend> chat;
  std::shared_ptr<backend::EmbeddingBackend> embedding;  ///< used by evaluation, optional here
  std::shared_ptr<EntityClient> entity_client;           ///< needed for EntitySource::Live
  const EvidenceStore* evidence = nullptr;
  const prompts::PromptCatalog* catalog = &prompts::PromptCatalog::builtin();
  PipelineConfig config;

  /// Throws PreconditionError when a backend is missing or concurrency is 0.
  void validate() const;
};

/// Answer to a sampled brief-description question about `image`. Throws
/// ImageUnavailable before any backend call when a local image is unreadable.
std::string describe(const std::string& image, backend::CompletionBackend& vision, std::uint64_t seed,
                     const std::string& model_id = {},
                     const prompts::PromptCatalog& catalog = prompts::PromptCatalog::builtin());

/// Visual entities for the internal prompt per config.entity_source. A live
/// client failure falls back to the stored entities.
std::vector<std::string> resolve_entities(const Claim& claim, const PipelineContext& ctx);

CheckOutcome internal_check(const Claim& claim, const PipelineContext& ctx);

/// nullopt when the claim has no evidence entry or an entry without pages.
std::optional<CheckOutcome> external_check(const Claim& claim, const PipelineContext& ctx);

CheckOutcome compose(const Claim& claim, const CheckOutcome& internal, const std::optional<CheckOutcome>& external,
                     const PipelineContext& ctx);

/// internal -> external -> compose. Never throws for stage failures; they are
/// recorded on the result.
DetectionResult detect(const Claim& claim, const PipelineContext& ctx);

struct RunManifest {
  std::string prompt_catalog_checksum;
  std::map<std::string, std::string> backend_ids;
  nlohmann::json config;
  std::size_t n_claims = 0;
  std::size_t n_failed = 0;
  std::size_t evidence_used = 0;
  /// "<stage>.<verdict|status>" -> count
  std::map<std::string, std::size_t> stage_counts;
  std::size_t model_requests = 0;
  std::size_t network_calls = 0;
  double cache_hit_rate = 0.0;

  nlohmann::json to_json() const;
};

struct BatchOutput {
  std::vector<DetectionResult> results;  ///< input order
  RunManifest manifest;
};

/// Runs detect over `claims` with at most config.concurrency workers.
/// Throws PreconditionError on an empty batch.
BatchOutput detect_batch(const std::vector<Claim>& claims, const PipelineContext& ctx);

}  // namespace oocheck::pipeline
