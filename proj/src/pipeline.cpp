#include "oocheck/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include "oocheck/digest.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/parser.hpp"

namespace oocheck::pipeline {

namespace {

constexpr std::string_view kErrorTag = "[stage-error] ";

std::string error_kind(const Error& e) {
  if (dynamic_cast<const ImageUnavailable*>(&e)) return "ImageUnavailable";
  if (dynamic_cast<const TransportError*>(&e)) return "TransportError";
  if (dynamic_cast<const BackendRefused*>(&e)) return "BackendRefused";
  if (dynamic_cast<const ScriptMiss*>(&e)) return "ScriptMiss";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
  return "Error";
}

std::string error_tag(const Error& e) { return std::string(kErrorTag) + error_kind(e) + ": " + e.what(); }

bool is_error_tag(const std::string& raw) { return raw.rfind(kErrorTag, 0) == 0; }

void require_readable(const std::string& image) {
  if (is_url(image)) return;
  std::ifstream in(image, std::ios::binary);
  if (!in) throw ImageUnavailable("cannot read image " + image);
}

CheckOutcome failed_outcome(Stage stage, const Error& e) {
  CheckOutcome o;
  o.stage = stage;
  o.raw_response = error_tag(e);
  o.explanation.rationale = o.raw_response;
  o.parse_status = ParseStatus::NonCompliant;
  return o;
}

// Per-claim call accounting, kept off the shared backends so workers do not race.
struct CallTally {
  std::size_t requests = 0;
  std::size_t uncached = 0;

  backend::CompletionResponse send(backend::CompletionBackend& b, const backend::CompletionRequest& req) {
    auto resp = backend::complete(b, req);
    ++requests;
    if (!resp.cached) ++uncached;
    return resp;
  }
};

CheckOutcome run_internal(const Claim& claim, const PipelineContext& ctx, CallTally& tally) {
  const auto image = resolve_image(claim.image, ctx.config.image_root);
  require_readable(image);
  auto prompt = prompts::render_internal_prompt(claim.caption, resolve_entities(claim, ctx), *ctx.catalog);
  backend::CompletionRequest req;
  req.model_id = ctx.config.vision_model;
  req.messages.push_back({backend::Role::User, std::move(prompt), image});
  return parser::parse_verdict(tally.send(*ctx.vision, req).text, Stage::Internal);
}

std::optional<CheckOutcome> run_external(const Claim& claim, const PipelineContext& ctx, CallTally& tally) {
  if (!ctx.evidence) return std::nullopt;
  auto ev = ctx.evidence->lookup(claim.id);
  if (!ev || ev->pages.empty()) return std::nullopt;
  backend::CompletionRequest req;
  req.model_id = ctx.config.chat_model;
  req.messages.push_back({backend::Role::User,
                          prompts::render_external_prompt(claim.caption, ev->pages, ctx.config.evidence, *ctx.catalog),
                          std::nullopt});
  return parser::parse_verdict(tally.send(*ctx.chat, req).text, Stage::External);
}

CheckOutcome as_composed(const CheckOutcome& internal) {
  auto out = internal;
  out.stage = Stage::Composed;
  return out;
}

CheckOutcome fallback_to_internal(const CheckOutcome& internal, std::string raw) {
  CheckOutcome out;
  out.stage = Stage::Composed;
  out.verdict = internal.verdict;
  out.explanation = internal.explanation;
  out.raw_response = std::move(raw);
  out.parse_status = internal.verdict ? ParseStatus::FallbackClassified : ParseStatus::NonCompliant;
  return out;
}

CheckOutcome run_compose(const Claim& claim, const CheckOutcome& internal, const std::optional<CheckOutcome>& external,
                         const PipelineContext& ctx, CallTally& tally) {
  if (ctx.config.compose_mode == ComposeMode::Shortcut || !external) return as_composed(internal);
  try {
    backend::CompletionRequest req;
    req.model_id = ctx.config.chat_model;
    req.messages.push_back(
        {backend::Role::User, prompts::render_compose_prompt(claim.caption, internal, *external, *ctx.catalog),
         std::nullopt});
    auto composed = parser::parse_verdict(tally.send(*ctx.chat, req).text, Stage::Composed);
    if (composed.parse_status == ParseStatus::NonCompliant)
      return fallback_to_internal(internal, std::move(composed.raw_response));
    return composed;
  } catch (const Error& e) {
    return fallback_to_internal(internal, error_tag(e));
  }
}

DetectionResult run_detect(const Claim& claim, const PipelineContext& ctx, CallTally& tally) {
  DetectionResult r;
  r.claim_id = claim.id;

  bool internal_failed = false;
  try {
    r.internal = run_internal(claim, ctx, tally);
  } catch (const Error& e) {
    r.internal = failed_outcome(Stage::Internal, e);
    r.error = "internal: " + r.internal.raw_response.substr(kErrorTag.size());
    internal_failed = true;
  }

  try {
    r.external = run_external(claim, ctx, tally);
  } catch (const Error& e) {
    r.external = failed_outcome(Stage::External, e);
    if (!r.error) r.error = "external: " + r.external->raw_response.substr(kErrorTag.size());
  }
  r.evidence_used = r.external && !is_error_tag(r.external->raw_response);

  if (internal_failed) {
    r.composed = as_composed(r.internal);
  } else {
    std::optional<CheckOutcome> usable;
    if (r.evidence_used) usable = r.external;
    r.composed = run_compose(claim, r.internal, usable, ctx, tally);
  }
  r.backend_calls = tally.uncached;
  return r;
}

}  // namespace

std::string_view to_string(EntitySource s) {
  switch (s) {
    case EntitySource::Stored: return "stored";
    case EntitySource::Live: return "live";
    case EntitySource::None: return "none";
  }
  return "stored";
}

std::string_view to_string(ComposeMode m) { return m == ComposeMode::Model ? "model" : "shortcut"; }

std::optional<EntitySource> entity_source_from_string(std::string_view s) {
  if (s == "stored") return EntitySource::Stored;
  if (s == "live") return EntitySource::Live;
  if (s == "none") return EntitySource::None;
  return std::nullopt;
}

std::optional<ComposeMode> compose_mode_from_string(std::string_view s) {
  if (s == "model") return ComposeMode::Model;
  if (s == "shortcut") return ComposeMode::Shortcut;
  return std::nullopt;
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"max_pages", evidence.max_pages},
          {"page_chars", evidence.page_chars},
          {"entity_source", to_string(entity_source)},
          {"compose_mode", to_string(compose_mode)},
          {"concurrency", concurrency},
          {"vision_model", vision_model},
          {"chat_model", chat_model},
          {"image_root", image_root.string()}};
}

void PipelineContext::validate() const {
  if (!vision) throw PreconditionError("pipeline needs a vision backend");
  if (!chat) throw PreconditionError("pipeline needs a chat backend");
  if (!catalog) throw PreconditionError("pipeline needs a prompt catalog");
  if (config.concurrency < 1) throw PreconditionError("concurrency must be at least 1");
  if (config.evidence.max_pages < 1) throw PreconditionError("max_pages must be at least 1");
  if (config.entity_source == EntitySource::Live && !entity_client)
    throw PreconditionError("entity_source=live needs an entity client");
}

std::string describe(const std::string& image, backend::CompletionBackend& vision, std::uint64_t seed,
                     const std::string& model_id, const prompts::PromptCatalog& catalog) {
  require_readable(image);
  backend::CompletionRequest req;
  req.model_id = model_id;
  req.messages.push_back({backend::Role::User, prompts::sample_caption_question(seed, catalog), image});
  return backend::complete(vision, req).text;
}

std::vector<std::string> resolve_entities(const Claim& claim, const PipelineContext& ctx) {
  auto stored = [&]() -> std::vector<std::string> {
    if (!ctx.evidence) return {};
    auto ev = ctx.evidence->lookup(claim.id);
    return ev ? ev->visual_entities : std::vector<std::string>{};
  };
  switch (ctx.config.entity_source) {
    case EntitySource::None: return {};
    case EntitySource::Stored: return stored();
    case EntitySource::Live:
      if (!ctx.entity_client) return stored();
      try {
        return detect_entities(resolve_image(claim.image, ctx.config.image_root), *ctx.entity_client);
      } catch (const Error&) {
        return stored();
      }
  }
  return {};
}

CheckOutcome internal_check(const Claim& claim, const PipelineContext& ctx) {
  CallTally tally;
  try {
    return run_internal(claim, ctx, tally);
  } catch (const Error& e) {
    return failed_outcome(Stage::Internal, e);
  }
}

std::optional<CheckOutcome> external_check(const Claim& claim, const PipelineContext& ctx) {
  CallTally tally;
  try {
    return run_external(claim, ctx, tally);
  } catch (const Error& e) {
    return failed_outcome(Stage::External, e);
  }
}

CheckOutcome compose(const Claim& claim, const CheckOutcome& internal, const std::optional<CheckOutcome>& external,
                     const PipelineContext& ctx) {
  CallTally tally;
  return run_compose(claim, internal, external, ctx, tally);
}

DetectionResult detect(const Claim& claim, const PipelineContext& ctx) {
  ctx.validate();
  CallTally tally;
  return run_detect(claim, ctx, tally);
}

nlohmann::json RunManifest::to_json() const {
  return {{"prompt_catalog_checksum", prompt_catalog_checksum},
          {"backend_ids", backend_ids},
          {"config", config},
          {"n_claims", n_claims},
          {"n_failed", n_failed},
          {"evidence_used", evidence_used},
          {"stage_counts", stage_counts},
          {"model_requests", model_requests},
          {"network_calls", network_calls},
          {"cache_hit_rate", cache_hit_rate}};
}

BatchOutput detect_batch(const std::vector<Claim>& claims, const PipelineContext& ctx) {
  ctx.validate();
  if (claims.empty()) throw PreconditionError("detect_batch needs at least one claim");

  BatchOutput out;
  out.results.resize(claims.size());
  std::vector<CallTally> tallies(claims.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < claims.size(); i = next++) out.results[i] = run_detect(claims[i], ctx, tallies[i]);
  };
  const std::size_t n_workers = std::min(ctx.config.concurrency, claims.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  auto& m = out.manifest;
  m.prompt_catalog_checksum = ctx.catalog->checksum();
  m.backend_ids["vision"] = ctx.vision->id();
  m.backend_ids["chat"] = ctx.chat->id();
  if (ctx.embedding) m.backend_ids["embedding"] = ctx.embedding->id();
  if (ctx.entity_client) m.backend_ids["entities"] = ctx.entity_client->id();
  m.config = ctx.config.to_json();
  m.n_claims = claims.size();

  auto count = [&](const CheckOutcome& o) {
    const auto stage = std::string(to_string(o.stage));
    ++m.stage_counts[stage + "." + (o.verdict ? std::string(to_string(*o.verdict)) : "none")];
    ++m.stage_counts[stage + "." + std::string(to_string(o.parse_status))];
  };
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const auto& r = out.results[i];
    if (r.failed()) ++m.n_failed;
    if (r.evidence_used) ++m.evidence_used;
    count(r.internal);
    if (r.external) count(*r.external);
    else if (ctx.evidence && ctx.evidence->contains(r.claim_id)) ++m.stage_counts["external.skipped_empty_pages"];
    else ++m.stage_counts["external.skipped_no_entry"];
    count(r.composed);
    m.model_requests += tallies[i].requests;
    m.network_calls += tallies[i].uncached;
  }
  m.cache_hit_rate = m.model_requests == 0
                         ? 0.0
                         : static_cast<double>(m.model_requests - m.network_calls) / static_cast<double>(m.model_requests);
  return out;
}

}  // namespace oocheck::pipeline
