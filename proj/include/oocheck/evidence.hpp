#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oocheck/core.hpp"
#include "oocheck/errors.hpp"

namespace oocheck {

/// Text of one webpage on which the claim's image previously appeared.
struct EvidencePage {
  std::string url;
  std::optional<std::string> title;
  std::string body;

  bool operator==(const EvidencePage&) const = default;
};

struct Evidence {
  std::string claim_id;
  std::vector<EvidencePage> pages;
  std::vector<std::string> visual_entities;

  bool operator==(const Evidence&) const = default;
};

/// Outcome of loading a JSON Lines file: what parsed, what was rejected.
template <typename T>
struct IngestResult {
  T value;
  std::vector<SchemaError> errors;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

/// Read-only after ingestion; lookups are safe from any thread.
class EvidenceStore {
 public:
  void insert(Evidence evidence);
  std::size_t size() const noexcept { return by_claim_.size(); }
  std::optional<Evidence> lookup(const std::string& claim_id) const;
  bool contains(const std::string& claim_id) const;

  bool operator==(const EvidenceStore&) const = default;

 private:
  std::map<std::string, Evidence> by_claim_;
};

/// Case-insensitive dedup that keeps the first spelling; blank entries dropped.
std::vector<std::string> dedup_entities(const std::vector<std::string>& entities);

/// Loads every valid line, collecting schema errors (with 1-based line numbers)
/// instead of stopping at the first. A repeated claim_id replaces the earlier
/// entry and adds a warning.
IngestResult<EvidenceStore> load_evidence(const std::filesystem::path& path);

/// Strict form of load_evidence: throws FileUnreadable or the first SchemaError.
EvidenceStore ingest_evidence(const std::filesystem::path& path);

/// Claims file: {"id", "caption", "image", "label": "fake"|"real"|null, "split"?}.
/// Duplicate ids are schema errors.
IngestResult<std::vector<Claim>> load_claims(const std::filesystem::path& path);
std::vector<Claim> ingest_claims(const std::filesystem::path& path);

std::optional<Evidence> lookup(const EvidenceStore& store, const std::string& claim_id);

// Visual entity detection

struct DetectedEntity {
  std::string name;
  double score = 0.0;
};

class EntityClient {
 public:
  virtual ~EntityClient() = default;
  virtual std::string id() const = 0;
  virtual std::vector<DetectedEntity> detect(const std::string& image) = 0;
};

/// Returns canned entities per image (or a default list); can be told to fail.
class ScriptedEntityClient final : public EntityClient {
 public:
  explicit ScriptedEntityClient(std::vector<std::string> default_entities = {});

  void set(const std::string& image, std::vector<std::string> entities);
  void fail_with(std::string message);

  std::string id() const override { return "scripted-entities"; }
  std::vector<DetectedEntity> detect(const std::string& image) override;

 private:
  std::vector<std::string> default_;
  std::map<std::string, std::vector<std::string>> per_image_;
  std::optional<std::string> failure_;
};

/// Entity names ordered by descending client score (ties keep client order),
/// deduplicated case-insensitively. Client errors propagate.
std::vector<std::string> detect_entities(const std::string& image, EntityClient& client);

}  // namespace oocheck
