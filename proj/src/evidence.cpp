#include "oocheck/evidence.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "oocheck/serialization.hpp"
#include "oocheck/text.hpp"

namespace oocheck {

void EvidenceStore::insert(Evidence evidence) {
  auto id = evidence.claim_id;
  by_claim_.insert_or_assign(std::move(id), std::move(evidence));
}

std::optional<Evidence> EvidenceStore::lookup(const std::string& claim_id) const {
  auto it = by_claim_.find(claim_id);
  if (it == by_claim_.end()) return std::nullopt;
  return it->second;
}

bool EvidenceStore::contains(const std::string& claim_id) const { return by_claim_.count(claim_id) != 0; }

std::optional<Evidence> lookup(const EvidenceStore& store, const std::string& claim_id) {
  return store.lookup(claim_id);
}

std::vector<std::string> dedup_entities(const std::vector<std::string>& entities) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : entities) {
    auto trimmed = std::string(text::trim(e));
    if (trimmed.empty()) continue;
    if (seen.insert(text::to_lower(trimmed)).second) out.push_back(std::move(trimmed));
  }
  return out;
}

IngestResult<EvidenceStore> load_evidence(const std::filesystem::path& path) {
  IngestResult<EvidenceStore> result;
  std::map<std::string, std::size_t> first_line;
  io::for_each_jsonl(
      path,
      [&](std::size_t line, const nlohmann::json& j) {
        Evidence e;
        try {
          e = io::evidence_from_json(j);
        } catch (const std::exception& err) {
          result.errors.emplace_back(line, err.what());
          return;
        }
        if (auto [it, fresh] = first_line.emplace(e.claim_id, line); !fresh) {
          result.warnings.push_back("line " + std::to_string(line) + ": duplicate claim_id '" + e.claim_id +
                                    "' replaces line " + std::to_string(it->second));
          it->second = line;
        }
        result.value.insert(std::move(e));
      },
      [&](SchemaError err) { result.errors.push_back(std::move(err)); });
  return result;
}

EvidenceStore ingest_evidence(const std::filesystem::path& path) {
  auto result = load_evidence(path);
  if (!result.errors.empty()) throw result.errors.front();
  return std::move(result.value);
}

IngestResult<std::vector<Claim>> load_claims(const std::filesystem::path& path) {
  IngestResult<std::vector<Claim>> result;
  std::map<std::string, std::size_t> first_line;
  io::for_each_jsonl(
      path,
      [&](std::size_t line, const nlohmann::json& j) {
        Claim c;
        try {
          c = io::claim_from_json(j);
        } catch (const std::exception& err) {
          result.errors.emplace_back(line, err.what());
          return;
        }
        if (auto [it, fresh] = first_line.emplace(c.id, line); !fresh) {
          result.errors.emplace_back(line, "duplicate claim id '" + c.id + "' (first on line " +
                                               std::to_string(it->second) + ")");
          return;
        }
        result.value.push_back(std::move(c));
      },
      [&](SchemaError err) { result.errors.push_back(std::move(err)); });
  return result;
}

std::vector<Claim> ingest_claims(const std::filesystem::path& path) {
  auto result = load_claims(path);
  if (!result.errors.empty()) throw result.errors.front();
  return std::move(result.value);
}

ScriptedEntityClient::ScriptedEntityClient(std::vector<std::string> default_entities)
    : default_(std::move(default_entities)) {}

void ScriptedEntityClient::set(const std::string& image, std::vector<std::string> entities) {
  per_image_[image] = std::move(entities);
}

void ScriptedEntityClient::fail_with(std::string message) { failure_ = std::move(message); }

std::vector<DetectedEntity> ScriptedEntityClient::detect(const std::string& image) {
  if (failure_) throw TransportError(*failure_);
  auto it = per_image_.find(image);
  const auto& names = it == per_image_.end() ? default_ : it->second;
  std::vector<DetectedEntity> out;
  for (const auto& n : names) out.push_back({n, 1.0});
  return out;
}

std::vector<std::string> detect_entities(const std::string& image, EntityClient& client) {
  auto detected = client.detect(image);
  std::stable_sort(detected.begin(), detected.end(),
                   [](const DetectedEntity& a, const DetectedEntity& b) { return a.score > b.score; });
  std::vector<std::string> names;
  names.reserve(detected.size());
  for (auto& d : detected) names.push_back(std::move(d.name));
  return dedup_entities(names);
}

}  // namespace oocheck
