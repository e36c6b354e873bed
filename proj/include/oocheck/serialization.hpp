#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oocheck/core.hpp"
#include "oocheck/evidence.hpp"
#include "oocheck/instructgen.hpp"
#include "oocheck/metrics.hpp"

// JSON forms of the domain types. The *_from_json functions throw
// std::invalid_argument with a field-level message on schema violations.
namespace oocheck::io {

using nlohmann::json;

json to_json(const Claim& claim);
Claim claim_from_json(const json& j);

json to_json(const Evidence& evidence);
Evidence evidence_from_json(const json& j);

json to_json(const CheckOutcome& outcome);
CheckOutcome outcome_from_json(const json& j);

/// Results-file form. backend_calls is run telemetry and stays in the manifest.
json to_json(const DetectionResult& result);
DetectionResult detection_from_json(const json& j);

json to_json(const instructgen::InstructionRecord& record);
instructgen::InstructionRecord record_from_json(const json& j);

metrics::GoldExplanation gold_from_json(const json& j);

/// Calls `fn(line_number, value)` for every non-blank line. Throws
/// FileUnreadable if the file cannot be opened; a line that is not JSON is
/// reported through `on_error` (or thrown as SchemaError when none is given).
void for_each_jsonl(const std::filesystem::path& path, const std::function<void(std::size_t, const json&)>& fn,
                    const std::function<void(SchemaError)>& on_error = {});

/// One compact JSON value per line, written atomically (temp file + rename).
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);
void write_text(const std::filesystem::path& path, const std::string& content);
json read_json(const std::filesystem::path& path);

std::vector<DetectionResult> read_results(const std::filesystem::path& path);
metrics::GoldExplanations read_gold_explanations(const std::filesystem::path& path);

}  // namespace oocheck::io
