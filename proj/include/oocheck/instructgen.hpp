#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oocheck/backend.hpp"
#include "oocheck/prompts.hpp"

namespace oocheck::instructgen {

/// A falsified pair (cap_new, img2) plus what the generator needs to explain it.
struct FakePairSource {
  std::string id;
  std::string cap_new;  ///< caption the image was wrongly paired with
  std::string cap_ori;  ///< original caption of the reused image
  std::string image;    ///< the reused image
  std::string basic_description;
};

struct CaptionPair {
  std::string image;
  std::string caption;
  std::string source_id;  ///< optional; empty when the pair has no id
};

enum class RecordKind { CaptionAlign, OOCFake, OOCReal };

std::string_view to_string(RecordKind k);
std::optional<RecordKind> record_kind_from_string(std::string_view s);

struct InstructionRecord {
  std::string image;
  std::string prompt;
  std::string target;
  RecordKind kind = RecordKind::CaptionAlign;
  std::map<std::string, std::string> provenance;

  bool operator==(const InstructionRecord&) const = default;
};

/// "Human: <image> {prompt} <STOP>; Model: {target} <STOP>"
std::string conversation_text(const InstructionRecord& record);

/// One CaptionAlign record per pair, in input order; the question for record i
/// is drawn with rng::derive_seed(seed, i). Throws EmptyDataset on no pairs.
std::vector<InstructionRecord> build_stage1(const std::vector<CaptionPair>& pairs, std::uint64_t seed,
                                            const prompts::PromptCatalog& catalog = prompts::PromptCatalog::builtin());

struct GenerationSkip {
  std::size_t index = 0;
  std::string source_id;
  std::string reason;  ///< error class, e.g. "MissingField", "TransportError"
  std::string detail;
};

struct GenerationLog {
  std::size_t attempted = 0;
  std::size_t generated = 0;
  std::vector<GenerationSkip> skipped;
};

struct Stage2Options {
  std::uint64_t seed = 0;
  std::size_t concurrency = 1;
  std::string model_id;
};

struct Stage2Output {
  std::vector<InstructionRecord> records;  ///< all OOCFake, then the same number of OOCReal
  GenerationLog log;
};

/// Generates one explained OOCFake record per fake whose generator response
/// parses, skipping (and logging) failures, then samples exactly as many
/// OOCReal records from `reals` without replacement. Throws InsufficientReals
/// when there are fewer reals than generated fakes.
Stage2Output build_stage2(const std::vector<FakePairSource>& fakes, const std::vector<CaptionPair>& reals,
                          backend::CompletionBackend& chat, const Stage2Options& options,
                          const prompts::PromptCatalog& catalog = prompts::PromptCatalog::builtin());

struct RecordViolation {
  std::size_t index = 0;
  std::string record_id;
  std::string message;
};

struct DuplicatePair {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<RecordViolation> violations;
  std::vector<DuplicatePair> duplicates;  ///< same (image, target)
  std::map<std::string, std::size_t> kind_counts;
  std::size_t fake_count = 0;
  std::size_t real_count = 0;
};

/// Record id used in reports: provenance source_id, else "#<index>".
std::string record_id(const InstructionRecord& record, std::size_t index);

ValidationReport validate_records(const std::vector<InstructionRecord>& records);

}  // namespace oocheck::instructgen
