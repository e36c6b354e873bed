#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oocheck/pipeline.hpp"

namespace oocheck::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kValidationFailure = 2 };

/// Everything a command needs. Loaded from a JSON file, then overridden by flags.
struct RunConfig {
  std::optional<std::filesystem::path> claims, evidence, gold, pairs, fakes, reals, results, cache;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  pipeline::PipelineConfig pipeline;
  std::vector<double> subset_fractions{1.0};
  bool keep_going = false;
  /// {"vision": spec, "chat": spec, "embedding": spec, "entities": spec}
  nlohmann::json backends = nlohmann::json::object();
  /// Directory that relative paths inside backend specs resolve against.
  std::filesystem::path base_dir = ".";
};

/// Parses a config document; relative paths resolve against `base_dir`.
/// Throws PreconditionError on an invalid field.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oocheck::cli
