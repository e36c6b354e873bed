#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "oocheck/core.hpp"
#include "oocheck/evidence.hpp"

namespace oocheck::prompts {

/// A named body with `{{slot}}` placeholders.
class PromptTemplate {
 public:
  PromptTemplate(std::string name, std::string body);

  const std::string& name() const noexcept { return name_; }
  const std::string& body() const noexcept { return body_; }
  const std::set<std::string>& required_slots() const noexcept { return slots_; }

  /// Single pass: bound values are inserted verbatim and never rescanned.
  /// Throws PreconditionError on a missing or an unknown slot.
  std::string render(const std::map<std::string, std::string>& bindings) const;

 private:
  std::string name_;
  std::string body_;
  std::set<std::string> slots_;
};

/// The prompt catalog resource: `%% block <name>` ... `%% endblock` sections,
/// with `{{>name}}` inlining another block at load time.
class PromptCatalog {
 public:
  /// Throws CatalogError on malformed text, a missing required block, or an
  /// answer_format block that differs from answer::answer_format_clause().
  static PromptCatalog parse(std::string_view text);
  static PromptCatalog from_file(const std::filesystem::path& path);
  /// The catalog compiled into the library from resources/prompt_catalog.txt.
  static const PromptCatalog& builtin();

  const PromptTemplate& get(const std::string& name) const;
  bool contains(const std::string& name) const { return templates_.count(name) != 0; }
  const std::vector<std::string>& caption_questions() const noexcept { return questions_; }

  /// Hex SHA-256 of the catalog bytes; recorded in run manifests.
  const std::string& checksum() const noexcept { return checksum_; }
  int version() const noexcept { return version_; }

 private:
  std::map<std::string, PromptTemplate> templates_;
  std::vector<std::string> questions_;
  std::string checksum_;
  int version_ = 0;
};

struct EvidenceLimits {
  std::size_t max_pages = 3;
  std::size_t page_chars = 2000;
};

/// At most `cap` bytes, cut at the last whitespace at or before the cap
/// (hard cut on a UTF-8 boundary when there is none).
std::string truncate_at_whitespace(std::string_view body, std::size_t cap);

std::string render_internal_prompt(std::string_view caption, const std::vector<std::string>& visual_entities,
                                   const PromptCatalog& catalog = PromptCatalog::builtin());

/// Throws EmptyEvidence when `pages` is empty.
std::string render_external_prompt(std::string_view caption, const std::vector<EvidencePage>& pages,
                                   const EvidenceLimits& limits = {},
                                   const PromptCatalog& catalog = PromptCatalog::builtin());

std::string render_compose_prompt(std::string_view caption, const CheckOutcome& internal,
                                  const CheckOutcome& external,
                                  const PromptCatalog& catalog = PromptCatalog::builtin());

std::string render_ooc_gen_prompt(std::string_view cap_ori, std::string_view cap_new,
                                  std::string_view basic_description,
                                  const PromptCatalog& catalog = PromptCatalog::builtin());

/// One of the brief-description questions, uniform over the list and fixed by `seed`.
const std::string& sample_caption_question(std::uint64_t seed,
                                           const PromptCatalog& catalog = PromptCatalog::builtin());

}  // namespace oocheck::prompts
