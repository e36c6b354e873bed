#include "oocheck/prompts.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "oocheck/answer_format.hpp"
#include "oocheck/digest.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/text.hpp"

namespace oocheck::detail {
extern const std::string_view kEmbeddedCatalog;
}

namespace oocheck::prompts {

namespace {

constexpr std::string_view kDirective = "%%";
constexpr std::string_view kBlockStart = "%% block ";
constexpr std::string_view kBlockEnd = "%% endblock";

const std::vector<std::string> kRequiredBlocks = {
    "answer_format", "internal", "visual_entities_line", "external",
    "evidence_block", "compose", "ooc_generation", "caption_questions",
};

bool is_slot_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

struct Placeholder {
  std::size_t begin;  // offset of "{{"
  std::size_t end;    // one past "}}"
  bool include;
  std::string name;
};

/// Next well-formed {{name}} or {{>name}} at or after `from`.
std::optional<Placeholder> next_placeholder(std::string_view body, std::size_t from) {
  for (auto pos = body.find("{{", from); pos != std::string_view::npos; pos = body.find("{{", pos + 1)) {
    std::size_t i = pos + 2;
    bool include = i < body.size() && body[i] == '>';
    if (include) ++i;
    std::size_t name_start = i;
    while (i < body.size() && is_slot_char(body[i])) ++i;
    if (i > name_start && body.substr(i, 2) == "}}")
      return Placeholder{pos, i + 2, include, std::string(body.substr(name_start, i - name_start))};
  }
  return std::nullopt;
}

std::string expand_includes(const std::string& name, const std::map<std::string, std::string>& raw,
                            std::vector<std::string>& stack) {
  for (const auto& s : stack)
    if (s == name) throw CatalogError("catalog include cycle through block '" + name + "'");
  auto it = raw.find(name);
  if (it == raw.end()) throw CatalogError("catalog includes unknown block '" + name + "'");
  stack.push_back(name);
  std::string out;
  std::string_view body = it->second;
  std::size_t cursor = 0;
  while (auto ph = next_placeholder(body, cursor)) {
    out.append(body.substr(cursor, ph->begin - cursor));
    if (ph->include)
      out += expand_includes(ph->name, raw, stack);
    else
      out.append(body.substr(ph->begin, ph->end - ph->begin));
    cursor = ph->end;
  }
  out.append(body.substr(cursor));
  stack.pop_back();
  return out;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string body) : name_(std::move(name)), body_(std::move(body)) {
  for (auto ph = next_placeholder(body_, 0); ph; ph = next_placeholder(body_, ph->end)) {
    if (ph->include) throw CatalogError("unexpanded include in template '" + name_ + "'");
    slots_.insert(ph->name);
  }
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  for (const auto& [slot, value] : bindings)
    if (!slots_.count(slot)) throw PreconditionError("template '" + name_ + "' has no slot '" + slot + "'");
  for (const auto& slot : slots_)
    if (!bindings.count(slot)) throw PreconditionError("template '" + name_ + "' slot '" + slot + "' is unbound");
  std::string out;
  std::size_t cursor = 0;
  std::string_view body = body_;
  while (auto ph = next_placeholder(body, cursor)) {
    out.append(body.substr(cursor, ph->begin - cursor));
    out += bindings.at(ph->name);
    cursor = ph->end;
  }
  out.append(body.substr(cursor));
  return out;
}

PromptCatalog PromptCatalog::parse(std::string_view catalog_text) {
  std::map<std::string, std::string> raw;
  std::vector<std::string> order;
  PromptCatalog catalog;

  std::optional<std::string> current;
  std::vector<std::string> lines;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= catalog_text.size()) {
    auto nl = catalog_text.find('\n', start);
    auto line = catalog_text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (current) {
      if (line == kBlockEnd) {
        raw[*current] = text::join(lines, "\n");
        current.reset();
        lines.clear();
      } else {
        lines.emplace_back(line);
      }
    } else if (line.starts_with(kBlockStart)) {
      std::string name(text::trim(line.substr(kBlockStart.size())));
      if (name.empty()) throw CatalogError("line " + std::to_string(line_no) + ": block without a name");
      if (raw.count(name)) throw CatalogError("duplicate catalog block '" + name + "'");
      raw[name];
      order.push_back(name);
      current = name;
    } else if (line.starts_with(kDirective)) {
      auto directive = text::trim(line.substr(kDirective.size()));
      if (directive.starts_with("version:")) catalog.version_ = std::stoi(std::string(directive.substr(8)));
    } else if (!text::trim(line).empty()) {
      throw CatalogError("line " + std::to_string(line_no) + ": text outside a block");
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (current) throw CatalogError("block '" + *current + "' is not closed");

  for (const auto& required : kRequiredBlocks)
    if (!raw.count(required)) throw CatalogError("catalog lacks required block '" + required + "'");

  for (const auto& name : order) {
    std::vector<std::string> stack;
    catalog.templates_.emplace(name, PromptTemplate(name, expand_includes(name, raw, stack)));
  }

  if (catalog.get("answer_format").body() != answer::answer_format_clause())
    throw CatalogError("answer_format block does not match the parser's answer grammar");

  std::istringstream qs(catalog.get("caption_questions").body());
  for (std::string q; std::getline(qs, q);)
    if (!text::trim(q).empty()) catalog.questions_.emplace_back(text::trim(q));
  if (catalog.questions_.empty()) throw CatalogError("caption_questions block is empty");

  catalog.checksum_ = sha256_hex(catalog_text);
  return catalog;
}

PromptCatalog PromptCatalog::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot read prompt catalog " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

const PromptCatalog& PromptCatalog::builtin() {
  static const PromptCatalog catalog = parse(detail::kEmbeddedCatalog);
  return catalog;
}

const PromptTemplate& PromptCatalog::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw CatalogError("no prompt template named '" + name + "'");
  return it->second;
}

std::string truncate_at_whitespace(std::string_view body, std::size_t cap) {
  if (body.size() <= cap) return std::string(body);
  // a whitespace byte at index `cap` still leaves exactly `cap` bytes before it
  for (std::size_t i = cap + 1; i-- > 0;) {
    if (std::isspace(static_cast<unsigned char>(body[i])) && i > 0) {
      auto kept = body.substr(0, i);
      while (!kept.empty() && std::isspace(static_cast<unsigned char>(kept.back()))) kept.remove_suffix(1);
      if (!kept.empty()) return std::string(kept);
    }
  }
  std::size_t cut = cap;
  while (cut > 0 && (static_cast<unsigned char>(body[cut]) & 0xC0) == 0x80) --cut;
  return std::string(body.substr(0, cut));
}

std::string render_internal_prompt(std::string_view caption, const std::vector<std::string>& visual_entities,
                                   const PromptCatalog& catalog) {
  if (text::trim(caption).empty()) throw PreconditionError("caption is empty");
  std::string entity_line;
  if (!visual_entities.empty()) {
    entity_line = catalog.get("visual_entities_line").render({{"entities", text::join(visual_entities, ", ")}});
    entity_line += '\n';
  }
  return catalog.get("internal").render({{"caption", std::string(caption)}, {"visual_entities", entity_line}});
}

std::string render_external_prompt(std::string_view caption, const std::vector<EvidencePage>& pages,
                                   const EvidenceLimits& limits, const PromptCatalog& catalog) {
  if (pages.empty()) throw EmptyEvidence("external check needs at least one evidence page");
  if (text::trim(caption).empty()) throw PreconditionError("caption is empty");
  const auto& block = catalog.get("evidence_block");
  std::vector<std::string> blocks;
  for (std::size_t i = 0; i < pages.size() && i < limits.max_pages; ++i) {
    blocks.push_back(block.render({{"index", std::to_string(i + 1)},
                                   {"url", pages[i].url},
                                   {"body", truncate_at_whitespace(pages[i].body, limits.page_chars)}}));
  }
  return catalog.get("external").render({{"caption", std::string(caption)}, {"evidence", text::join(blocks, "\n")}});
}

std::string render_compose_prompt(std::string_view caption, const CheckOutcome& internal,
                                  const CheckOutcome& external, const PromptCatalog& catalog) {
  if (internal.raw_response.empty() || external.raw_response.empty())
    throw PreconditionError("compose needs the raw responses of both checks");
  return catalog.get("compose").render({{"caption", std::string(caption)},
                                        {"internal_analysis", internal.raw_response},
                                        {"external_analysis", external.raw_response}});
}

std::string render_ooc_gen_prompt(std::string_view cap_ori, std::string_view cap_new,
                                  std::string_view basic_description, const PromptCatalog& catalog) {
  if (text::trim(cap_ori).empty() || text::trim(cap_new).empty() || text::trim(basic_description).empty())
    throw PreconditionError("OOC generation needs both captions and a basic description");
  return catalog.get("ooc_generation")
      .render({{"cap_ori", std::string(cap_ori)},
               {"cap_new", std::string(cap_new)},
               {"basic_description", std::string(basic_description)}});
}

const std::string& sample_caption_question(std::uint64_t seed, const PromptCatalog& catalog) {
  std::mt19937_64 gen(rng::splitmix64(seed));
  const auto& qs = catalog.caption_questions();
  return qs[rng::uniform_index(gen, qs.size())];
}

}  // namespace oocheck::prompts
