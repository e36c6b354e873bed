#include "oocheck/serialization.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "oocheck/errors.hpp"
#include "oocheck/text.hpp"

namespace oocheck::io {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema_fail(const std::string& message) { throw std::invalid_argument(message); }

const json& require(const json& j, const char* key) {
  if (!j.is_object()) schema_fail("record is not a JSON object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, bool non_blank = true) {
  const auto& v = require(j, key);
  if (!v.is_string()) schema_fail(std::string("field '") + key + "' must be a string");
  auto s = v.get<std::string>();
  if (non_blank && text::trim(s).empty()) schema_fail(std::string("field '") + key + "' is empty");
  return s;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_fail(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

Stage stage_from(const std::string& s) {
  if (s == "internal") return Stage::Internal;
  if (s == "external") return Stage::External;
  if (s == "composed") return Stage::Composed;
  schema_fail("unknown stage '" + s + "'");
}

ParseStatus status_from(const std::string& s) {
  if (s == "structured") return ParseStatus::Structured;
  if (s == "fallback_classified") return ParseStatus::FallbackClassified;
  if (s == "non_compliant") return ParseStatus::NonCompliant;
  schema_fail("unknown parse_status '" + s + "'");
}

std::string temp_name(const fs::path& target) {
  static std::atomic<unsigned> counter{0};
  std::ostringstream s;
  s << target.string() << ".tmp." << std::this_thread::get_id() << '.' << counter++;
  return s.str();
}

}  // namespace

json to_json(const Claim& c) {
  json j{{"id", c.id}, {"caption", c.caption}, {"image", c.image}};
  j["label"] = c.gold_label ? json(to_string(*c.gold_label)) : json(nullptr);
  if (c.split) j["split"] = to_string(*c.split);
  return j;
}

Claim claim_from_json(const json& j) {
  Claim c;
  c.id = require_string(j, "id");
  c.caption = require_string(j, "caption");
  c.image = require_string(j, "image");
  if (auto label = optional_string(j, "label")) {
    if (*label == "fake") c.gold_label = GoldLabel::Falsified;
    else if (*label == "real") c.gold_label = GoldLabel::Pristine;
    else schema_fail("field 'label' must be \"fake\", \"real\" or null");
  }
  if (auto split = optional_string(j, "split")) {
    c.split = split_from_string(*split);
    if (!c.split) schema_fail("field 'split' must be one of train, val, test");
  }
  return c;
}

json to_json(const Evidence& e) {
  auto pages = json::array();
  for (const auto& p : e.pages) {
    json page{{"url", p.url}, {"body", p.body}};
    if (p.title) page["title"] = *p.title;
    pages.push_back(std::move(page));
  }
  return {{"claim_id", e.claim_id}, {"pages", std::move(pages)}, {"visual_entities", e.visual_entities}};
}

Evidence evidence_from_json(const json& j) {
  Evidence e;
  e.claim_id = require_string(j, "claim_id");
  if (auto it = j.find("pages"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_fail("field 'pages' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& p = (*it)[i];
      try {
        EvidencePage page;
        page.url = require_string(p, "url", false);
        page.title = optional_string(p, "title");
        page.body = require_string(p, "body");
        e.pages.push_back(std::move(page));
      } catch (const std::invalid_argument& err) {
        schema_fail("pages[" + std::to_string(i) + "]: " + err.what());
      }
    }
  }
  if (auto it = j.find("visual_entities"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_fail("field 'visual_entities' must be an array");
    std::vector<std::string> entities;
    for (const auto& v : *it) {
      if (!v.is_string()) schema_fail("visual_entities entries must be strings");
      auto s = std::string(text::trim(v.get<std::string>()));
      if (s.empty()) schema_fail("visual_entities entries must be non-empty");
      entities.push_back(std::move(s));
    }
    e.visual_entities = dedup_entities(entities);
  }
  return e;
}

json to_json(const CheckOutcome& o) {
  const auto& ex = o.explanation;
  return {{"stage", to_string(o.stage)},
          {"verdict", o.verdict ? json(to_string(*o.verdict)) : json(nullptr)},
          {"parse_status", to_string(o.parse_status)},
          {"explanation",
           {{"element", ex.element ? json(ex.element->str()) : json(nullptr)},
            {"ent_t", opt(ex.ent_t)},
            {"ent_v", opt(ex.ent_v)},
            {"rationale", ex.rationale}}},
          {"raw_response", o.raw_response}};
}

CheckOutcome outcome_from_json(const json& j) {
  CheckOutcome o;
  o.stage = stage_from(require_string(j, "stage"));
  if (auto v = optional_string(j, "verdict")) {
    if (*v == "real") o.verdict = Verdict::Real;
    else if (*v == "fake") o.verdict = Verdict::Fake;
    else schema_fail("unknown verdict '" + *v + "'");
  }
  o.parse_status = status_from(require_string(j, "parse_status"));
  o.raw_response = require_string(j, "raw_response", false);
  const auto& ex = require(j, "explanation");
  if (auto e = optional_string(ex, "element")) o.explanation.element = canonicalize_element(*e);
  o.explanation.ent_t = optional_string(ex, "ent_t");
  o.explanation.ent_v = optional_string(ex, "ent_v");
  o.explanation.rationale = optional_string(ex, "rationale").value_or(o.raw_response);
  return o;
}

json to_json(const DetectionResult& r) {
  return {{"claim_id", r.claim_id},
          {"failed", r.failed()},
          {"error", opt(r.error)},
          {"evidence_used", r.evidence_used},
          {"internal", to_json(r.internal)},
          {"external", r.external ? to_json(*r.external) : json(nullptr)},
          {"composed", to_json(r.composed)}};
}

DetectionResult detection_from_json(const json& j) {
  DetectionResult r;
  r.claim_id = require_string(j, "claim_id");
  r.error = optional_string(j, "error");
  r.evidence_used = j.value("evidence_used", false);
  r.internal = outcome_from_json(require(j, "internal"));
  if (auto it = j.find("external"); it != j.end() && !it->is_null()) r.external = outcome_from_json(*it);
  r.composed = outcome_from_json(require(j, "composed"));
  return r;
}

json to_json(const instructgen::InstructionRecord& r) {
  return {{"image", r.image},
          {"prompt", r.prompt},
          {"target", r.target},
          {"kind", instructgen::to_string(r.kind)},
          {"provenance", r.provenance}};
}

instructgen::InstructionRecord record_from_json(const json& j) {
  instructgen::InstructionRecord r;
  r.image = require_string(j, "image", false);
  r.prompt = require_string(j, "prompt", false);
  r.target = require_string(j, "target", false);
  auto kind = instructgen::record_kind_from_string(require_string(j, "kind"));
  if (!kind) schema_fail("unknown record kind");
  r.kind = *kind;
  if (auto it = j.find("provenance"); it != j.end() && !it->is_null())
    r.provenance = it->get<std::map<std::string, std::string>>();
  return r;
}

metrics::GoldExplanation gold_from_json(const json& j) {
  auto id = require_string(j, "claim_id");
  auto element = canonicalize_element(require_string(j, "element"));
  return metrics::make_gold(std::move(id), element, require_string(j, "ent_t"), require_string(j, "ent_v"));
}

void for_each_jsonl(const fs::path& path, const std::function<void(std::size_t, const json&)>& fn,
                    const std::function<void(SchemaError)>& on_error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      SchemaError err(line_no, std::string("invalid JSON: ") + e.what());
      if (!on_error) throw err;
      on_error(err);
      continue;
    }
    fn(line_no, value);
  }
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << content;
    if (!out) throw Error("cannot write " + tmp);
  }
  fs::rename(tmp, path);
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += row.dump();
    content += '\n';
  }
  write_text(path, content);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(1, path.string() + ": " + e.what());
  }
}

std::vector<DetectionResult> read_results(const fs::path& path) {
  std::vector<DetectionResult> out;
  for_each_jsonl(path, [&](std::size_t line, const json& j) {
    try {
      out.push_back(detection_from_json(j));
    } catch (const std::exception& e) {
      throw SchemaError(line, e.what());
    }
  });
  return out;
}

metrics::GoldExplanations read_gold_explanations(const fs::path& path) {
  metrics::GoldExplanations out;
  for_each_jsonl(path, [&](std::size_t line, const json& j) {
    try {
      auto g = gold_from_json(j);
      auto id = g.claim_id;
      out.insert_or_assign(std::move(id), std::move(g));
    } catch (const std::exception& e) {
      throw SchemaError(line, e.what());
    }
  });
  return out;
}

}  // namespace oocheck::io
