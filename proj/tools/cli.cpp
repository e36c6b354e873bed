#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "oocheck/digest.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/evidence.hpp"
#include "oocheck/http_backend.hpp"
#include "oocheck/instructgen.hpp"
#include "oocheck/metrics.hpp"
#include "oocheck/serialization.hpp"
#include "oocheck/text.hpp"

namespace oocheck::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// A failure the operator must fix in inputs or config (exit 2).
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

fs::path resolve_path(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

std::optional<fs::path> opt_path(const json& j, const char* key, const fs::path& base) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw PreconditionError(std::string("config field '") + key + "' must be a path string");
  return resolve_path(it->get<std::string>(), base);
}

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw PreconditionError(std::string("config field '") + key + "' has the wrong type");
  }
}

// Flags as given on the command line; unset options leave the config alone.
struct Flags {
  std::string config;
  std::string claims, evidence, gold, pairs, fakes, reals, results, cache, out, image_root;
  std::string entity_source, compose_mode, claim_id;
  std::uint64_t seed = 0;
  std::size_t concurrency = 1, max_pages = 3;
  std::vector<double> subset_fractions;
  bool keep_going = false;
  int stage = 0;
};

struct OptionSet {
  std::map<std::string, CLI::Option*> opts;
  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App& cmd, Flags& f, OptionSet& o) {
  o.opts["config"] = cmd.add_option("--config", f.config, "JSON config file");
  o.opts["claims"] = cmd.add_option("--claims", f.claims, "claims JSON Lines file");
  o.opts["evidence"] = cmd.add_option("--evidence", f.evidence, "evidence JSON Lines file");
  o.opts["out"] = cmd.add_option("--out", f.out, "output directory");
  o.opts["cache"] = cmd.add_option("--cache", f.cache, "response cache directory");
  o.opts["seed"] = cmd.add_option("--seed", f.seed, "64-bit unsigned seed");
  o.opts["image-root"] = cmd.add_option("--image-root", f.image_root, "directory for relative image paths");
  o.opts["concurrency"] = cmd.add_option("--concurrency", f.concurrency, "worker bound")->check(CLI::PositiveNumber);
}

void apply_flags(RunConfig& c, const Flags& f, const OptionSet& o) {
  auto set_path = [&](const char* name, const std::string& v, std::optional<fs::path>& dst) {
    if (o.given(name)) dst = fs::path(v);
  };
  set_path("claims", f.claims, c.claims);
  set_path("evidence", f.evidence, c.evidence);
  set_path("gold", f.gold, c.gold);
  set_path("pairs", f.pairs, c.pairs);
  set_path("fakes", f.fakes, c.fakes);
  set_path("reals", f.reals, c.reals);
  set_path("results", f.results, c.results);
  set_path("cache", f.cache, c.cache);
  if (o.given("out")) c.out = f.out;
  if (o.given("image-root")) c.pipeline.image_root = f.image_root;
  if (o.given("seed")) c.seed = f.seed;
  if (o.given("concurrency")) c.pipeline.concurrency = f.concurrency;
  if (o.given("max-pages")) c.pipeline.evidence.max_pages = f.max_pages;
  if (o.given("entity-source")) c.pipeline.entity_source = *pipeline::entity_source_from_string(f.entity_source);
  if (o.given("compose-mode")) c.pipeline.compose_mode = *pipeline::compose_mode_from_string(f.compose_mode);
  if (o.given("subset-fraction")) c.subset_fractions = f.subset_fractions;
  if (f.keep_going) c.keep_going = true;
}

RunConfig load_config(const Flags& f, const OptionSet& o) {
  RunConfig c;
  if (o.given("config")) {
    const fs::path path = f.config;
    if (!fs::exists(path)) throw ValidationFailure("config file not found: " + path.string());
    json j;
    try {
      j = io::read_json(path);
    } catch (const SchemaError& e) {
      throw ValidationFailure(std::string("config is not valid JSON: ") + e.what());
    }
    try {
      c = config_from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
    } catch (const PreconditionError& e) {
      throw ValidationFailure(e.what());
    }
  }
  apply_flags(c, f, o);
  return c;
}

const fs::path& require_input(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw ValidationFailure(std::string("missing required input: --") + what);
  if (!fs::exists(*p)) throw ValidationFailure(std::string(what) + " file not found: " + p->string());
  return *p;
}

// Backends

backend::HttpEndpoint endpoint_from(const json& spec, const std::string& fallback_id) {
  backend::HttpEndpoint e;
  e.url = get_field<std::string>(spec, "url", "");
  if (e.url.empty()) throw ValidationFailure("http backend '" + fallback_id + "' needs a url");
  e.id = get_field<std::string>(spec, "id", fallback_id);
  e.model = get_field<std::string>(spec, "model", "");
  e.auth_header = get_field<std::string>(spec, "auth_header", e.auth_header);
  e.auth_scheme = get_field<std::string>(spec, "auth_scheme", e.auth_scheme);
  e.token_env = get_field<std::string>(spec, "token_env", "");
  e.response_path = get_field<std::string>(spec, "response_path", e.response_path);
  e.timeout_seconds = get_field<int>(spec, "timeout_seconds", e.timeout_seconds);
  e.retry.attempts = get_field<int>(spec, "retry_attempts", e.retry.attempts);
  e.retry.initial_backoff = std::chrono::milliseconds(
      get_field<std::int64_t>(spec, "retry_backoff_ms", e.retry.initial_backoff.count()));
  return e;
}

struct Backends {
  std::shared_ptr<backend::CompletionBackend> vision, chat;
  std::shared_ptr<backend::EmbeddingBackend> embedding;
  std::shared_ptr<EntityClient> entities;
  std::string vision_model, chat_model;
};

std::shared_ptr<backend::CompletionBackend> make_completion(const RunConfig& c, const char* role,
                                                            const std::shared_ptr<backend::ResponseCache>& cache,
                                                            std::string& model) {
  auto it = c.backends.find(role);
  if (it == c.backends.end() || it->is_null()) return nullptr;
  const auto& spec = *it;
  const auto type = get_field<std::string>(spec, "type", "");
  model = get_field<std::string>(spec, "model", "");
  std::shared_ptr<backend::CompletionBackend> inner;
  if (type == "scripted") {
    auto script = opt_path(spec, "script", c.base_dir);
    if (!script) throw ValidationFailure(std::string("scripted ") + role + " backend needs a script path");
    inner = backend::ScriptedBackend::from_file(*script);
  } else if (type == "http") {
    inner = std::make_shared<backend::HttpCompletionBackend>(endpoint_from(spec, role));
  } else {
    throw ValidationFailure(std::string(role) + " backend type must be \"scripted\" or \"http\"");
  }
  if (cache) return std::make_shared<backend::CachedBackend>(inner, cache);
  return inner;
}

Backends make_backends(const RunConfig& c) {
  Backends b;
  std::shared_ptr<backend::ResponseCache> cache;
  if (c.cache) cache = std::make_shared<backend::ResponseCache>(*c.cache);
  b.vision = make_completion(c, "vision", cache, b.vision_model);
  b.chat = make_completion(c, "chat", cache, b.chat_model);

  auto emb = c.backends.find("embedding");
  if (emb == c.backends.end() || emb->is_null() || get_field<std::string>(*emb, "type", "hashing") == "hashing") {
    std::size_t dim = backend::HashingEmbedder::kDefaultDim;
    if (emb != c.backends.end() && !emb->is_null()) dim = get_field<std::size_t>(*emb, "dim", dim);
    b.embedding = std::make_shared<backend::HashingEmbedder>(dim);
  } else if (get_field<std::string>(*emb, "type", "") == "http") {
    b.embedding = std::make_shared<backend::HttpEmbeddingBackend>(endpoint_from(*emb, "embedding"));
  } else {
    throw ValidationFailure("embedding backend type must be \"hashing\" or \"http\"");
  }

  auto ent = c.backends.find("entities");
  if (ent != c.backends.end() && !ent->is_null()) {
    const auto type = get_field<std::string>(*ent, "type", "");
    if (type == "scripted") {
      auto client = std::make_shared<ScriptedEntityClient>(
          get_field<std::vector<std::string>>(*ent, "default", {}));
      for (auto& [image, names] : get_field<std::map<std::string, std::vector<std::string>>>(*ent, "images", {}))
        client->set(resolve_image(image, c.pipeline.image_root), names);
      b.entities = client;
    } else if (type == "http") {
      b.entities = std::make_shared<backend::HttpEntityClient>(endpoint_from(*ent, "entities"));
    } else {
      throw ValidationFailure("entities backend type must be \"scripted\" or \"http\"");
    }
  }
  return b;
}

// Input loading

template <typename T>
void report_errors(std::ostream& err, const fs::path& path, const IngestResult<T>& r) {
  for (const auto& e : r.errors) err << path.string() << ":" << e.line() << ": " << e.what() << "\n";
  for (const auto& w : r.warnings) err << path.string() << ": warning: " << w << "\n";
}

std::vector<Claim> load_claims_or_fail(const fs::path& path, std::ostream& err) {
  auto r = load_claims(path);
  report_errors(err, path, r);
  if (!r.ok()) throw ValidationFailure(std::to_string(r.errors.size()) + " schema error(s) in " + path.string());
  return std::move(r.value);
}

EvidenceStore load_evidence_or_fail(const std::optional<fs::path>& path, std::ostream& err) {
  if (!path) return {};
  require_input(path, "evidence");
  auto r = load_evidence(*path);
  report_errors(err, *path, r);
  if (!r.ok()) throw ValidationFailure(std::to_string(r.errors.size()) + " schema error(s) in " + path->string());
  return std::move(r.value);
}

template <typename T, typename Fn>
std::vector<T> load_rows(const fs::path& path, Fn&& from_json, std::ostream& err) {
  std::vector<T> rows;
  std::size_t errors = 0;
  io::for_each_jsonl(
      path,
      [&](std::size_t line, const json& j) {
        try {
          rows.push_back(from_json(j));
        } catch (const std::exception& e) {
          err << path.string() << ":" << line << ": " << e.what() << "\n";
          ++errors;
        }
      },
      [&](SchemaError e) {
        err << path.string() << ":" << e.line() << ": " << e.what() << "\n";
        ++errors;
      });
  if (errors) throw ValidationFailure(std::to_string(errors) + " schema error(s) in " + path.string());
  return rows;
}

std::string required_string(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string() || text::trim(j[key].get<std::string>()).empty())
    throw std::invalid_argument(std::string("missing or empty field '") + key + "'");
  return j[key].get<std::string>();
}

instructgen::CaptionPair pair_from_json(const json& j) {
  instructgen::CaptionPair p;
  p.image = required_string(j, "image");
  p.caption = required_string(j, "caption");
  if (j.contains("id") && j["id"].is_string()) p.source_id = j["id"].get<std::string>();
  return p;
}

instructgen::FakePairSource fake_from_json(const json& j) {
  instructgen::FakePairSource f;
  f.id = required_string(j, "id");
  f.cap_new = required_string(j, "cap_new");
  f.cap_ori = required_string(j, "cap_ori");
  f.image = required_string(j, "image");
  if (j.contains("basic_description") && j["basic_description"].is_string())
    f.basic_description = j["basic_description"].get<std::string>();
  return f;
}

json backend_ids(const Backends& b) {
  json ids = json::object();
  if (b.vision) ids["vision"] = b.vision->id();
  if (b.chat) ids["chat"] = b.chat->id();
  if (b.embedding) ids["embedding"] = b.embedding->id();
  if (b.entities) ids["entities"] = b.entities->id();
  return ids;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// Commands

int cmd_ingest(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto& claims_path = require_input(c.claims, "claims");
  bool ok = true;

  auto claims = load_claims(claims_path);
  report_errors(err, claims_path, claims);
  ok &= claims.ok();
  out << "claims: " << claims.value.size() << " valid, " << claims.errors.size() << " schema error(s)\n";
  std::size_t n_fake = 0, n_real = 0, n_unlabeled = 0;
  for (const auto& cl : claims.value) {
    if (!cl.gold_label) ++n_unlabeled;
    else if (*cl.gold_label == GoldLabel::Falsified) ++n_fake;
    else ++n_real;
  }
  out << "labels: " << n_fake << " fake, " << n_real << " real, " << n_unlabeled << " unlabeled\n";

  if (c.evidence) {
    const auto& ev_path = require_input(c.evidence, "evidence");
    auto ev = load_evidence(ev_path);
    report_errors(err, ev_path, ev);
    ok &= ev.ok();
    out << "evidence: " << ev.value.size() << " entries, " << ev.errors.size() << " schema error(s), "
        << ev.warnings.size() << " warning(s)\n";
    std::size_t covered = 0;
    for (const auto& cl : claims.value)
      if (auto e = ev.value.lookup(cl.id); e && !e->pages.empty()) ++covered;
    const auto total = claims.value.size();
    out << "evidence coverage: " << covered << "/" << total << " = "
        << (total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0) << "\n";
  }
  return ok ? kOk : kValidationFailure;
}

pipeline::PipelineContext make_context(const RunConfig& c, const Backends& b, const EvidenceStore& store) {
  pipeline::PipelineContext ctx;
  ctx.vision = b.vision;
  ctx.chat = b.chat;
  ctx.embedding = b.embedding;
  ctx.entity_client = b.entities;
  ctx.evidence = &store;
  ctx.config = c.pipeline;
  if (ctx.config.vision_model.empty()) ctx.config.vision_model = b.vision_model;
  if (ctx.config.chat_model.empty()) ctx.config.chat_model = b.chat_model;
  return ctx;
}

void print_outcome(std::ostream& out, const DetectionResult& r) {
  const auto& o = r.composed;
  out << "claim: " << r.claim_id << "\n";
  out << "verdict: " << (o.verdict ? to_string(*o.verdict) : "none") << " (" << to_string(o.parse_status) << ")\n";
  if (o.explanation.element) out << "element: " << o.explanation.element->str() << "\n";
  if (o.explanation.ent_t) out << "ent_t: " << *o.explanation.ent_t << "\n";
  if (o.explanation.ent_v) out << "ent_v: " << *o.explanation.ent_v << "\n";
  out << "evidence used: " << (r.evidence_used ? "yes" : "no") << "\n";
  out << "explanation: " << o.raw_response << "\n";
}

int cmd_detect(const RunConfig& c, const std::optional<std::string>& claim_id, std::ostream& out, std::ostream& err) {
  auto claims = load_claims_or_fail(require_input(c.claims, "claims"), err);
  const auto store = load_evidence_or_fail(c.evidence, err);
  if (claim_id) {
    std::erase_if(claims, [&](const Claim& cl) { return cl.id != *claim_id; });
    if (claims.empty()) throw ValidationFailure("no claim with id '" + *claim_id + "'");
  }
  if (claims.empty()) throw ValidationFailure("claims file holds no claims");

  const auto backends = make_backends(c);
  auto ctx = make_context(c, backends, store);
  try {
    ctx.validate();
  } catch (const PreconditionError& e) {
    throw ValidationFailure(e.what());
  }
  auto batch = pipeline::detect_batch(claims, ctx);

  std::vector<json> rows;
  for (const auto& r : batch.results) rows.push_back(io::to_json(r));
  const auto results_path = c.out / "results.jsonl";
  io::write_jsonl(results_path, rows);
  auto manifest = batch.manifest.to_json();
  manifest["backend_ids"] = backend_ids(backends);
  manifest["seed"] = c.seed;
  manifest["results"] = results_path.string();
  io::write_text(c.out / "manifest.json", manifest.dump(2) + "\n");

  if (claim_id) {
    print_outcome(out, batch.results.front());
  } else {
    out << "detected " << batch.results.size() << " claim(s), " << batch.manifest.n_failed << " failed, "
        << batch.manifest.evidence_used << " with evidence; cache hit rate "
        << fixed(batch.manifest.cache_hit_rate) << "\n";
    out << "results: " << results_path.string() << "\n";
  }
  for (const auto& r : batch.results)
    if (r.failed()) err << "claim " << r.claim_id << " failed: " << *r.error << "\n";
  return batch.manifest.n_failed > 0 && !c.keep_going ? kRuntimeFailure : kOk;
}

int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path results_path = c.results.value_or(c.out / "results.jsonl");
  if (!fs::exists(results_path)) throw ValidationFailure("results file not found: " + results_path.string());
  auto results = io::read_results(results_path);
  if (results.empty()) throw ValidationFailure("results file holds no results");

  metrics::GoldLabels labels;
  for (const auto& cl : load_claims_or_fail(require_input(c.claims, "claims"), err))
    if (cl.gold_label) labels[cl.id] = *cl.gold_label;
  std::vector<std::string> missing;
  for (const auto& r : results)
    if (!labels.count(r.claim_id)) missing.push_back(r.claim_id);
  if (!missing.empty()) {
    for (const auto& id : missing) err << "missing gold label for claim " << id << "\n";
    throw ValidationFailure(std::to_string(missing.size()) + " result(s) lack a gold label");
  }

  metrics::GoldExplanations golds;
  if (c.gold) golds = io::read_gold_explanations(require_input(c.gold, "gold"));

  const auto backends = make_backends(c);
  auto reports = metrics::build_subset_reports(results, labels, golds, *backends.embedding, c.subset_fractions, c.seed);
  const auto manifest_path = results_path.parent_path() / "manifest.json";
  json doc;
  doc["results"] = results_path.string();
  doc["seed"] = c.seed;
  doc["embedding_backend"] = backends.embedding->id();
  doc["prompt_catalog_checksum"] = prompts::PromptCatalog::builtin().checksum();
  doc["reports"] = json::array();
  for (auto& r : reports) {
    if (fs::exists(manifest_path)) r.manifest = manifest_path.string();
    doc["reports"].push_back(r.to_json());
  }
  io::write_text(c.out / "report.json", doc.dump(2) + "\n");
  io::write_text(c.out / "plot.csv", metrics::plot_csv(reports));

  for (const auto& r : reports) {
    out << "subset " << r.subset << ": n=" << r.accuracy.n_total << " acc_all=" << fixed(r.accuracy.acc_all)
        << " acc_fake=" << fixed(r.accuracy.acc_fake) << " acc_real=" << fixed(r.accuracy.acc_real);
    if (r.rouge_l) out << " rouge_l=" << fixed(*r.rouge_l);
    out << "\n";
  }
  out << "report: " << (c.out / "report.json").string() << "\n";
  return kOk;
}

int cmd_build_instructions(const RunConfig& c, int stage, std::ostream& out, std::ostream& err) {
  const auto& catalog = prompts::PromptCatalog::builtin();
  json manifest{{"stage", stage}, {"seed", c.seed}, {"prompt_catalog_checksum", catalog.checksum()}};
  std::vector<instructgen::InstructionRecord> records;
  int code = kOk;

  if (stage == 1) {
    const auto pairs = load_rows<instructgen::CaptionPair>(require_input(c.pairs, "pairs"), pair_from_json, err);
    if (pairs.empty()) throw ValidationFailure("pairs file holds no pairs");
    records = instructgen::build_stage1(pairs, c.seed, catalog);
    manifest["backend_ids"] = json::object();
    manifest["n_pairs"] = pairs.size();
  } else {
    auto fakes = load_rows<instructgen::FakePairSource>(require_input(c.fakes, "fakes"), fake_from_json, err);
    const auto reals = load_rows<instructgen::CaptionPair>(require_input(c.reals, "reals"), pair_from_json, err);
    const auto backends = make_backends(c);
    if (!backends.chat) throw ValidationFailure("stage 2 needs a chat backend");
    manifest["backend_ids"] = backend_ids(backends);

    std::size_t described = 0;
    for (std::size_t i = 0; i < fakes.size(); ++i) {
      auto& f = fakes[i];
      if (!text::trim(f.basic_description).empty()) continue;
      if (!backends.vision) throw ValidationFailure("fake '" + f.id + "' has no basic_description and no vision backend is configured");
      try {
        f.basic_description = pipeline::describe(resolve_image(f.image, c.pipeline.image_root), *backends.vision,
                                                 rng::derive_seed(c.seed, i), backends.vision_model, catalog);
        ++described;
      } catch (const Error& e) {
        err << "describe failed for " << f.id << ": " << e.what() << "\n";
      }
    }

    instructgen::Stage2Options options{c.seed, c.pipeline.concurrency, backends.chat_model};
    auto result = instructgen::build_stage2(fakes, reals, *backends.chat, options, catalog);
    records = std::move(result.records);
    auto skipped = json::array();
    for (const auto& s : result.log.skipped) {
      skipped.push_back({{"index", s.index}, {"source_id", s.source_id}, {"reason", s.reason}, {"detail", s.detail}});
      err << "skipped " << s.source_id << ": " << s.reason << " (" << s.detail << ")\n";
    }
    manifest["generator_model_id"] = backends.chat_model.empty() ? backends.chat->id() : backends.chat_model;
    manifest["described"] = described;
    manifest["attempted"] = result.log.attempted;
    manifest["generated"] = result.log.generated;
    manifest["skipped"] = std::move(skipped);
    if (result.log.attempted > 0 && result.log.generated == 0) code = kRuntimeFailure;
  }

  const auto report = instructgen::validate_records(records);
  json counts = report.kind_counts;
  manifest["n_records"] = records.size();
  manifest["kind_counts"] = counts;
  manifest["valid"] = report.ok;
  for (const auto& v : report.violations) err << "record " << v.record_id << ": " << v.message << "\n";
  for (const auto& d : report.duplicates) err << "records " << d.first << " and " << d.second << " duplicate (image, target)\n";

  std::vector<json> rows;
  for (const auto& r : records) rows.push_back(io::to_json(r));
  const auto stem = "instructions_stage" + std::to_string(stage);
  io::write_jsonl(c.out / (stem + ".jsonl"), rows);
  io::write_text(c.out / (stem + ".manifest.json"), manifest.dump(2) + "\n");

  out << "stage " << stage << ": wrote " << records.size() << " record(s) to " << (c.out / (stem + ".jsonl")).string()
      << "\n";
  if (code == kOk && !report.ok) code = kValidationFailure;
  return code;
}

}  // namespace

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw PreconditionError("config must be a JSON object");
  RunConfig c;
  c.base_dir = base_dir;
  c.claims = opt_path(j, "claims", base_dir);
  c.evidence = opt_path(j, "evidence", base_dir);
  c.gold = opt_path(j, "gold", base_dir);
  c.pairs = opt_path(j, "pairs", base_dir);
  c.fakes = opt_path(j, "fakes", base_dir);
  c.reals = opt_path(j, "reals", base_dir);
  c.results = opt_path(j, "results", base_dir);
  c.cache = opt_path(j, "cache", base_dir);
  if (auto p = opt_path(j, "out", base_dir)) c.out = *p;
  if (auto p = opt_path(j, "image_root", base_dir)) c.pipeline.image_root = *p;

  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw PreconditionError("config field 'seed' must be an unsigned 64-bit integer");
    c.seed = it->get<std::uint64_t>();
  }
  auto& p = c.pipeline;
  p.evidence.max_pages = get_field<std::size_t>(j, "max_pages", p.evidence.max_pages);
  p.evidence.page_chars = get_field<std::size_t>(j, "page_chars", p.evidence.page_chars);
  p.concurrency = get_field<std::size_t>(j, "concurrency", p.concurrency);
  if (p.concurrency < 1) throw PreconditionError("config field 'concurrency' must be at least 1");
  if (auto s = get_field<std::string>(j, "entity_source", ""); !s.empty()) {
    auto v = pipeline::entity_source_from_string(s);
    if (!v) throw PreconditionError("entity_source must be stored, live or none");
    p.entity_source = *v;
  }
  if (auto s = get_field<std::string>(j, "compose_mode", ""); !s.empty()) {
    auto v = pipeline::compose_mode_from_string(s);
    if (!v) throw PreconditionError("compose_mode must be model or shortcut");
    p.compose_mode = *v;
  }
  c.subset_fractions = get_field<std::vector<double>>(j, "subset_fractions", c.subset_fractions);
  c.keep_going = get_field<bool>(j, "keep_going", false);
  if (auto it = j.find("backends"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw PreconditionError("config field 'backends' must be an object");
    c.backends = *it;
  }
  return c;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-context image/caption misinformation checker"};
  app.require_subcommand(1);

  Flags f;
  OptionSet ingest_o, build_o, detect_o, eval_o;

  auto* ingest = app.add_subcommand("ingest", "validate claims and evidence files");
  add_common(*ingest, f, ingest_o);

  auto* build = app.add_subcommand("build-instructions", "generate instruction-tuning records");
  add_common(*build, f, build_o);
  build->add_option("--stage", f.stage, "1 (caption alignment) or 2 (out-of-context)")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  build_o.opts["pairs"] = build->add_option("--pairs", f.pairs, "image-caption pairs for stage 1");
  build_o.opts["fakes"] = build->add_option("--fakes", f.fakes, "mismatched pairs for stage 2");
  build_o.opts["reals"] = build->add_option("--reals", f.reals, "real pairs for stage 2 balancing");

  auto* detect = app.add_subcommand("detect", "run the detection pipeline");
  add_common(*detect, f, detect_o);
  detect_o.opts["entity-source"] = detect->add_option("--entity-source", f.entity_source, "stored|live|none")
                                       ->check(CLI::IsMember({"stored", "live", "none"}));
  detect_o.opts["compose-mode"] =
      detect->add_option("--compose-mode", f.compose_mode, "model|shortcut")->check(CLI::IsMember({"model", "shortcut"}));
  detect_o.opts["max-pages"] =
      detect->add_option("--max-pages", f.max_pages, "evidence pages per prompt")->check(CLI::PositiveNumber);
  detect_o.opts["claim-id"] = detect->add_option("--claim-id", f.claim_id, "run one claim and print its explanation");
  detect->add_flag("--keep-going", f.keep_going, "exit 0 even when some claims failed");

  auto* evaluate = app.add_subcommand("evaluate", "score a results file");
  add_common(*evaluate, f, eval_o);
  eval_o.opts["results"] = evaluate->add_option("--results", f.results, "results JSON Lines file");
  eval_o.opts["gold"] = evaluate->add_option("--gold", f.gold, "gold explanations JSON Lines file");
  eval_o.opts["subset-fraction"] = evaluate->add_option("--subset-fraction", f.subset_fractions, "evaluate a seeded subset")
                                       ->check(CLI::Range(0.0, 1.0));

  std::vector<const char*> argv{"oocheck"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationFailure;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(load_config(f, ingest_o), out, err);
    if (build->parsed()) return cmd_build_instructions(load_config(f, build_o), f.stage, out, err);
    if (detect->parsed()) {
      auto claim_id = detect_o.given("claim-id") ? std::optional(f.claim_id) : std::nullopt;
      return cmd_detect(load_config(f, detect_o), claim_id, out, err);
    }
    if (evaluate->parsed()) return cmd_evaluate(load_config(f, eval_o), out, err);
  } catch (const ValidationFailure& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const FileUnreadable& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}

}  // namespace oocheck::cli
