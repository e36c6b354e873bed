#include "oocheck/instructgen.hpp"

#include <atomic>
#include <map>
#include <optional>
#include <thread>

#include "oocheck/answer_format.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/parser.hpp"
#include "oocheck/text.hpp"

namespace oocheck::instructgen {

namespace {

// Stream id for the real-sample draw, independent of per-record seeds.
constexpr std::uint64_t kRealSampleStream = 0x5245414C53ULL;

struct ItemOutcome {
  std::optional<InstructionRecord> record;
  std::optional<GenerationSkip> skip;
};

GenerationSkip make_skip(std::size_t index, const FakePairSource& src, std::string reason, std::string detail) {
  return {index, src.id, std::move(reason), std::move(detail)};
}

ItemOutcome generate_one(std::size_t index, const FakePairSource& src, backend::CompletionBackend& chat,
                         const std::string& model_id, const prompts::PromptCatalog& catalog) {
  if (text::trim(src.cap_new).empty() || text::trim(src.cap_ori).empty() || text::trim(src.image).empty() ||
      text::trim(src.basic_description).empty())
    return {std::nullopt, make_skip(index, src, "InvalidSource", "empty caption, image or description")};
  if (src.cap_new == src.cap_ori)
    return {std::nullopt, make_skip(index, src, "InvalidSource", "cap_new equals cap_ori")};

  try {
    backend::CompletionRequest request;
    request.model_id = model_id;
    request.messages.push_back(
        {backend::Role::User, prompts::render_ooc_gen_prompt(src.cap_ori, src.cap_new, src.basic_description, catalog),
         std::nullopt});
    auto response = backend::complete(chat, request);
    auto gen = parser::parse_generated_inconsistency(response.text);

    InstructionRecord rec;
    rec.image = src.image;
    rec.prompt = prompts::render_internal_prompt(src.cap_new, {}, catalog);
    rec.target = parser::render_fake_target(gen.element, gen.ent_t, gen.ent_v);
    rec.kind = RecordKind::OOCFake;
    rec.provenance = {{"generator_model_id", model_id.empty() ? chat.id() : model_id},
                      {"source_id", src.id},
                      {"element", gen.element.str()},
                      {"ent_t", gen.ent_t},
                      {"ent_v", gen.ent_v}};
    return {std::move(rec), std::nullopt};
  } catch (const MissingField& e) {
    return {std::nullopt, make_skip(index, src, "MissingField", e.field())};
  } catch (const InvalidElement& e) {
    return {std::nullopt, make_skip(index, src, "InvalidElement", e.what())};
  } catch (const InvalidField& e) {
    return {std::nullopt, make_skip(index, src, "InvalidField", e.what())};
  } catch (const TransportError& e) {
    return {std::nullopt, make_skip(index, src, "TransportError", e.what())};
  } catch (const BackendRefused& e) {
    return {std::nullopt, make_skip(index, src, "BackendRefused", e.what())};
  } catch (const ScriptMiss& e) {
    return {std::nullopt, make_skip(index, src, "ScriptMiss", e.what())};
  }
}

}  // namespace

std::string_view to_string(RecordKind k) {
  switch (k) {
    case RecordKind::CaptionAlign: return "caption_align";
    case RecordKind::OOCFake: return "ooc_fake";
    case RecordKind::OOCReal: return "ooc_real";
  }
  return "caption_align";
}

std::optional<RecordKind> record_kind_from_string(std::string_view s) {
  if (s == "caption_align") return RecordKind::CaptionAlign;
  if (s == "ooc_fake") return RecordKind::OOCFake;
  if (s == "ooc_real") return RecordKind::OOCReal;
  return std::nullopt;
}

std::string conversation_text(const InstructionRecord& record) {
  return "Human: <image> " + record.prompt + " <STOP>; Model: " + record.target + " <STOP>";
}

std::vector<InstructionRecord> build_stage1(const std::vector<CaptionPair>& pairs, std::uint64_t seed,
                                            const prompts::PromptCatalog& catalog) {
  if (pairs.empty()) throw EmptyDataset("stage-1 build needs at least one image-caption pair");
  std::vector<InstructionRecord> records;
  records.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    if (text::trim(pair.caption).empty())
      throw PreconditionError("pair " + std::to_string(i) + " has an empty caption");
    InstructionRecord rec;
    rec.image = pair.image;
    rec.prompt = prompts::sample_caption_question(rng::derive_seed(seed, i), catalog);
    rec.target = pair.caption;
    rec.kind = RecordKind::CaptionAlign;
    rec.provenance["source_index"] = std::to_string(i);
    if (!pair.source_id.empty()) rec.provenance["source_id"] = pair.source_id;
    records.push_back(std::move(rec));
  }
  return records;
}

Stage2Output build_stage2(const std::vector<FakePairSource>& fakes, const std::vector<CaptionPair>& reals,
                          backend::CompletionBackend& chat, const Stage2Options& options,
                          const prompts::PromptCatalog& catalog) {
  std::vector<ItemOutcome> items(fakes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < fakes.size(); i = next++)
      items[i] = generate_one(i, fakes[i], chat, options.model_id, catalog);
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.concurrency, fakes.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  Stage2Output out;
  out.log.attempted = fakes.size();
  for (auto& item : items) {
    if (item.record) out.records.push_back(std::move(*item.record));
    if (item.skip) out.log.skipped.push_back(std::move(*item.skip));
  }
  out.log.generated = out.records.size();

  const std::size_t n_fake = out.records.size();
  if (reals.size() < n_fake)
    throw InsufficientReals("need " + std::to_string(n_fake) + " real pairs to balance, have " +
                            std::to_string(reals.size()));
  for (auto idx : rng::sample_without_replacement(reals.size(), n_fake, rng::derive_seed(options.seed, kRealSampleStream))) {
    const auto& pair = reals[idx];
    InstructionRecord rec;
    rec.image = pair.image;
    rec.prompt = prompts::render_internal_prompt(pair.caption, {}, catalog);
    rec.target = std::string(answer::kRealTarget);
    rec.kind = RecordKind::OOCReal;
    rec.provenance["source_index"] = std::to_string(idx);
    if (!pair.source_id.empty()) rec.provenance["source_id"] = pair.source_id;
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::string record_id(const InstructionRecord& record, std::size_t index) {
  auto it = record.provenance.find("source_id");
  if (it != record.provenance.end() && !it->second.empty()) return it->second;
  return "#" + std::to_string(index);
}

ValidationReport validate_records(const std::vector<InstructionRecord>& records) {
  ValidationReport report;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto violation = [&](std::string msg) { report.violations.push_back({i, record_id(r, i), std::move(msg)}); };
    ++report.kind_counts[std::string(to_string(r.kind))];

    if (text::trim(r.prompt).empty()) violation("empty prompt");
    if (text::trim(r.target).empty()) violation("empty target");

    if (r.kind == RecordKind::OOCFake) {
      ++report.fake_count;
      auto field = [&](const char* key) -> std::string {
        auto it = r.provenance.find(key);
        return it == r.provenance.end() ? std::string() : it->second;
      };
      auto element = field("element"), ent_t = field("ent_t"), ent_v = field("ent_v");
      if (element.empty() || ent_t.empty() || ent_v.empty()) {
        violation("OOCFake provenance lacks element/ent_t/ent_v");
      } else {
        try {
          if (r.target != parser::render_fake_target(canonicalize_element(element), ent_t, ent_v))
            violation("OOCFake target does not match its provenance triple");
        } catch (const Error& e) {
          violation(std::string("invalid OOCFake provenance: ") + e.what());
        }
      }
    } else if (r.kind == RecordKind::OOCReal) {
      ++report.real_count;
      if (r.target != answer::kRealTarget) violation("OOCReal target is not the fixed real-sample sentence");
    }

    auto [it, fresh] = seen.emplace(std::make_pair(r.image, r.target), i);
    if (!fresh) report.duplicates.push_back({it->second, i});
  }

  if (report.fake_count != report.real_count)
    report.violations.push_back({records.size(), "-",
                                 "unbalanced OOC records: " + std::to_string(report.fake_count) + " fake vs " +
                                     std::to_string(report.real_count) + " real"});
  report.ok = report.violations.empty() && report.duplicates.empty();
  return report;
}

}  // namespace oocheck::instructgen
