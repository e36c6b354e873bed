#include <doctest.h>

#include <cstdio>

#include "oocheck/answer_format.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/parser.hpp"
#include "oocheck/pipeline.hpp"
#include "oocheck/serialization.hpp"
#include "test_support.hpp"

using namespace oocheck;
using namespace oocheck::pipeline;
using backend::ScriptedBackend;

namespace {

const std::string kHarryFake = parser::render_fake_target(NewsElement(NewsElement::Kind::Person),
                                                          "Mayor Vincent Gray", "Harry Thomas Jr");
const std::string kFakeLead(answer::kFakeLead);
const std::string kReal(answer::kRealAnswer);

std::string tag(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "claim-%02zu", i);
  return buf;
}

// n claims with images on disk; even claims have two evidence pages.
// Vision says Fake for multiples of 3; the evidence check says Fake for
// multiples of 4; the composer agrees with the evidence check.
struct World {
  testsupport::TempDir dir;
  std::vector<Claim> claims;
  EvidenceStore store;
  std::shared_ptr<ScriptedBackend> vision, chat;

  explicit World(std::size_t n) {
    std::vector<ScriptedBackend::Rule> vrules, crules;
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = tag(i);
      testsupport::write_file(dir / (t + ".jpg"), "pixels of " + t);
      claims.push_back({t, "Caption " + t + " about the council meeting.", t + ".jpg", std::nullopt, std::nullopt});
      vrules.push_back({"Caption " + t + " ", i % 3 == 0 ? kHarryFake : kReal});
      if (i % 2 == 0) {
        store.insert({t,
                      {{"https://a.example/" + t, std::nullopt, "First page for " + t},
                       {"https://b.example/" + t, std::nullopt, "Second page"}},
                      {"Harry Thomas Jr"}});
        const auto ext = i % 4 == 0 ? kFakeLead + " The evidence describes another event." : kReal;
        crules.push_back({"News caption: Caption " + t + " about the council meeting.\nEvidence 1", ext});
        crules.push_back({"News caption: Caption " + t + " about the council meeting.\nImage-text", ext});
      }
    }
    vision = std::make_shared<ScriptedBackend>("vision-mock", vrules);
    chat = std::make_shared<ScriptedBackend>("chat-mock", crules);
  }

  PipelineContext ctx(std::size_t concurrency = 1) const {
    PipelineContext c;
    c.vision = vision;
    c.chat = chat;
    c.evidence = &store;
    c.config.image_root = dir.path();
    c.config.concurrency = concurrency;
    return c;
  }
};

std::string serialize(const std::vector<DetectionResult>& results) {
  std::string s;
  for (const auto& r : results) s += io::to_json(r).dump() + "\n";
  return s;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("internal check on a consistent claim") {
  World w(1);
  auto ctx = w.ctx();
  auto vision = std::make_shared<ScriptedBackend>(
      "v", std::vector<ScriptedBackend::Rule>{{"News caption:", "Yes, the image is rightly used."}});
  ctx.vision = vision;
  auto out = internal_check(w.claims[0], ctx);
  CHECK(out.stage == Stage::Internal);
  CHECK(out.verdict == Verdict::Real);
  CHECK(out.parse_status == ParseStatus::Structured);
  auto reqs = vision->requests();
  REQUIRE(reqs.size() == 1);
  const auto& msg = reqs[0].messages.at(0);
  CHECK(msg.image == (w.dir / "claim-00.jpg").string());
  CHECK(msg.text.find("Detected visual entities in the image: Harry Thomas Jr") != std::string::npos);
}

TEST_CASE("the Harry Thomas Jr case is flagged as a person mismatch") {
  World w(1);
  auto r = detect(w.claims[0], w.ctx());
  CHECK(r.internal.verdict == Verdict::Fake);
  CHECK(r.internal.explanation.element == NewsElement(NewsElement::Kind::Person));
  CHECK(r.internal.explanation.ent_v == "Harry Thomas Jr");
  REQUIRE(r.external.has_value());
  CHECK(r.external->verdict == Verdict::Fake);
  CHECK(r.evidence_used);
  CHECK(r.composed.stage == Stage::Composed);
  CHECK(r.composed.verdict == Verdict::Fake);
  CHECK_FALSE(r.failed());
  CHECK(r.backend_calls == 3);
}

TEST_CASE("entity source only changes the entity line") {
  World w(1);
  auto stored = w.ctx();
  auto none = w.ctx();
  none.config.entity_source = EntitySource::None;
  internal_check(w.claims[0], stored);
  internal_check(w.claims[0], none);
  auto reqs = w.vision->requests();
  REQUIRE(reqs.size() == 2);
  auto with = reqs[0].messages[0].text;
  auto without = reqs[1].messages[0].text;
  const std::string line = "Detected visual entities in the image: Harry Thomas Jr\n";
  REQUIRE(with.find(line) != std::string::npos);
  CHECK(with.replace(with.find(line), line.size(), "") == without);
  CHECK(reqs[0].messages[0].image == reqs[1].messages[0].image);
}

TEST_CASE("live entities fall back to stored ones when the client fails") {
  World w(1);
  auto ctx = w.ctx();
  ctx.config.entity_source = EntitySource::Live;
  CHECK_THROWS_AS(ctx.validate(), PreconditionError);
  auto client = std::make_shared<ScriptedEntityClient>(std::vector<std::string>{"podium", "Podium", "crowd"});
  ctx.entity_client = client;
  CHECK(resolve_entities(w.claims[0], ctx) == std::vector<std::string>{"podium", "crowd"});
  client->fail_with("reverse search unavailable");
  CHECK(resolve_entities(w.claims[0], ctx) == std::vector<std::string>{"Harry Thomas Jr"});
  auto r = detect(w.claims[0], ctx);
  CHECK_FALSE(r.failed());
}

TEST_CASE("external check skips claims without usable evidence") {
  World w(2);
  auto ctx = w.ctx();
  CHECK_FALSE(external_check(w.claims[1], ctx).has_value());
  w.store.insert({"claim-01", {}, {}});
  CHECK_FALSE(external_check(w.claims[1], ctx).has_value());
  CHECK(w.chat->network_calls() == 0);

  auto r = detect(w.claims[1], ctx);
  CHECK_FALSE(r.external.has_value());
  CHECK_FALSE(r.evidence_used);
  CHECK(r.composed.verdict == r.internal.verdict);
  CHECK(r.composed.verdict == Verdict::Real);
  CHECK(w.chat->network_calls() == 0);
}

TEST_CASE("external check sends one request with at most max_pages blocks") {
  World w(1);
  Evidence e{"claim-00", {}, {}};
  for (int i = 0; i < 5; ++i) e.pages.push_back({"https://p" + std::to_string(i), std::nullopt, "page " + std::to_string(i)});
  w.store.insert(e);
  auto ctx = w.ctx();
  ctx.config.evidence.max_pages = 3;
  auto out = external_check(w.claims[0], ctx);
  REQUIRE(out.has_value());
  CHECK(out->stage == Stage::External);
  CHECK(out->verdict == Verdict::Fake);
  auto reqs = w.chat->requests();
  REQUIRE(reqs.size() == 1);
  CHECK_FALSE(reqs[0].messages[0].image.has_value());
  const auto& text = reqs[0].messages[0].text;
  CHECK(text.find("Evidence 3 (from https://p2): page 2") != std::string::npos);
  CHECK(text.find("Evidence 4") == std::string::npos);
}

TEST_CASE("compose honors the composer and falls back on nonsense") {
  World w(1);
  auto ctx = w.ctx();
  auto internal = parser::parse_verdict(kReal, Stage::Internal);
  auto external = parser::parse_verdict(kFakeLead, Stage::External);

  auto arbiter = std::make_shared<ScriptedBackend>(
      "composer", std::vector<ScriptedBackend::Rule>{{"Two analyses", kFakeLead + " The pages show a 2014 event."}});
  ctx.chat = arbiter;
  auto composed = compose(w.claims[0], internal, external, ctx);
  CHECK(composed.stage == Stage::Composed);
  CHECK(composed.verdict == Verdict::Fake);
  CHECK(composed.parse_status == ParseStatus::Structured);
  REQUIRE(arbiter->requests().size() == 1);
  CHECK(arbiter->requests()[0].messages[0].text.find("Claim-evidence relevance analysis: " + kFakeLead) !=
        std::string::npos);

  ctx.chat = std::make_shared<ScriptedBackend>("composer", std::vector<ScriptedBackend::Rule>{{"Two", "Unclear."}});
  auto fallback = compose(w.claims[0], internal, external, ctx);
  CHECK(fallback.verdict == Verdict::Real);
  CHECK(fallback.parse_status == ParseStatus::FallbackClassified);
  CHECK(fallback.raw_response == "Unclear.");

  ctx.chat = std::make_shared<ScriptedBackend>(
      "composer", std::vector<ScriptedBackend::Rule>{{"Two", "", ScriptedBackend::Fault::Transport}});
  auto broken = compose(w.claims[0], internal, external, ctx);
  CHECK(broken.verdict == Verdict::Real);
  CHECK(broken.parse_status == ParseStatus::FallbackClassified);

  auto shortcut_ctx = w.ctx();
  shortcut_ctx.config.compose_mode = ComposeMode::Shortcut;
  auto calls = w.chat->network_calls();
  auto shortcut = compose(w.claims[0], internal, external, shortcut_ctx);
  CHECK(shortcut.verdict == Verdict::Real);
  CHECK(shortcut.stage == Stage::Composed);
  CHECK(w.chat->network_calls() == calls);

  auto absent = compose(w.claims[0], internal, std::nullopt, w.ctx());
  CHECK(absent.verdict == internal.verdict);
  CHECK(absent.explanation == internal.explanation);
}

TEST_CASE("stage failures are recorded, not thrown") {
  World w(1);
  auto ctx = w.ctx();
  w.claims[0].image = "gone.jpg";
  auto r = detect(w.claims[0], ctx);
  CHECK(r.failed());
  CHECK(r.error->starts_with("internal:"));
  CHECK_FALSE(r.composed.verdict.has_value());
  CHECK(r.internal.raw_response.starts_with("[stage-error] ImageUnavailable"));
  CHECK(w.vision->network_calls() == 0);

  World t(1);
  auto tctx = t.ctx();
  tctx.chat = std::make_shared<ScriptedBackend>(
      "chat", std::vector<ScriptedBackend::Rule>{{"webpages", "", ScriptedBackend::Fault::Transport}});
  auto r2 = detect(t.claims[0], tctx);
  CHECK(r2.failed());
  REQUIRE(r2.external.has_value());
  CHECK_FALSE(r2.external->verdict.has_value());
  CHECK(r2.external->raw_response.starts_with("[stage-error] TransportError"));
  CHECK_FALSE(r2.evidence_used);
  CHECK(r2.composed.verdict == r2.internal.verdict);
}

TEST_CASE("batch results keep input order under any worker count") {
  World w(20);
  auto serial = detect_batch(w.claims, w.ctx(1));
  REQUIRE(serial.results.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(serial.results[i].claim_id == tag(i));

  World w8(20);
  auto parallel = detect_batch(w8.claims, w8.ctx(8));
  CHECK(serialize(serial.results) == serialize(parallel.results));
  CHECK(serialize(serial.results) == serialize(detect_batch(w.claims, w.ctx(1)).results));

  const auto& m = serial.manifest;
  CHECK(m.n_claims == 20);
  CHECK(m.n_failed == 0);
  CHECK(m.evidence_used == 10);
  CHECK(m.prompt_catalog_checksum == prompts::PromptCatalog::builtin().checksum());
  CHECK(m.backend_ids.at("vision") == "vision-mock");
  CHECK(m.stage_counts.at("internal.fake") == 7);
  CHECK(m.stage_counts.at("external.skipped_no_entry") == 10);
  // 0, 4, 8, 12, 16 through the evidence; 3, 9, 15 without evidence
  CHECK(m.stage_counts.at("composed.fake") == 8);
  CHECK(m.model_requests == 20 + 10 + 10);
  CHECK(m.network_calls == 40);
  CHECK(m.cache_hit_rate == 0.0);
  auto j = m.to_json();
  CHECK(j["config"]["concurrency"] == 1);
  CHECK(j.contains("cache_hit_rate"));
}

TEST_CASE("a cached rerun makes no network calls") {
  testsupport::TempDir cache_dir;
  World w(20);
  auto wrap = [&](const std::shared_ptr<ScriptedBackend>& b) {
    return std::make_shared<backend::CachedBackend>(b, std::make_shared<backend::ResponseCache>(cache_dir.path()));
  };
  auto ctx = w.ctx(4);
  ctx.vision = wrap(w.vision);
  ctx.chat = wrap(w.chat);
  auto first = detect_batch(w.claims, ctx);
  CHECK(first.manifest.network_calls == 40);

  World again(20);
  auto ctx2 = w.ctx(4);
  ctx2.vision = wrap(again.vision);
  ctx2.chat = wrap(again.chat);
  auto second = detect_batch(w.claims, ctx2);
  CHECK(second.manifest.network_calls == 0);
  CHECK(second.manifest.cache_hit_rate == 1.0);
  CHECK(again.vision->network_calls() == 0);
  CHECK(again.chat->network_calls() == 0);
  CHECK(serialize(first.results) == serialize(second.results));
  for (const auto& r : second.results) CHECK(r.backend_calls == 0);
}

TEST_CASE("one missing image fails one claim") {
  World w(20);
  std::filesystem::remove(w.dir / "claim-07.jpg");
  auto out = detect_batch(w.claims, w.ctx(3));
  CHECK(out.manifest.n_failed == 1);
  for (const auto& r : out.results) CHECK(r.failed() == (r.claim_id == "claim-07"));
}

TEST_CASE("context validation") {
  World w(1);
  auto ctx = w.ctx();
  CHECK_NOTHROW(ctx.validate());
  ctx.config.concurrency = 0;
  CHECK_THROWS_AS(ctx.validate(), PreconditionError);
  ctx = w.ctx();
  ctx.chat.reset();
  CHECK_THROWS_AS(detect(w.claims[0], ctx), PreconditionError);
  CHECK_THROWS_AS(detect_batch({}, w.ctx()), PreconditionError);
  CHECK(entity_source_from_string("live") == EntitySource::Live);
  CHECK(compose_mode_from_string("shortcut") == ComposeMode::Shortcut);
  CHECK_FALSE(compose_mode_from_string("vote").has_value());
}

TEST_CASE("describe answers a sampled question about the image") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "img.jpg", "pixels");
  ScriptedBackend vision("v", {}, "A man at a podium.");
  const auto img = (dir / "img.jpg").string();
  CHECK(describe(img, vision, 3) == "A man at a podium.");
  CHECK(describe(img, vision, 3) == describe(img, vision, 3));
  auto reqs = vision.requests();
  CHECK(reqs[0].messages[0].text == prompts::sample_caption_question(3));
  CHECK(reqs[0].messages[0].image == img);

  auto before = vision.network_calls();
  CHECK_THROWS_AS(describe((dir / "missing.jpg").string(), vision, 3), ImageUnavailable);
  CHECK(vision.network_calls() == before);
}

}
