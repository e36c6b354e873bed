#include <doctest.h>

#include "oocheck/errors.hpp"
#include "oocheck/parser.hpp"
#include "oocheck/serialization.hpp"
#include "test_support.hpp"

using namespace oocheck;
using nlohmann::json;

TEST_SUITE("serialization") {

TEST_CASE("claims round trip") {
  Claim full{"c1", "Harry Thomas Jr at a press conference", "img/c1.jpg", GoldLabel::Falsified, Split::Val};
  Claim bare{"c2", "caption", "https://x.example/c2.jpg", std::nullopt, std::nullopt};
  for (const auto& c : {full, bare}) CHECK(io::claim_from_json(io::to_json(c)) == c);
  CHECK(io::to_json(full)["label"] == "fake");
  CHECK(io::to_json(bare)["label"].is_null());
  CHECK_FALSE(io::to_json(bare).contains("split"));
}

TEST_CASE("claim schema violations") {
  CHECK_THROWS_AS(io::claim_from_json(json::parse(R"({"caption": "c", "image": "i"})")), std::invalid_argument);
  CHECK_THROWS_AS(io::claim_from_json(json::parse(R"({"id": 3, "caption": "c", "image": "i"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(io::claim_from_json(json::parse(R"({"id": "a", "caption": "c", "image": "i", "split": "dev"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(io::claim_from_json(json::parse("[1, 2]")), std::invalid_argument);
}

TEST_CASE("evidence round trip") {
  Evidence e{"c1",
             {{"https://a.example", "Title", "body text"}, {"https://b.example", std::nullopt, "more"}},
             {"Harry Thomas Jr", "podium"}};
  CHECK(io::evidence_from_json(io::to_json(e)) == e);
  Evidence empty{"c2", {}, {}};
  CHECK(io::evidence_from_json(io::to_json(empty)) == empty);
  CHECK_THROWS_AS(io::evidence_from_json(json::parse(R"({"claim_id": "c", "pages": {}})")), std::invalid_argument);
  CHECK_THROWS_AS(io::evidence_from_json(json::parse(R"({"claim_id": "c", "visual_entities": [1]})")),
                  std::invalid_argument);
}

TEST_CASE("detection results round trip without telemetry") {
  DetectionResult r;
  r.claim_id = "c1";
  r.internal = parser::parse_verdict(
      parser::render_fake_target(NewsElement(NewsElement::Kind::Person), "Urs Rohner", "Chris Huhne"),
      Stage::Internal);
  r.external = parser::parse_verdict("It is rightly used.", Stage::External);
  r.composed = parser::parse_verdict("Yes, the image is rightly used.", Stage::Composed);
  r.evidence_used = true;
  r.backend_calls = 3;

  auto j = io::to_json(r);
  CHECK_FALSE(j.contains("backend_calls"));
  CHECK(j["failed"] == false);
  CHECK(j["internal"]["explanation"]["element"] == "person");
  CHECK(j["external"]["parse_status"] == "fallback_classified");

  auto back = io::detection_from_json(j);
  CHECK(back.claim_id == r.claim_id);
  CHECK(back.internal == r.internal);
  CHECK(back.external == r.external);
  CHECK(back.composed == r.composed);
  CHECK(back.evidence_used);
  CHECK(back.backend_calls == 0);
  CHECK_FALSE(back.error.has_value());

  DetectionResult failed;
  failed.claim_id = "c2";
  failed.internal.raw_response = "[stage-error] ImageUnavailable: missing";
  failed.composed = failed.internal;
  failed.composed.stage = Stage::Composed;
  failed.error = "internal: missing";
  auto fj = io::to_json(failed);
  CHECK(fj["failed"] == true);
  CHECK(fj["external"].is_null());
  auto fb = io::detection_from_json(fj);
  CHECK(fb.error == failed.error);
  CHECK_FALSE(fb.external.has_value());
  CHECK(fb.composed == failed.composed);
}

TEST_CASE("outcome schema violations") {
  auto j = io::to_json(testsupport::outcome(Stage::Internal, Verdict::Real));
  j["stage"] = "final";
  CHECK_THROWS_AS(io::outcome_from_json(j), std::invalid_argument);
  j["stage"] = "internal";
  j["parse_status"] = "ok";
  CHECK_THROWS_AS(io::outcome_from_json(j), std::invalid_argument);
  j["parse_status"] = "structured";
  j["verdict"] = "unsure";
  CHECK_THROWS_AS(io::outcome_from_json(j), std::invalid_argument);
}

TEST_CASE("instruction records round trip") {
  instructgen::InstructionRecord r{"img.jpg", "prompt", "target", instructgen::RecordKind::OOCFake,
                                   {{"element", "person"}, {"source_id", "f1"}}};
  auto j = io::to_json(r);
  CHECK(j["kind"] == "ooc_fake");
  CHECK(io::record_from_json(j) == r);
  j["kind"] = "stage3";
  CHECK_THROWS_AS(io::record_from_json(j), std::invalid_argument);
}

TEST_CASE("gold explanations") {
  auto g = io::gold_from_json(json::parse(R"({"claim_id": "c", "element": "Person", "ent_t": "A", "ent_v": "B"})"));
  CHECK(g.element == NewsElement(NewsElement::Kind::Person));
  CHECK(g.reference_text == parser::render_fake_target(g.element, "A", "B"));
  CHECK_THROWS_AS(io::gold_from_json(json::parse(R"({"claim_id": "c", "element": "person", "ent_t": "A"})")),
                  std::invalid_argument);
}

TEST_CASE("JSON Lines files") {
  testsupport::TempDir dir;
  io::write_jsonl(dir / "sub/rows.jsonl", {json{{"a", 1}}, json{{"b", "two"}}});
  CHECK(testsupport::read_file(dir / "sub/rows.jsonl") == "{\"a\":1}\n{\"b\":\"two\"}\n");

  std::vector<std::size_t> lines;
  io::for_each_jsonl(dir / "sub/rows.jsonl", [&](std::size_t line, const json&) { lines.push_back(line); });
  CHECK(lines == std::vector<std::size_t>{1, 2});

  testsupport::write_file(dir / "bad.jsonl", "{}\n\n{oops\n");
  try {
    io::for_each_jsonl(dir / "bad.jsonl", [](std::size_t, const json&) {});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(io::for_each_jsonl(dir / "none.jsonl", [](std::size_t, const json&) {}), FileUnreadable);

  testsupport::write_file(dir / "results.jsonl", R"({"claim_id": "x"})" "\n");
  CHECK_THROWS_AS(io::read_results(dir / "results.jsonl"), SchemaError);

  io::write_text(dir / "t.txt", "hello");
  CHECK(testsupport::read_file(dir / "t.txt") == "hello");
  CHECK(std::distance(std::filesystem::directory_iterator(dir.path()), std::filesystem::directory_iterator()) == 4);
}

}
