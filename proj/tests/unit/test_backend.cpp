#include <doctest.h>

#include <set>
#include <thread>

#include "oocheck/backend.hpp"
#include "oocheck/errors.hpp"
#include "test_support.hpp"

using namespace oocheck;
using namespace oocheck::backend;

namespace {

CompletionRequest text_request(std::string text, std::optional<std::string> image = std::nullopt) {
  CompletionRequest r;
  r.model_id = "m";
  r.messages.push_back({Role::User, std::move(text), std::move(image)});
  return r;
}

std::shared_ptr<ScriptedBackend> yes_mock() {
  return std::make_shared<ScriptedBackend>(
      "mock", std::vector<ScriptedBackend::Rule>{{"rightly used", "Yes, the image is rightly used."}});
}

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("request validation") {
  CompletionRequest empty;
  CHECK_THROWS_AS(empty.validate(), PreconditionError);
  CHECK_THROWS_AS(complete(*yes_mock(), empty), PreconditionError);

  auto r = text_request("x", "a.jpg");
  r.messages.push_back({Role::User, "y", "b.jpg"});
  CHECK_THROWS_AS(r.validate(), PreconditionError);

  auto sys = text_request("x");
  sys.messages.front().role = Role::System;
  sys.messages.front().image = "a.jpg";
  CHECK_THROWS_AS(sys.validate(), PreconditionError);

  auto t = text_request("x");
  t.temperature = -0.5;
  CHECK_THROWS_AS(t.validate(), PreconditionError);
  t.temperature = 0;
  t.max_tokens = 0;
  CHECK_THROWS_AS(t.validate(), PreconditionError);

  auto ok = text_request("x");
  CHECK(ok.temperature == 0.0);
  CHECK(ok.max_tokens == 256);
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("scripted mock echoes the first matching rule") {
  auto mock = yes_mock();
  auto resp = complete(*mock, text_request("... answer \"Yes, the image is rightly used.\" or ..."));
  CHECK(resp.text == "Yes, the image is rightly used.");
  CHECK(resp.backend_id == "mock");
  CHECK_FALSE(resp.cached);
  CHECK(mock->network_calls() == 1);
  CHECK_THROWS_AS(complete(*mock, text_request("unrelated")), ScriptMiss);
  CHECK(mock->requests().size() == 2);

  ScriptedBackend ordered("o", {{"a", "first"}, {"a", "second"}}, "fallback");
  CHECK(ordered.complete(text_request("a")).text == "first");
  CHECK(ordered.complete(text_request("zzz")).text == "fallback");
}

TEST_CASE("scripted faults and JSON scripts") {
  auto mock = ScriptedBackend::from_json(nlohmann::json::parse(R"({
    "id": "scripted-chat",
    "rules": [
      {"match": "down", "fault": "transport"},
      {"match": "deny", "fault": "refused"},
      {"match": "hello", "response": "hi"}
    ],
    "default": "?"
  })"));
  CHECK(mock->id() == "scripted-chat");
  CHECK_THROWS_AS(mock->complete(text_request("down")), TransportError);
  CHECK_THROWS_AS(mock->complete(text_request("deny")), BackendRefused);
  CHECK(mock->complete(text_request("hello")).text == "hi");
  CHECK(mock->complete(text_request("other")).text == "?");
  CHECK_THROWS_AS(ScriptedBackend::from_json(nlohmann::json::parse(R"({"rules":[{"match":"x","fault":"odd"}]})")),
                  PreconditionError);
}

TEST_CASE("cache_key is deterministic and field sensitive") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "one/img.jpg", "first image bytes");
  testsupport::write_file(dir / "two/img.jpg", "second image bytes");
  const auto one = (dir / "one/img.jpg").string();
  const auto two = (dir / "two/img.jpg").string();

  auto base = text_request("prompt", one);
  const auto key = cache_key("b", base);
  CHECK(key.size() == 64);
  CHECK(key == cache_key("b", base));

  std::set<std::string> keys{key};
  auto differs = [&](CompletionRequest r, std::string_view backend_id = "b") {
    CHECK(keys.insert(cache_key(backend_id, r)).second);
  };
  differs(base, "other-backend");
  auto r = base; r.model_id = "m2"; differs(r);
  r = base; r.temperature = 0.7; differs(r);
  r = base; r.max_tokens = 128; differs(r);
  r = base; r.messages.front().text = "prompt!"; differs(r);
  r = base; r.messages.front().role = Role::Assistant; r.messages.front().image.reset(); differs(r);
  r = base; r.messages.front().image.reset(); differs(r);
  r = base; r.messages.push_back({Role::Assistant, "more", std::nullopt}); differs(r);

  // same file name, different bytes
  auto other = text_request("prompt", two);
  CHECK(cache_key("b", other) != key);
  testsupport::write_file(dir / "one/img.jpg", "second image bytes");
  CHECK(cache_key("b", base) == cache_key("b", other));

  CHECK_THROWS_AS(cache_key("b", text_request("p", (dir / "nope.jpg").string())), ImageUnavailable);
}

TEST_CASE("message boundaries are part of the key") {
  CompletionRequest a, b;
  a.messages = {{Role::User, "ab", std::nullopt}, {Role::User, "c", std::nullopt}};
  b.messages = {{Role::User, "a", std::nullopt}, {Role::User, "bc", std::nullopt}};
  CHECK(cache_key("x", a) != cache_key("x", b));
}

TEST_CASE("response cache layout and write-once") {
  testsupport::TempDir dir;
  ResponseCache cache(dir.path());
  const std::string digest(64, 'a');
  CHECK_FALSE(cache.get(digest));
  CHECK(cache.put(digest, "text", "mock"));
  CHECK(cache.path_for(digest) == dir.path() / "aa" / (digest + ".json"));
  CHECK(std::filesystem::exists(cache.path_for(digest)));
  CHECK(cache.get(digest) == std::optional<std::string>("text"));
  CHECK_FALSE(cache.put(digest, "changed", "mock"));
  CHECK(cache.get(digest) == std::optional<std::string>("text"));

  auto j = nlohmann::json::parse(testsupport::read_file(cache.path_for(digest)));
  CHECK(j["request_digest"] == digest);
  CHECK(j["backend_id"] == "mock");
  CHECK(j.contains("created_at"));

  testsupport::write_file(cache.path_for(std::string(64, 'b')), "{torn");
  CHECK_FALSE(cache.get(std::string(64, 'b')));
}

TEST_CASE("cached backend serves repeats without network calls") {
  testsupport::TempDir dir;
  auto mock = yes_mock();
  CachedBackend cached(mock, std::make_shared<ResponseCache>(dir.path()));
  auto req = text_request("rightly used?");
  auto first = complete(cached, req);
  auto second = complete(cached, req);
  CHECK_FALSE(first.cached);
  CHECK(second.cached);
  CHECK(first.text == second.text);
  CHECK(mock->network_calls() == 1);
  CHECK(cached.hits() == 1);
  CHECK(cached.misses() == 1);

  // a new process reading the same directory
  auto mock2 = yes_mock();
  CachedBackend again(mock2, std::make_shared<ResponseCache>(dir.path()));
  CHECK(complete(again, req).cached);
  CHECK(mock2->network_calls() == 0);
}

TEST_CASE("concurrent identical requests reach the backend once") {
  testsupport::TempDir dir;
  auto mock = yes_mock();
  CachedBackend cached(mock, std::make_shared<ResponseCache>(dir.path()));
  std::vector<std::jthread> pool;
  for (int i = 0; i < 8; ++i)
    pool.emplace_back([&] {
      for (int k = 0; k < 5; ++k) complete(cached, text_request("rightly used " + std::to_string(k)));
    });
  pool.clear();
  CHECK(mock->network_calls() == 5);
  CHECK(cached.hits() + cached.misses() == 40);
}

TEST_CASE("hashing embedder") {
  HashingEmbedder emb;
  CHECK(emb.embed("Chris Huhne").values == emb.embed("Chris Huhne").values);
  CHECK(emb.embed("Chris Huhne").dim() == 256);
  CHECK(cosine(emb.embed("Urs Rohner"), emb.embed("Urs Rohner")) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine(emb.embed("urs rohner"), emb.embed("Rohner, Urs")) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(emb.embed("   "), EmptyText);
  CHECK(cosine(emb.embed("!!!"), emb.embed("!!!")) == doctest::Approx(1.0));

  // token-disjoint texts whose tokens land in distinct buckets
  const std::vector<std::string> a{"brightwell", "church", "village"};
  const std::vector<std::string> b{"american", "skat", "game"};
  std::set<std::size_t> ba, bb;
  for (auto& t : a) ba.insert(emb.bucket(t));
  for (auto& t : b) bb.insert(emb.bucket(t));
  bool disjoint = true;
  for (auto x : ba) disjoint &= !bb.count(x);
  REQUIRE(disjoint);
  CHECK(cosine(emb.embed("Brightwell Church village"), emb.embed("American Skat game")) ==
        doctest::Approx(0.0).epsilon(1e-9));

  EmbeddingVector zero{std::vector<double>(4, 0.0)}, unit{{1, 0, 0, 0}};
  CHECK(cosine(zero, unit) == 0.0);
  CHECK_THROWS_AS(cosine(unit, EmbeddingVector{{1, 0}}), PreconditionError);
}

}
