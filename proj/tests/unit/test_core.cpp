#include <doctest.h>

#include "oocheck/core.hpp"
#include "oocheck/errors.hpp"

using namespace oocheck;

TEST_SUITE("core") {

TEST_CASE("canonicalize_element maps case and whitespace onto the closed set") {
  CHECK(canonicalize_element("Person") == NewsElement(NewsElement::Kind::Person));
  CHECK(canonicalize_element("artwork").kind() == NewsElement::Kind::Artwork);
  CHECK(canonicalize_element(" TIME\t").str() == "time");
  for (const char* token : {"time", "place", "person", "event", "artwork", "object"})
    CHECK(canonicalize_element(token).kind() != NewsElement::Kind::Other);
}

TEST_CASE("unknown tokens are kept as Other") {
  auto e = canonicalize_element("  Location ");
  CHECK(e.kind() == NewsElement::Kind::Other);
  CHECK(e.str() == "location");
  CHECK(e == NewsElement::other("location"));
  CHECK(e != canonicalize_element("place"));
}

TEST_CASE("canonicalization is idempotent and yields clean tokens") {
  for (const char* raw : {"Person", " Event ", "LOCATION", "Weather Condition", "artwork"}) {
    auto once = canonicalize_element(raw);
    auto twice = canonicalize_element(once.str());
    CHECK(once == twice);
    auto s = once.str();
    CHECK(s.front() != ' ');
    CHECK(s.back() != ' ');
    for (char c : s) CHECK_FALSE((c >= 'A' && c <= 'Z'));
  }
}

TEST_CASE("empty element is rejected") {
  CHECK_THROWS_AS(canonicalize_element(""), InvalidElement);
  CHECK_THROWS_AS(canonicalize_element("   "), InvalidElement);
  CHECK_THROWS_AS(NewsElement(NewsElement::Kind::Other), InvalidElement);
}

TEST_CASE("verdicts match gold labels") {
  CHECK(verdict_matches(Verdict::Fake, GoldLabel::Falsified));
  CHECK(verdict_matches(Verdict::Real, GoldLabel::Pristine));
  CHECK_FALSE(verdict_matches(Verdict::Fake, GoldLabel::Pristine));
  CHECK_FALSE(verdict_matches(Verdict::Real, GoldLabel::Falsified));
}

TEST_CASE("string forms") {
  CHECK(to_string(Verdict::Real) == "real");
  CHECK(to_string(Verdict::Fake) == "fake");
  CHECK(to_string(Stage::Composed) == "composed");
  CHECK(to_string(ParseStatus::FallbackClassified) == "fallback_classified");
  CHECK(split_from_string("val") == Split::Val);
  CHECK_FALSE(split_from_string("dev").has_value());
}

TEST_CASE("an explanation with every field absent is a valid value") {
  Explanation e;
  CHECK_FALSE(e.element.has_value());
  CHECK_FALSE(e.ent_t.has_value());
  DetectionResult r;
  CHECK_FALSE(r.failed());
  r.error = "internal: boom";
  CHECK(r.failed());
}

}
