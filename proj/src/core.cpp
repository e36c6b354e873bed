#include "oocheck/core.hpp"

#include <array>
#include <utility>

#include "oocheck/errors.hpp"
#include "oocheck/text.hpp"

namespace oocheck {

namespace {

constexpr std::array<std::pair<std::string_view, NewsElement::Kind>, 6> kClosedSet{{
    {"time", NewsElement::Kind::Time},
    {"place", NewsElement::Kind::Place},
    {"person", NewsElement::Kind::Person},
    {"event", NewsElement::Kind::Event},
    {"artwork", NewsElement::Kind::Artwork},
    {"object", NewsElement::Kind::Object},
}};

}  // namespace

std::string_view to_string(Verdict v) { return v == Verdict::Real ? "real" : "fake"; }
std::string_view to_string(GoldLabel l) { return l == GoldLabel::Pristine ? "real" : "fake"; }

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

bool verdict_matches(Verdict v, GoldLabel gold) {
  return (v == Verdict::Fake) == (gold == GoldLabel::Falsified);
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Internal: return "internal";
    case Stage::External: return "external";
    case Stage::Composed: return "composed";
  }
  return "internal";
}

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::Structured: return "structured";
    case ParseStatus::FallbackClassified: return "fallback_classified";
    case ParseStatus::NonCompliant: return "non_compliant";
  }
  return "non_compliant";
}

NewsElement::NewsElement(Kind kind) : kind_(kind) {
  if (kind == Kind::Other) throw InvalidElement("Other elements need a token; use NewsElement::other");
}

NewsElement NewsElement::other(std::string token) {
  NewsElement e;
  e.kind_ = Kind::Other;
  e.other_ = std::move(token);
  return e;
}

std::string NewsElement::str() const {
  for (const auto& [name, kind] : kClosedSet)
    if (kind == kind_) return std::string(name);
  return other_;
}

NewsElement canonicalize_element(std::string_view raw) {
  auto token = text::to_lower(text::trim(raw));
  if (token.empty()) throw InvalidElement("empty news element");
  for (const auto& [name, kind] : kClosedSet)
    if (token == name) return NewsElement(kind);
  return NewsElement::other(std::move(token));
}

}  // namespace oocheck
