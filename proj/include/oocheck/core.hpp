#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace oocheck {

enum class GoldLabel { Pristine, Falsified };
enum class Split { Train, Val, Test };

/// One news item: an (image, caption) pair with an optional gold label.
struct Claim {
  std::string id;
  std::string caption;
  std::string image;  ///< local path or http(s) URL
  std::optional<GoldLabel> gold_label;
  std::optional<Split> split;

  bool operator==(const Claim&) const = default;
};

enum class Verdict { Real, Fake };

std::string_view to_string(Verdict v);
std::string_view to_string(GoldLabel l);
std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

/// True when the verdict agrees with the gold label (Fake <-> Falsified).
bool verdict_matches(Verdict v, GoldLabel gold);

/// The inconsistent dimension of a claim. Known tokens map onto a closed set;
/// anything else is preserved as Other with its lowercased, trimmed text.
class NewsElement {
 public:
  enum class Kind { Time, Place, Person, Event, Artwork, Object, Other };

  NewsElement() = default;
  explicit NewsElement(Kind kind);
  static NewsElement other(std::string token);

  Kind kind() const noexcept { return kind_; }
  /// Canonical lowercase token ("person", or the Other text).
  std::string str() const;

  bool operator==(const NewsElement&) const = default;

 private:
  Kind kind_ = Kind::Other;
  std::string other_;
};

/// Lowercases and trims `raw`; throws InvalidElement when nothing is left.
NewsElement canonicalize_element(std::string_view raw);

struct Explanation {
  std::optional<NewsElement> element;
  std::optional<std::string> ent_t;  ///< entity named in the caption
  std::optional<std::string> ent_v;  ///< entity depicted in the image
  std::string rationale;

  bool operator==(const Explanation&) const = default;
};

enum class Stage { Internal, External, Composed };
enum class ParseStatus { Structured, FallbackClassified, NonCompliant };

std::string_view to_string(Stage s);
std::string_view to_string(ParseStatus s);

struct CheckOutcome {
  Stage stage = Stage::Internal;
  std::optional<Verdict> verdict;
  Explanation explanation;
  std::string raw_response;
  ParseStatus parse_status = ParseStatus::NonCompliant;

  bool operator==(const CheckOutcome&) const = default;
};

struct DetectionResult {
  std::string claim_id;
  CheckOutcome internal;
  std::optional<CheckOutcome> external;
  CheckOutcome composed;
  bool evidence_used = false;
  /// Uncached backend calls made for this claim; run telemetry, not serialized.
  std::size_t backend_calls = 0;
  /// Set when a stage could not run (missing image, transport failure).
  std::optional<std::string> error;

  bool failed() const noexcept { return error.has_value(); }
};

}  // namespace oocheck
