#pragma once

#include <string>
#include <string_view>

#include "oocheck/core.hpp"

namespace oocheck::parser {

/// One inconsistency extracted from a generator response of the form
/// "They are inconsistent in ... \n Element: x \n Entity_caption: y \n Entity_image: z".
struct GeneratedInconsistency {
  NewsElement element;
  std::string ent_t;
  std::string ent_v;
  std::string sentence;  ///< the free-text sentence preceding the labeled lines

  bool operator==(const GeneratedInconsistency&) const = default;
};

/// Total: every input yields an outcome.
///   Structured          trimmed text starts with the Yes/No answer prefix
///                       (case-insensitive); Fake answers get element/ent_t/ent_v
///                       from the canonical answer sentence when present.
///   FallbackClassified  "rightly used" / "wrongly used" appears somewhere;
///                       the earlier one decides.
///   NonCompliant        neither phrase; no verdict.
/// The rationale is always the full raw text.
CheckOutcome parse_verdict(std::string_view raw, Stage stage);

/// Throws MissingField("element" | "ent_t" | "ent_v") when a labeled line is
/// absent or empty. Literal "\n" escapes in the response are read as newlines.
GeneratedInconsistency parse_generated_inconsistency(std::string_view raw);

/// The canonical Fake target sentence; throws InvalidField on an empty field.
std::string render_fake_target(const NewsElement& element, std::string_view ent_t, std::string_view ent_v);

/// Strips one pair of matching surrounding quotes ("", '', or curly double
/// quotes) when the inside holds no further quote of that kind.
std::string strip_quotes(std::string_view s);

}  // namespace oocheck::parser
