#pragma once

#include <string>
#include <string_view>

// The Yes/No answer grammar shared by the prompt catalog, the parser and the
// instruction builders. The catalog's `answer_format` block is checked against
// answer_format_clause() when the catalog is loaded.
namespace oocheck::answer {

inline constexpr std::string_view kRealPrefix = "Yes, the image is rightly used";
inline constexpr std::string_view kFakePrefix = "No, the image is wrongly used";
inline constexpr std::string_view kRealKeyword = "rightly used";
inline constexpr std::string_view kFakeKeyword = "wrongly used";

inline constexpr std::string_view kRealAnswer = "Yes, the image is rightly used.";
inline constexpr std::string_view kFakeLead = "No, the image is wrongly used in a different news context.";
inline constexpr std::string_view kInconsistentIn = "The given news caption and image are inconsistent in";

/// Target sentence for pristine samples in OOC instruction data.
inline constexpr std::string_view kRealTarget = "Yes, the image is rightly used in the given news context.";

inline std::string answer_format_clause() {
  std::string s = "You should answer in the following forms: \"";
  s += kRealAnswer;
  s += "\" or \"";
  s += kFakeLead;
  s += ' ';
  s += kInconsistentIn;
  s += " <element>. The <element> in the caption is <ent_t>, and the <element> in the image is <ent_v>.\"";
  return s;
}

}  // namespace oocheck::answer
