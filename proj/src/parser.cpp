#include "oocheck/parser.hpp"

#include <array>
#include <cctype>
#include <optional>

#include "oocheck/answer_format.hpp"
#include "oocheck/errors.hpp"
#include "oocheck/text.hpp"

namespace oocheck::parser {

namespace {

using text::ifind;
using text::trim;
constexpr auto npos = std::string_view::npos;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// End of the sentence starting at `from`: a period followed by whitespace or
/// end of text, or a newline. A final period is excluded from the span.
std::size_t sentence_end(std::string_view s, std::size_t from) {
  for (std::size_t i = from; i < s.size(); ++i) {
    if (s[i] == '\n') return i;
    if (s[i] == '.' && (i + 1 == s.size() || is_space(s[i + 1]))) return i;
  }
  return s.size();
}

std::optional<std::string> capture(std::string_view s, std::size_t from, std::size_t to) {
  auto value = strip_quotes(trim(s.substr(from, to - from)));
  if (trim(value).empty()) return std::nullopt;
  return value;
}

/// "inconsistent in X" with X ending at the first of . , ; : newline.
std::optional<std::string> element_from_inconsistency(std::string_view s) {
  constexpr std::string_view kNeedle = "inconsistent in ";
  auto pos = ifind(s, kNeedle);
  if (pos == npos) return std::nullopt;
  std::size_t start = pos + kNeedle.size();
  std::size_t end = start;
  while (end < s.size() && std::string_view(".,;:\n").find(s[end]) == npos) ++end;
  auto value = strip_quotes(trim(s.substr(start, end - start)));
  if (value.empty()) return std::nullopt;
  return value;
}

/// "the X in the caption" with X a single word.
std::optional<std::string> element_from_caption_phrase(std::string_view s) {
  constexpr std::string_view kNeedle = " in the caption";
  for (auto pos = ifind(s, kNeedle); pos != npos; pos = ifind(s, kNeedle, pos + 1)) {
    std::size_t word_start = pos;
    while (word_start > 0 && (std::isalpha(static_cast<unsigned char>(s[word_start - 1])) || s[word_start - 1] == '_'))
      --word_start;
    if (word_start == pos || word_start < 4) continue;
    if (text::iequals(s.substr(word_start - 4, 4), "the ")) return std::string(s.substr(word_start, pos - word_start));
  }
  return std::nullopt;
}

void extract_fake_fields(std::string_view s, Explanation& ex) {
  auto raw_element = element_from_inconsistency(s);
  if (!raw_element) raw_element = element_from_caption_phrase(s);
  if (!raw_element) return;
  ex.element = canonicalize_element(*raw_element);

  const std::string caption_needle = "the " + *raw_element + " in the caption is ";
  auto at = ifind(s, caption_needle);
  if (at == npos) return;
  const std::size_t ent_t_start = at + caption_needle.size();
  const std::size_t ent_t_stop = sentence_end(s, ent_t_start);

  const std::string image_needle = ", and the " + *raw_element + " in the image is ";
  auto link = ifind(s, image_needle, ent_t_start);
  if (link == npos || link > ent_t_stop) {
    ex.ent_t = capture(s, ent_t_start, ent_t_stop);
    return;
  }
  ex.ent_t = capture(s, ent_t_start, link);
  const std::size_t ent_v_start = link + image_needle.size();
  ex.ent_v = capture(s, ent_v_start, sentence_end(s, ent_v_start));
}

std::string unescape_newlines(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 1 < raw.size() && raw[i + 1] == 'n') {
      out += '\n';
      ++i;
    } else {
      out += raw[i];
    }
  }
  return out;
}

}  // namespace

std::string strip_quotes(std::string_view s) {
  constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kPairs{{
      {"\"", "\""},
      {"'", "'"},
      {"\xE2\x80\x9C", "\xE2\x80\x9D"},
  }};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      auto inner = s.substr(open.size(), s.size() - open.size() - close.size());
      if (inner.find(open) == npos && inner.find(close) == npos) return std::string(trim(inner));
    }
  }
  return std::string(s);
}

CheckOutcome parse_verdict(std::string_view raw, Stage stage) {
  CheckOutcome out;
  out.stage = stage;
  out.raw_response = std::string(raw);
  out.explanation.rationale = std::string(raw);

  auto t = trim(raw);
  if (text::istarts_with(t, answer::kRealPrefix)) {
    out.verdict = Verdict::Real;
    out.parse_status = ParseStatus::Structured;
    return out;
  }
  if (text::istarts_with(t, answer::kFakePrefix)) {
    out.verdict = Verdict::Fake;
    out.parse_status = ParseStatus::Structured;
    extract_fake_fields(t.substr(answer::kFakePrefix.size()), out.explanation);
    return out;
  }
  auto real_at = ifind(t, answer::kRealKeyword);
  auto fake_at = ifind(t, answer::kFakeKeyword);
  if (real_at == npos && fake_at == npos) {
    out.parse_status = ParseStatus::NonCompliant;
    return out;
  }
  out.verdict = real_at < fake_at ? Verdict::Real : Verdict::Fake;
  out.parse_status = ParseStatus::FallbackClassified;
  return out;
}

GeneratedInconsistency parse_generated_inconsistency(std::string_view raw) {
  const std::string s = unescape_newlines(raw);
  struct Label {
    std::string_view tag;
    std::string_view field;
    std::size_t at = npos;
  };
  std::array<Label, 3> labels{{{"Element:", "element"}, {"Entity_caption:", "ent_t"}, {"Entity_image:", "ent_v"}}};
  for (auto& l : labels) l.at = ifind(s, l.tag);

  auto value_of = [&](const Label& l) -> std::string {
    if (l.at == npos) throw MissingField(std::string(l.field));
    std::size_t start = l.at + l.tag.size();
    std::size_t end = s.find('\n', start);
    if (end == std::string::npos) end = s.size();
    for (const auto& other : labels)
      if (other.at != npos && other.at > l.at && other.at < end) end = other.at;
    auto v = strip_quotes(trim(std::string_view(s).substr(start, end - start)));
    if (v.empty()) throw MissingField(std::string(l.field));
    return v;
  };

  GeneratedInconsistency g;
  g.element = canonicalize_element(value_of(labels[0]));
  g.ent_t = value_of(labels[1]);
  g.ent_v = value_of(labels[2]);

  std::size_t first = s.size();
  for (const auto& l : labels) first = std::min(first, l.at);
  auto sentence = trim(std::string_view(s).substr(0, first));
  constexpr std::string_view kAnswerIs = "The answer is:";
  if (text::istarts_with(sentence, kAnswerIs)) sentence = trim(sentence.substr(kAnswerIs.size()));
  g.sentence = std::string(sentence);
  return g;
}

std::string render_fake_target(const NewsElement& element, std::string_view ent_t, std::string_view ent_v) {
  const auto e = element.str();
  if (trim(e).empty()) throw InvalidField("element is empty");
  if (trim(ent_t).empty()) throw InvalidField("ent_t is empty");
  if (trim(ent_v).empty()) throw InvalidField("ent_v is empty");
  std::string out(answer::kFakeLead);
  out += ' ';
  out += answer::kInconsistentIn;
  out += ' ' + e + ". The " + e + " in the caption is ";
  out += ent_t;
  out += ", and the " + e + " in the image is ";
  out += ent_v;
  out += '.';
  return out;
}

}  // namespace oocheck::parser
