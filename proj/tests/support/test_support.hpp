#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oocheck/backend.hpp"
#include "oocheck/core.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixtures_dir() { return OOCHECK_FIXTURES; }

inline nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(fixtures_dir() / name);
  return nlohmann::json::parse(in);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("oocheck-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Oracles. Written independently of the library code they check.

/// Full-table LCS recurrence.
inline std::size_t lcs_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = a.size(); i-- > 0;)
    for (std::size_t j = b.size(); j-- > 0;)
      t[i][j] = a[i] == b[j] ? 1 + t[i + 1][j + 1] : std::max(t[i + 1][j], t[i][j + 1]);
  return t[0][0];
}

/// Exhaustive: longest subsequence of `a` (by bitmask) that is a subsequence of `b`.
/// Only for short `a`.
inline std::size_t lcs_exhaustive(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else { ++j; ++len; }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

struct PRF {
  double p = 0, r = 0, f = 0;
};

inline PRF prf(double match, double cand, double ref) {
  PRF s;
  if (cand == 0 || ref == 0) return s;
  s.p = match / cand;
  s.r = match / ref;
  s.f = s.p + s.r == 0 ? 0 : 2 * s.p * s.r / (s.p + s.r);
  return s;
}

/// Clipped n-gram overlap by joining n-grams into strings and counting.
inline PRF rouge_n_oracle(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t n) {
  auto grams = [n](const std::vector<std::string>& t) {
    std::map<std::string, int> m;
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
      std::string key;
      for (std::size_t k = 0; k < n; ++k) key += t[i + k] + '\x1f';
      ++m[key];
    }
    return m;
  };
  auto gc = grams(cand), gr = grams(ref);
  double match = 0, nc = 0, nr = 0;
  for (auto& [k, v] : gc) {
    nc += v;
    if (gr.count(k)) match += std::min(v, gr[k]);
  }
  for (auto& [k, v] : gr) nr += v;
  return prf(match, nc, nr);
}

inline PRF rouge_l_oracle(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  return prf(static_cast<double>(lcs_oracle(cand, ref)), static_cast<double>(cand.size()),
             static_cast<double>(ref.size()));
}

inline std::vector<std::string> random_tokens(std::mt19937_64& gen, std::size_t len, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back("w" + std::to_string(pick(gen)));
  return out;
}

// Result builders

inline oocheck::CheckOutcome outcome(oocheck::Stage stage, std::optional<oocheck::Verdict> v,
                                     std::optional<std::string> element = std::nullopt,
                                     std::optional<std::string> ent_t = std::nullopt,
                                     std::optional<std::string> ent_v = std::nullopt) {
  oocheck::CheckOutcome o;
  o.stage = stage;
  o.verdict = v;
  o.parse_status = v ? oocheck::ParseStatus::Structured : oocheck::ParseStatus::NonCompliant;
  if (element) o.explanation.element = oocheck::canonicalize_element(*element);
  o.explanation.ent_t = std::move(ent_t);
  o.explanation.ent_v = std::move(ent_v);
  o.raw_response = v ? (*v == oocheck::Verdict::Fake ? "No, the image is wrongly used in a different news context."
                                                     : "Yes, the image is rightly used.")
                     : "no idea";
  o.explanation.rationale = o.raw_response;
  return o;
}

inline oocheck::DetectionResult result(const std::string& id, std::optional<oocheck::Verdict> v,
                                       std::optional<std::string> element = std::nullopt,
                                       std::optional<std::string> ent_t = std::nullopt,
                                       std::optional<std::string> ent_v = std::nullopt) {
  oocheck::DetectionResult r;
  r.claim_id = id;
  r.internal = outcome(oocheck::Stage::Internal, v, element, ent_t, ent_v);
  r.composed = r.internal;
  r.composed.stage = oocheck::Stage::Composed;
  return r;
}

}  // namespace testsupport
