#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oocheck/backend.hpp"
#include "oocheck/core.hpp"

namespace oocheck::metrics {

/// Ground-truth explanation for a falsified claim.
struct GoldExplanation {
  std::string claim_id;
  NewsElement element;
  std::string ent_t;
  std::string ent_v;
  std::string reference_text;  ///< render_fake_target(element, ent_t, ent_v)
};

GoldExplanation make_gold(std::string claim_id, const NewsElement& element, std::string ent_t, std::string ent_v);

using GoldLabels = std::map<std::string, GoldLabel>;
using GoldExplanations = std::map<std::string, GoldExplanation>;

struct Accuracy {
  std::size_t n_total = 0, n_fake = 0, n_real = 0;
  std::size_t correct_fake = 0, correct_real = 0;
  double acc_all = 0.0, acc_fake = 0.0, acc_real = 0.0;
};

/// Fractions of correct composed verdicts; an absent verdict counts as wrong.
/// A class with no samples reports accuracy 0. Throws MissingLabel.
Accuracy accuracy(const std::vector<DetectionResult>& results, const GoldLabels& golds);

struct ResponseRatio {
  std::size_t n_fake = 0;
  double element = 0.0, ent_t = 0.0, ent_v = 0.0;
};

/// Among results whose composed verdict is Fake, the share that carries each
/// explanation field. nullopt when there are no Fake results.
std::optional<ResponseRatio> response_ratio(const std::vector<DetectionResult>& results);

struct HitRatio {
  std::size_t n_gold = 0;      ///< gold-fake claims present in the results
  std::size_t responded = 0;   ///< ... whose prediction carries an element
  std::size_t hits = 0;
  double hit_ratio = 0.0;
  double response_ratio = 0.0; ///< responded / n_gold
};

/// Hard match of the predicted (composed) element against the gold element.
std::optional<HitRatio> element_hit_ratio(const std::vector<DetectionResult>& results, const GoldExplanations& golds);

struct EntitySimilarity {
  std::size_t n_ent_t = 0, n_ent_v = 0;
  std::optional<double> mean_ent_t, mean_ent_v;
};

/// Mean cosine similarity between predicted and gold entities, over claims
/// where the prediction has that entity (non-responses are excluded).
EntitySimilarity entity_similarity(const std::vector<DetectionResult>& results, const GoldExplanations& golds,
                                   backend::EmbeddingBackend& embedder);

struct RougeScore {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct Rouge {
  RougeScore rouge_1, rouge_2, rouge_l;
};

/// Lowercase alphanumeric tokens, no stemming. Throws ZeroLength when either
/// side has no tokens.
Rouge rouge(std::string_view candidate, std::string_view reference);

RougeScore rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, std::size_t n);
RougeScore rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct EvalReport {
  std::string subset = "all";
  double fraction = 1.0;
  Accuracy accuracy;
  std::optional<ResponseRatio> response_ratio;
  std::optional<HitRatio> hit;
  EntitySimilarity similarity;
  std::size_t n_rouge = 0;
  std::optional<double> rouge_1, rouge_2, rouge_l;  ///< mean F1 over gold-fake claims
  std::string manifest;                              ///< path of the run manifest, if known

  nlohmann::json to_json() const;
};

/// Metric names in CSV row order.
const std::vector<std::string>& metric_names();
/// Value of a named metric, nullopt when it is absent for this report.
std::optional<double> metric_value(const EvalReport& report, const std::string& name);

EvalReport build_report(const std::vector<DetectionResult>& results, const GoldLabels& labels,
                        const GoldExplanations& golds, backend::EmbeddingBackend& embedder);

/// One report per fraction over a seeded, nested sample of the results
/// (the first ceil(f * n) of one seeded permutation).
std::vector<EvalReport> build_subset_reports(const std::vector<DetectionResult>& results, const GoldLabels& labels,
                                             const GoldExplanations& golds, backend::EmbeddingBackend& embedder,
                                             const std::vector<double>& fractions, std::uint64_t seed);

/// "metric,subset,value" with one row per metric and report; absent values are empty.
std::string plot_csv(const std::vector<EvalReport>& reports);

}  // namespace oocheck::metrics
