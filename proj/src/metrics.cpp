#include "oocheck/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "oocheck/errors.hpp"
#include "oocheck/parser.hpp"
#include "oocheck/text.hpp"

namespace oocheck::metrics {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

RougeScore from_counts(std::size_t overlap, std::size_t cand_total, std::size_t ref_total) {
  RougeScore s;
  if (cand_total == 0 || ref_total == 0) return s;
  s.precision = ratio(overlap, cand_total);
  s.recall = ratio(overlap, ref_total);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[{tokens.begin() + i, tokens.begin() + i + n}];
  return counts;
}

bool has_text(const std::optional<std::string>& s) { return s && !text::trim(*s).empty(); }

const GoldExplanation* gold_for(const GoldExplanations& golds, const std::string& id) {
  auto it = golds.find(id);
  return it == golds.end() ? nullptr : &it->second;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

GoldExplanation make_gold(std::string claim_id, const NewsElement& element, std::string ent_t, std::string ent_v) {
  GoldExplanation g;
  g.claim_id = std::move(claim_id);
  g.element = element;
  g.reference_text = parser::render_fake_target(element, ent_t, ent_v);
  g.ent_t = std::move(ent_t);
  g.ent_v = std::move(ent_v);
  return g;
}

Accuracy accuracy(const std::vector<DetectionResult>& results, const GoldLabels& golds) {
  Accuracy a;
  for (const auto& r : results) {
    auto it = golds.find(r.claim_id);
    if (it == golds.end()) throw MissingLabel(r.claim_id);
    const bool correct = r.composed.verdict && verdict_matches(*r.composed.verdict, it->second);
    if (it->second == GoldLabel::Falsified) {
      ++a.n_fake;
      a.correct_fake += correct;
    } else {
      ++a.n_real;
      a.correct_real += correct;
    }
  }
  a.n_total = a.n_fake + a.n_real;
  a.acc_all = ratio(a.correct_fake + a.correct_real, a.n_total);
  a.acc_fake = ratio(a.correct_fake, a.n_fake);
  a.acc_real = ratio(a.correct_real, a.n_real);
  return a;
}

std::optional<ResponseRatio> response_ratio(const std::vector<DetectionResult>& results) {
  std::size_t n = 0, element = 0, ent_t = 0, ent_v = 0;
  for (const auto& r : results) {
    if (r.composed.verdict != Verdict::Fake) continue;
    ++n;
    const auto& ex = r.composed.explanation;
    element += ex.element.has_value();
    ent_t += has_text(ex.ent_t);
    ent_v += has_text(ex.ent_v);
  }
  if (n == 0) return std::nullopt;
  return ResponseRatio{n, ratio(element, n), ratio(ent_t, n), ratio(ent_v, n)};
}

std::optional<HitRatio> element_hit_ratio(const std::vector<DetectionResult>& results, const GoldExplanations& golds) {
  HitRatio h;
  for (const auto& r : results) {
    const auto* g = gold_for(golds, r.claim_id);
    if (!g) continue;
    ++h.n_gold;
    const auto& predicted = r.composed.explanation.element;
    if (!predicted) continue;
    ++h.responded;
    h.hits += *predicted == g->element;
  }
  if (h.n_gold == 0) return std::nullopt;
  h.hit_ratio = ratio(h.hits, h.n_gold);
  h.response_ratio = ratio(h.responded, h.n_gold);
  return h;
}

EntitySimilarity entity_similarity(const std::vector<DetectionResult>& results, const GoldExplanations& golds,
                                   backend::EmbeddingBackend& embedder) {
  EntitySimilarity s;
  double sum_t = 0.0, sum_v = 0.0;
  for (const auto& r : results) {
    const auto* g = gold_for(golds, r.claim_id);
    if (!g) continue;
    const auto& ex = r.composed.explanation;
    if (has_text(ex.ent_t)) {
      sum_t += backend::cosine(embedder.embed(*ex.ent_t), embedder.embed(g->ent_t));
      ++s.n_ent_t;
    }
    if (has_text(ex.ent_v)) {
      sum_v += backend::cosine(embedder.embed(*ex.ent_v), embedder.embed(g->ent_v));
      ++s.n_ent_v;
    }
  }
  if (s.n_ent_t) s.mean_ent_t = sum_t / static_cast<double>(s.n_ent_t);
  if (s.n_ent_v) s.mean_ent_v = sum_v / static_cast<double>(s.n_ent_v);
  return s;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                   std::size_t n) {
  if (n == 0) throw PreconditionError("ROUGE-N needs n >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand)
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  const auto total = [n](const std::vector<std::string>& t) { return t.size() >= n ? t.size() - n + 1 : 0; };
  return from_counts(overlap, total(candidate), total(reference));
}

RougeScore rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  return from_counts(lcs_length(candidate, reference), candidate.size(), reference.size());
}

Rouge rouge(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty()) throw ZeroLength("candidate has no tokens");
  if (ref.empty()) throw ZeroLength("reference has no tokens");
  return {rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["subset"] = subset;
  j["fraction"] = fraction;
  j["n_total"] = accuracy.n_total;
  j["n_fake"] = accuracy.n_fake;
  j["n_real"] = accuracy.n_real;
  j["correct_fake"] = accuracy.correct_fake;
  j["correct_real"] = accuracy.correct_real;
  j["acc_all"] = accuracy.acc_all;
  j["acc_fake"] = accuracy.acc_fake;
  j["acc_real"] = accuracy.acc_real;
  if (response_ratio)
    j["response_ratio"] = {{"n_fake_predicted", response_ratio->n_fake},
                           {"element", response_ratio->element},
                           {"ent_t", response_ratio->ent_t},
                           {"ent_v", response_ratio->ent_v}};
  else
    j["response_ratio"] = nullptr;
  if (hit)
    j["hit_ratio_element"] = {{"n_gold", hit->n_gold},
                              {"responded", hit->responded},
                              {"hits", hit->hits},
                              {"hit_ratio", hit->hit_ratio},
                              {"response_ratio", hit->response_ratio}};
  else
    j["hit_ratio_element"] = nullptr;
  j["entity_similarity"] = {{"denominator", "responded_only"},
                            {"n_ent_t", similarity.n_ent_t},
                            {"n_ent_v", similarity.n_ent_v},
                            {"mean_sim_ent_t", opt_json(similarity.mean_ent_t)},
                            {"mean_sim_ent_v", opt_json(similarity.mean_ent_v)}};
  j["rouge"] = {{"n", n_rouge},
                {"rouge_1_f1", opt_json(rouge_1)},
                {"rouge_2_f1", opt_json(rouge_2)},
                {"rouge_l_f1", opt_json(rouge_l)}};
  j["manifest"] = manifest.empty() ? nlohmann::json(nullptr) : nlohmann::json(manifest);
  return j;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "n_total",        "acc_all",        "acc_fake",          "acc_real",       "response_ratio_element",
      "response_ratio_ent_t", "response_ratio_ent_v", "hit_ratio_element", "mean_sim_ent_t", "mean_sim_ent_v",
      "rouge_1",        "rouge_2",        "rouge_l"};
  return names;
}

std::optional<double> metric_value(const EvalReport& r, const std::string& name) {
  if (name == "n_total") return static_cast<double>(r.accuracy.n_total);
  if (name == "acc_all") return r.accuracy.acc_all;
  if (name == "acc_fake") return r.accuracy.acc_fake;
  if (name == "acc_real") return r.accuracy.acc_real;
  if (name == "response_ratio_element") return r.response_ratio ? std::optional(r.response_ratio->element) : std::nullopt;
  if (name == "response_ratio_ent_t") return r.response_ratio ? std::optional(r.response_ratio->ent_t) : std::nullopt;
  if (name == "response_ratio_ent_v") return r.response_ratio ? std::optional(r.response_ratio->ent_v) : std::nullopt;
  if (name == "hit_ratio_element") return r.hit ? std::optional(r.hit->hit_ratio) : std::nullopt;
  if (name == "mean_sim_ent_t") return r.similarity.mean_ent_t;
  if (name == "mean_sim_ent_v") return r.similarity.mean_ent_v;
  if (name == "rouge_1") return r.rouge_1;
  if (name == "rouge_2") return r.rouge_2;
  if (name == "rouge_l") return r.rouge_l;
  throw PreconditionError("unknown metric '" + name + "'");
}

EvalReport build_report(const std::vector<DetectionResult>& results, const GoldLabels& labels,
                        const GoldExplanations& golds, backend::EmbeddingBackend& embedder) {
  EvalReport report;
  report.accuracy = accuracy(results, labels);
  report.response_ratio = response_ratio(results);
  report.hit = element_hit_ratio(results, golds);
  report.similarity = entity_similarity(results, golds, embedder);

  double r1 = 0.0, r2 = 0.0, rl = 0.0;
  for (const auto& r : results) {
    const auto* g = gold_for(golds, r.claim_id);
    if (!g) continue;
    try {
      auto s = rouge(r.composed.raw_response, g->reference_text);
      r1 += s.rouge_1.f1;
      r2 += s.rouge_2.f1;
      rl += s.rouge_l.f1;
      ++report.n_rouge;
    } catch (const ZeroLength&) {
    }
  }
  if (report.n_rouge) {
    const auto n = static_cast<double>(report.n_rouge);
    report.rouge_1 = r1 / n;
    report.rouge_2 = r2 / n;
    report.rouge_l = rl / n;
  }
  return report;
}

std::vector<EvalReport> build_subset_reports(const std::vector<DetectionResult>& results, const GoldLabels& labels,
                                             const GoldExplanations& golds, backend::EmbeddingBackend& embedder,
                                             const std::vector<double>& fractions, std::uint64_t seed) {
  if (results.empty()) throw EmptyDataset("no results to evaluate");
  const auto order = rng::permutation(results.size(), seed);
  std::vector<EvalReport> reports;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw PreconditionError("subset fraction must be in (0, 1]");
    auto k = static_cast<std::size_t>(std::ceil(f * static_cast<double>(results.size())));
    k = std::clamp<std::size_t>(k, 1, results.size());
    std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(picked.begin(), picked.end());
    std::vector<DetectionResult> subset;
    subset.reserve(k);
    for (auto i : picked) subset.push_back(results[i]);
    auto report = build_report(subset, labels, golds, embedder);
    report.fraction = f;
    report.subset = format_number(f);
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string plot_csv(const std::vector<EvalReport>& reports) {
  std::string out = "metric,subset,value\n";
  for (const auto& name : metric_names())
    for (const auto& r : reports) {
      auto v = metric_value(r, name);
      out += name + "," + r.subset + "," + (v ? format_number(*v) : std::string()) + "\n";
    }
  return out;
}

}  // namespace oocheck::metrics
