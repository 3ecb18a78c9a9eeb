#include "stylo/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace stylo {

ordered_json Metrics::to_json() const {
  ordered_json j;
  j["n"] = n;
  j["accuracy"] = accuracy;
  j["f1_ai"] = f1_ai;
  j["f1_macro"] = f1_macro;
  j["auc"] = auc ? ordered_json(*auc) : ordered_json(nullptr);
  return j;
}

Confusion confusion(const std::vector<Label>& predicted, const std::vector<Label>& actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("prediction and label counts differ");
  Confusion c;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const bool p = predicted[i] == Label::ai, a = actual[i] == Label::ai;
    if (p && a) ++c.tp;
    else if (!p && !a) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<Label>& actual) {
  if (scores.size() != actual.size()) throw std::invalid_argument("score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (actual[order[k]] == Label::ai) rank_sum += midrank, ++positives;
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives), q = static_cast<double>(negatives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

Metrics compute_metrics(const std::vector<Prediction>& predictions, const std::vector<Label>& actual) {
  if (predictions.size() != actual.size()) throw std::invalid_argument("prediction and label counts differ");
  if (actual.empty()) throw std::invalid_argument("no predictions to score");
  std::vector<Label> predicted;
  std::vector<double> scores;
  for (const auto& p : predictions) predicted.push_back(p.label), scores.push_back(p.prob_ai);
  const auto c = confusion(predicted, actual);
  Metrics m;
  m.n = actual.size();
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(m.n);
  m.f1_ai = f1_score(c.tp, c.fp, c.fn);
  m.f1_macro = (m.f1_ai + f1_score(c.tn, c.fn, c.fp)) / 2.0;
  m.auc = roc_auc(scores, actual);
  return m;
}

}  // namespace stylo
