#pragma once

#include <optional>
#include <vector>

#include "stylo/records.hpp"
#include "stylo/types.hpp"

namespace stylo {

struct Metrics {
  double accuracy = 0.0;
  double f1_ai = 0.0;     // AI is the positive class
  double f1_macro = 0.0;  // mean of the per-class F1 scores
  std::optional<double> auc;  // absent when only one class is present
  std::size_t n = 0;

  ordered_json to_json() const;
};

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

Confusion confusion(const std::vector<Label>& predicted, const std::vector<Label>& actual);

/// 2PR / (P + R) written as 2TP / (2TP + FP + FN); 0 when undefined.
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Mann-Whitney form of the ROC area over prob_ai scores, ties as midranks.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<Label>& actual);

Metrics compute_metrics(const std::vector<Prediction>& predictions, const std::vector<Label>& actual);

}  // namespace stylo
