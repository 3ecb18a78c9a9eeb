#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stylo/baselines.hpp"
#include "stylo/experiments.hpp"

namespace stylo {

/// Fraction as a percentage with `decimals` places, e.g. 0.883 -> "88.3".
std::string format_percent(double fraction, int decimals = 1);
/// "mean ± std" in percent, e.g. "84.1 ± 3.9".
std::string format_mean_std(const MeanStd& m, int decimals = 1);

/// Rebuilds a grid (cells and missing entries) from ExperimentGrid::to_json
/// output and recomputes its marginals.
ExperimentGrid grid_from_json(const nlohmann::json& j);

/// Snippet lengths per language with the AI-vs-human t test.
std::string length_table(const LengthStats& stats);

/// Provenance rows by tested-language columns with marginals, then the
/// multilingual accuracy, F1 and AUC rows. Either grid may be absent.
std::string accuracy_table(const ExperimentGrid* monolingual, const ExperimentGrid* multilingual);

/// Multilingual per-language accuracy (a) against the monolingual
/// per-language marginal means (b).
std::optional<TTestResult> multilingual_comparison(const ExperimentGrid& monolingual,
                                                   const ExperimentGrid& multilingual);

std::string tests_table(const GridAnova& anova, const std::optional<TTestResult>& comparison);

struct BaselineRow {
  std::string name;      // e.g. "feature_forest"
  std::string language;  // evaluation language or set label
  CvResult cv;
  std::optional<double> reference;  // our classifier's accuracy on the same data
};
std::string baseline_table(const std::vector<BaselineRow>& rows);

/// Tab-separated dst, model_src, in_distribution, out_mean, gap, then one
/// column per out-of-distribution provenance.
std::string shift_tsv(const ShiftReport& report);

/// One JSON row per grid cell: dst, src, metrics.
std::vector<ordered_json> grid_rows(const ExperimentGrid& grid);

}  // namespace stylo
