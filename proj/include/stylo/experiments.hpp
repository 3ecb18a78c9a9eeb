#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stylo/metrics.hpp"
#include "stylo/records.hpp"
#include "stylo/sampling.hpp"
#include "stylo/stats.hpp"

namespace stylo {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};
MeanStd mean_std(const std::vector<double>& values);

std::vector<Label> labels_of(const std::vector<SnippetRecord>& records);
/// Seed of the train/test split for a named cell (set label or language).
std::uint64_t split_seed(std::uint64_t seed, const std::string& name);

/// Classifies a batch of records.
using Predictor = std::function<std::vector<Prediction>(const std::vector<SnippetRecord>&)>;
/// Trains a model for one grid cell and returns its predictor.
using Trainer = std::function<Predictor(const std::vector<SnippetRecord>& train, const std::string& cell)>;

enum class GridMode { monolingual, multilingual };
std::string_view to_string(GridMode mode);
GridMode parse_grid_mode(std::string_view text);

inline constexpr std::string_view kMultilingualSource = "multilingual";

/// Metrics keyed by (dst, src). Multilingual grids use kMultilingualSource
/// as src. Marginals are over accuracy.
struct ExperimentGrid {
  GridMode mode = GridMode::monolingual;
  std::map<std::pair<std::string, std::string>, Metrics> cells;
  std::map<std::pair<std::string, std::string>, std::string> missing;  // cell -> reason
  std::map<std::string, MeanStd> per_provenance;  // over destination languages
  std::map<std::string, MeanStd> per_language;    // over provenances
  std::optional<MeanStd> overall;                 // multilingual: over languages

  std::vector<std::string> languages() const;
  std::vector<std::string> provenances() const;
  ordered_json to_json() const;
};

/// Recomputes the marginals from the cells.
void compute_marginals(ExperimentGrid& grid);

struct CellRun {
  SubDatasetId id;
  Split split;
  Predictor predictor;
  std::vector<Prediction> predictions;  // on split.test
};

struct GridOptions {
  double train_ratio = 0.8;
  SplitMode split_mode = SplitMode::random_stratified;
  std::uint64_t seed = 0;
};

/// Monolingual: one model per sub-dataset, tested on its own held-out
/// split. Multilingual: every language is split separately, one model is
/// trained on the union of the training sides and tested per language.
/// Cells that cannot be run are listed in `missing`.
ExperimentGrid run_grid(const Dataset& dataset, const Trainer& trainer, GridMode mode, const GridOptions& options,
                        std::vector<CellRun>* runs = nullptr);

/// Two-way ANOVA-style summary of a monolingual grid: one one-way ANOVA
/// grouping accuracies by language, another grouping by provenance.
struct GridAnova {
  std::optional<AnovaResult> language;
  std::optional<AnovaResult> provenance;
  Diagnostics language_checks;
  Diagnostics provenance_checks;
  std::string note;
  ordered_json to_json() const;
};
GridAnova grid_anova(const ExperimentGrid& grid);

struct ShiftRow {
  std::string dst;
  std::string model_src;  // provenance the chosen model was trained on
  double in_distribution = 0.0;
  std::map<std::string, double> out_of_distribution;  // test provenance -> accuracy
  double out_mean = 0.0;
  double gap = 0.0;  // out_mean - in_distribution
};

struct ShiftReport {
  std::vector<ShiftRow> rows;
  double mean_gap = 0.0;
  std::optional<TTestResult> test;  // a = out-of-distribution, b = in-distribution accuracies
  std::string note;
  ordered_json to_json() const;
};

/// For each destination language, takes the model whose provenance has the
/// highest per-provenance marginal and scores it on the held-out sets of the
/// other provenances. Records the model was trained on are removed from
/// those sets first.
ShiftReport provenance_shift(const ExperimentGrid& grid, const std::vector<CellRun>& runs);

/// Metrics of an already trained model on an external labeled dataset.
Metrics external_dataset_eval(const Predictor& predictor, const std::vector<SnippetRecord>& external);

struct LengthGroup {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::size_t n = 0;
};

struct LanguageLengths {
  std::string language;
  LengthGroup all, ai, human;
  std::optional<TTestResult> test;  // a = AI lengths, b = human lengths
  std::string note;
};

struct LengthStats {
  std::vector<LanguageLengths> languages;
  ordered_json to_json() const;
};

/// Snippet length in Unicode code points.
std::size_t char_length(std::string_view utf8);
LengthStats length_stats(const Dataset& dataset);

}  // namespace stylo
