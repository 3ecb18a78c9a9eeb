#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stylo/completion.hpp"
#include "stylo/config.hpp"
#include "stylo/experiments.hpp"
#include "stylo/generation.hpp"

namespace stylo {

/// Artifact layout under the configured directories:
///   datasets/subsets/<Dst>_from_<Src>.jsonl, datasets/dataset.jsonl,
///   datasets/build_report.json, datasets/manifest.json
///   datasets/samples/monolingual/<label>.jsonl, datasets/samples/multilingual.jsonl,
///   datasets/samples/{sample_plan.json, *_manifest.jsonl, sample_report.json, manifest.json}
///   checkpoints/<label>/ (checkpoint files, metrics.json, run_manifest.json)
///   reports/ (grids, tables, shift, baselines, manifest.json)
namespace layout {
std::filesystem::path subsets_dir(const RunConfig& c);
std::filesystem::path dataset_file(const RunConfig& c);
std::filesystem::path samples_dir(const RunConfig& c);
std::filesystem::path monolingual_samples_dir(const RunConfig& c);
std::filesystem::path multilingual_sample_file(const RunConfig& c);
}  // namespace layout

/// Replay record written next to every command's outputs. Paths are stored
/// relative to the manifest's directory; there are no timestamps.
class RunManifest {
 public:
  RunManifest(std::string command, const RunConfig& config);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set(const std::string& key, ordered_json value);
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  ordered_json config_;
  std::string config_hash_;
  std::uint64_t seed_ = 0;
  std::uint64_t train_seed_ = 0;
  std::vector<std::filesystem::path> inputs_, outputs_;
  ordered_json extra_ = ordered_json::object();
};

/// The completion client the config asks for.
std::unique_ptr<CompletionClient> make_completion_client(const RunConfig& config);

/// Ranking restricted to the configured supported languages.
LanguageRanking effective_ranking(const RunConfig& config, const LanguageRegistry& registry);

struct BuildResult {
  Dataset dataset;
  DatasetSummary summary;
  std::vector<std::string> sets;
  std::size_t failures = 0;
};

/// Builds every sub-dataset of the top-k languages and writes the dataset
/// files. `client` overrides the configured one.
BuildResult cmd_build_dataset(const RunConfig& config, CompletionClient* client = nullptr);

struct SampleResult {
  std::vector<std::string> monolingual_sets;
  std::vector<std::string> skipped;  // sets with too few records
  std::size_t multilingual_records = 0;
};

/// Undersamples every sub-dataset and draws the multilingual sample.
SampleResult cmd_sample(const RunConfig& config);

/// A training scope: "multilingual", "Dst/Src" or "Dst_from_Src".
struct Scope {
  bool multilingual = true;
  SubDatasetId id;

  static Scope parse(std::string_view text);
  std::string label() const;
};

/// The seed-derived training configuration used for one grid cell.
TrainConfig cell_train_config(const RunConfig& config, const std::string& cell);

struct TrainResult {
  std::filesystem::path checkpoint_dir;
  Metrics test_metrics;
};

/// Trains one model on the training side of the scope's sample and scores
/// it on the test side.
TrainResult cmd_train(const RunConfig& config, const Scope& scope);

enum class EvalScope { all, monolingual, multilingual };
EvalScope parse_eval_scope(std::string_view text);

struct EvaluateResult {
  std::optional<ExperimentGrid> monolingual;
  std::optional<ExperimentGrid> multilingual;
  std::optional<ShiftReport> shift;
};

/// Runs the experiment grids, the provenance-shift analysis, the baseline
/// comparison and the optional external-dataset evaluation.
EvaluateResult cmd_evaluate(const RunConfig& config, EvalScope scope = EvalScope::all);

/// Reads snippets from `in`: a JSONL stream of objects with a "code" field,
/// or otherwise one raw snippet. Blank input yields nothing.
std::vector<std::string> read_detect_input(std::istream& in);

/// Writes {index, label, prob_ai} lines and returns the number of verdicts.
std::size_t cmd_detect(const std::filesystem::path& checkpoint_dir, std::istream& in, std::ostream& out);

/// Snippet-length table and overlapping-task counts for a dataset file.
/// Writes into `out_dir` when it is non-empty and returns the text table.
std::string cmd_stats(const RunConfig& config, const std::filesystem::path& dataset_path,
                      const std::filesystem::path& out_dir);

/// Re-renders the text tables from the stored grid files.
std::string cmd_report(const RunConfig& config);

}  // namespace stylo
