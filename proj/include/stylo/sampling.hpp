#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylo/records.hpp"
#include "stylo/rng.hpp"
#include "stylo/types.hpp"

namespace stylo {

/// Class-balanced multilingual sampling plan. For every destination language
/// the AI half is drawn from the other languages' translations with quotas
/// that differ by at most one.
struct SamplePlan {
  int per_class_count = 470;
  std::uint64_t seed = 0;
  std::map<std::string, std::map<std::string, int>> provenance_quota;  // dst -> src -> count

  ordered_json to_json() const;
  void validate() const;
};

/// Splits n over the provenances: n / P each, and the n % P leftover slots go
/// to provenances in seeded-shuffled order.
std::map<std::string, int> provenance_quota(int n, const std::vector<std::string>& provenances, Rng& rng);

/// Quotas for every destination language found in the dataset.
SamplePlan make_sample_plan(const Dataset& dataset, int per_class_count, std::uint64_t seed);

/// Exactly n human + n AI records, drawn without replacement; input order is
/// kept. Throws ValidationError naming the short class.
SubDataset undersample_subdataset(const SubDataset& sd, int n, std::uint64_t seed);

/// Groups records by their `set` label, in order of first appearance.
std::vector<SubDataset> partition_by_set(const Dataset& dataset);

/// Per destination language: per_class_count human records with distinct
/// tasks, and per_class_count AI records with distinct tasks drawn per
/// provenance quota. Throws ValidationError naming an infeasible cell.
Dataset sample_multilingual(const Dataset& dataset, const SamplePlan& plan);

enum class SplitMode { random_stratified, task_grouped };
std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

struct Split {
  std::vector<SnippetRecord> train;
  std::vector<SnippetRecord> test;
  double ratio = 0.8;
  SplitMode mode = SplitMode::random_stratified;
};

/// Train/test split with round(ratio * n) training records. Stratified mode
/// allocates each class proportionally (largest remainder); grouped mode
/// never puts one task on both sides.
Split split_train_test(const std::vector<SnippetRecord>& records, double ratio, SplitMode mode, std::uint64_t seed);

/// (set, task, target) rows for auditing a sample.
std::vector<ordered_json> sample_manifest(const std::vector<SnippetRecord>& records);
/// (set, task, target, split) rows.
std::vector<ordered_json> split_manifest(const Split& split);

}  // namespace stylo
