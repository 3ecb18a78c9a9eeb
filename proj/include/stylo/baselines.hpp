#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stylo/features.hpp"
#include "stylo/records.hpp"
#include "stylo/tfidf.hpp"
#include "stylo/trees.hpp"

namespace stylo {

/// feature_tree: layout/lexical features into one entropy tree.
/// feature_forest: the same features into a random forest.
/// tfidf_boosted: TF-IDF vectors into gradient-boosted trees.
enum class BaselineKind { feature_tree, feature_forest, tfidf_boosted };
std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view text);
TreeAlgo tree_algo_for(BaselineKind kind);

struct BaselineSpec {
  BaselineKind kind = BaselineKind::tfidf_boosted;
  TreeParams params = TreeParams::defaults(TreeAlgo::boosted_trees);

  static BaselineSpec defaults(BaselineKind kind);
  ordered_json to_json() const;
  static BaselineSpec from_json(const nlohmann::json& j);
};

/// Union of the feature names over `languages`: the shared block, then
/// every distinct keyword feature in language order.
std::vector<std::string> feature_names_for(const std::vector<std::string>& languages);

/// Rows of extract_features laid out by `names`; keyword features of other
/// languages are 0.
SparseRows feature_matrix(const std::vector<SnippetRecord>& records, const std::vector<std::string>& names);

/// A fitted baseline: its input transformation plus the trees.
class BaselineModel {
 public:
  BaselineKind kind = BaselineKind::tfidf_boosted;
  std::vector<std::string> feature_names;  // feature kinds only
  std::optional<TfidfModel> tfidf;         // tfidf_boosted only
  TreeModel trees;

  static BaselineModel fit(const BaselineSpec& spec, const std::vector<SnippetRecord>& records);

  SparseRows transform(const std::vector<SnippetRecord>& records) const;
  std::vector<double> predict_proba(const std::vector<SnippetRecord>& records) const;
  std::vector<Prediction> predict(const std::vector<SnippetRecord>& records) const;

  ordered_json to_json() const;
  static BaselineModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static BaselineModel load(const std::filesystem::path& path);
};

/// Prediction carrying prob_ai = p; logits are (0, ln(p / (1 - p))).
Prediction prediction_from_proba(double p);

struct CvResult {
  std::vector<double> fold_scores;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
  std::vector<std::vector<std::size_t>> folds;

  ordered_json to_json() const;
};

/// k disjoint folds covering every index. Within each class, fold counts
/// differ by at most one. Throws ValidationError when k < 2 or a class has
/// fewer than k members.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Label>& labels, int k, std::uint64_t seed);

/// Trains on k - 1 folds and predicts the held-out one.
using FoldRunner = std::function<std::vector<Label>(const std::vector<SnippetRecord>& train,
                                                    const std::vector<SnippetRecord>& test)>;

CvResult cross_validate(const std::vector<SnippetRecord>& records, int k, std::uint64_t seed, const FoldRunner& run,
                        int workers = 1);
CvResult cross_validate(const BaselineSpec& spec, const std::vector<SnippetRecord>& records, int k,
                        std::uint64_t seed, int workers = 1);

}  // namespace stylo
