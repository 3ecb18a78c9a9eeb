#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "stylo/records.hpp"
#include "stylo/types.hpp"

namespace stylo {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class TreeAlgo { c45_style_tree, random_forest, boosted_trees };
std::string_view to_string(TreeAlgo algo);
TreeAlgo parse_tree_algo(std::string_view text);

struct TreeParams {
  int max_depth = 0;     // 0 grows until leaves are pure or unsplittable
  int max_features = 0;  // features tried per split; 0 means all (sqrt(F) for forests)
  int n_trees = 100;     // forest size
  bool bootstrap = true;
  int rounds = 200;      // boosting rounds
  double learning_rate = 0.1;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;

  static TreeParams defaults(TreeAlgo algo);
  ordered_json to_json() const;
  static TreeParams from_json(const nlohmann::json& j, TreeAlgo algo);
};

/// Internal nodes send x[feature] < threshold to `left`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  int leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return nodes[static_cast<std::size_t>(leaf_for(x))].value;
  }
  int depth() const;
};

/// A single entropy tree, a gini random forest, or a log-loss boosted
/// ensemble. Trees read implicit zeros of sparse inputs as the value 0.
class TreeModel {
 public:
  TreeAlgo algo = TreeAlgo::c45_style_tree;
  int n_features = 0;
  double base_margin = 0.0;  // boosted trees only
  std::vector<DecisionTree> trees;

  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::vector<double> predict_proba(const SparseRows& x) const;
  std::vector<Label> predict(const SparseRows& x) const;

  ordered_json to_json() const;
  static TreeModel from_json(const nlohmann::json& j);
};

/// Needs at least one example; labels may all agree, in which case the
/// model is a single majority leaf.
TreeModel train_tree(const SparseRows& x, const std::vector<Label>& y, TreeAlgo algo, const TreeParams& params);

/// Probability > 0.5 is AI; exact ties go to human.
inline Label label_from_proba(double p) { return p > 0.5 ? Label::ai : Label::human; }

}  // namespace stylo
