#include "stylo/trees.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stylo/rng.hpp"

namespace stylo {

namespace {

enum class Criterion { entropy, gini, newton };

/// Per-row statistics. Classification: g = weight * y, h = weight.
/// Boosting: g, h = gradient, hessian of the log-loss.
struct Stat {
  double g = 0.0, h = 0.0;
  long count = 0;
  Stat& operator+=(const Stat& o) {
    g += o.g, h += o.h, count += o.count;
    return *this;
  }
  Stat operator-(const Stat& o) const { return {g - o.g, h - o.h, count - o.count}; }
};

struct Entry {
  double value;
  int row;
};
using Columns = std::vector<std::vector<Entry>>;

Columns presort(const SparseRows& x) {
  Columns cols(static_cast<std::size_t>(x.cols()));
  for (int r = 0; r < x.outerSize(); ++r)
    for (SparseRows::InnerIterator it(x, r); it; ++it)
      if (it.value() != 0.0) cols[static_cast<std::size_t>(it.col())].push_back({it.value(), r});
  for (auto& c : cols)
    std::sort(c.begin(), c.end(), [](const Entry& a, const Entry& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
  return cols;
}

struct GrowOptions {
  Criterion criterion = Criterion::entropy;
  int max_depth = 0;
  int max_features = 0;  // 0 = all
  double lambda = 1.0;
  double min_child_weight = 0.0;
  double leaf_scale = 1.0;
  Rng* rng = nullptr;
};

double impurity(const Stat& s, Criterion c) {
  if (s.h <= 0.0) return 0.0;
  const double p = std::clamp(s.g / s.h, 0.0, 1.0);
  if (c == Criterion::gini) return s.h * 2.0 * p * (1.0 - p);
  auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return s.h * (term(p) + term(1.0 - p));
}

double newton_score(const Stat& s, double lambda) { return s.g * s.g / (s.h + lambda); }

class Grower {
 public:
  Grower(const Columns& cols, const std::vector<Stat>& stats, const GrowOptions& opt)
      : cols_(cols), stats_(stats), opt_(opt), n_features_(static_cast<int>(cols.size())) {}

  /// Grows one tree over rows with count > 0. Fills `leaf_of` with each
  /// row's final leaf (-1 for rows outside the sample).
  DecisionTree grow(std::vector<int>& leaf_of) {
    const int n = static_cast<int>(stats_.size());
    node_of_.assign(static_cast<std::size_t>(n), -1);
    DecisionTree tree;
    tree.nodes.emplace_back();
    totals_.assign(1, Stat{});
    for (int r = 0; r < n; ++r)
      if (stats_[static_cast<std::size_t>(r)].count > 0) {
        node_of_[static_cast<std::size_t>(r)] = 0;
        totals_[0] += stats_[static_cast<std::size_t>(r)];
      }
    std::vector<int> active{0};
    for (int depth = 0; !active.empty() && (opt_.max_depth == 0 || depth < opt_.max_depth); ++depth)
      active = split_level(tree, active);
    for (auto& node : tree.nodes)
      if (node.left < 0) node.value = leaf_value(totals_[static_cast<std::size_t>(&node - tree.nodes.data())]);
    leaf_of = node_of_;
    return tree;
  }

 private:
  struct Best {
    double gain = -1.0;
    int feature = -1;
    double threshold = 0.0;
  };
  struct Scan {
    Stat nz, left;
    double prev = 0.0;
    bool any = false, zero_done = false, touched = false;
  };

  double leaf_value(const Stat& s) const {
    if (opt_.criterion == Criterion::newton) return -s.g / (s.h + opt_.lambda) * opt_.leaf_scale;
    return s.h > 0.0 ? s.g / s.h : 0.5;
  }

  bool splittable(const Stat& s) const {
    if (s.count < 2) return false;
    if (opt_.criterion == Criterion::newton) return s.h >= 2.0 * opt_.min_child_weight;
    const double p = s.g / s.h;
    return p > 1e-12 && p < 1.0 - 1e-12;
  }

  double gain(const Stat& parent, const Stat& left, const Stat& right) const {
    if (left.count == 0 || right.count == 0) return -1.0;
    if (opt_.criterion == Criterion::newton) {
      if (left.h < opt_.min_child_weight || right.h < opt_.min_child_weight) return -1.0;
      return newton_score(left, opt_.lambda) + newton_score(right, opt_.lambda) - newton_score(parent, opt_.lambda);
    }
    // Zero-gain splits are allowed so that, e.g., XOR is still learnable.
    return std::max(0.0, impurity(parent, opt_.criterion) - impurity(left, opt_.criterion) -
                             impurity(right, opt_.criterion));
  }

  double min_gain() const { return opt_.criterion == Criterion::newton ? 1e-10 : 0.0; }

  void consider(int slot, int node, int feature, double threshold) {
    const Stat& total = totals_[static_cast<std::size_t>(node)];
    const Stat& left = scan_[static_cast<std::size_t>(slot)].left;
    double g = gain(total, left, total - left);
    auto& best = best_[static_cast<std::size_t>(slot)];
    if (g >= min_gain() && g > best.gain + 1e-12) best = {g, feature, threshold};
  }

  void add_zero_group(int slot, int node, int feature) {
    auto& s = scan_[static_cast<std::size_t>(slot)];
    Stat zero = totals_[static_cast<std::size_t>(node)] - s.nz;
    s.zero_done = true;
    if (zero.count <= 0) return;
    if (s.any) consider(slot, node, feature, s.prev / 2.0);
    s.left += zero;
    s.prev = 0.0;
    s.any = true;
  }

  std::vector<int> split_level(DecisionTree& tree, const std::vector<int>& active) {
    const std::size_t slots = active.size();
    slot_of_.assign(tree.nodes.size(), -1);
    std::vector<char> open(slots, 0);
    for (std::size_t i = 0; i < slots; ++i) {
      open[i] = splittable(totals_[static_cast<std::size_t>(active[i])]);
      if (open[i]) slot_of_[static_cast<std::size_t>(active[i])] = static_cast<int>(i);
    }
    best_.assign(slots, Best{});
    scan_.assign(slots, Scan{});
    if (opt_.max_features > 0 && opt_.max_features < n_features_) choose_features(active);
    else allowed_.clear();

    std::vector<int> touched;
    for (int f = 0; f < n_features_; ++f) {
      const auto& col = cols_[static_cast<std::size_t>(f)];
      touched.clear();
      for (const auto& e : col) {
        int slot = slot_for(e.row, f);
        if (slot < 0) continue;
        auto& s = scan_[static_cast<std::size_t>(slot)];
        if (!s.touched) s.touched = true, touched.push_back(slot);
        s.nz += stats_[static_cast<std::size_t>(e.row)];
      }
      for (const auto& e : col) {
        int slot = slot_for(e.row, f);
        if (slot < 0) continue;
        auto& s = scan_[static_cast<std::size_t>(slot)];
        const int node = active[static_cast<std::size_t>(slot)];
        if (e.value > 0.0 && !s.zero_done) add_zero_group(slot, node, f);
        if (s.any && e.value != s.prev) {
          double mid = s.prev + (e.value - s.prev) / 2.0;
          consider(slot, node, f, mid > s.prev ? mid : e.value);
        }
        s.left += stats_[static_cast<std::size_t>(e.row)];
        s.prev = e.value;
        s.any = true;
      }
      for (int slot : touched) {
        auto& s = scan_[static_cast<std::size_t>(slot)];
        if (!s.zero_done) add_zero_group(slot, active[static_cast<std::size_t>(slot)], f);
        s = Scan{};
      }
    }

    std::vector<int> next;
    for (std::size_t i = 0; i < slots; ++i) {
      if (!open[i] || best_[i].feature < 0) continue;
      const int node = active[i];
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& nd = tree.nodes[static_cast<std::size_t>(node)];
      nd.feature = best_[i].feature;
      nd.threshold = best_[i].threshold;
      nd.left = left;
      nd.right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) return next;
    totals_.resize(tree.nodes.size());
    reassign(tree);
    return next;
  }

  int slot_for(int row, int feature) const {
    int node = node_of_[static_cast<std::size_t>(row)];
    if (node < 0) return -1;
    int slot = slot_of_[static_cast<std::size_t>(node)];
    if (slot < 0) return -1;
    if (!allowed_.empty() && !allowed_[static_cast<std::size_t>(slot)][static_cast<std::size_t>(feature)]) return -1;
    return slot;
  }

  /// Samples max_features among the features that vary inside each node.
  void choose_features(const std::vector<int>& active) {
    const std::size_t slots = active.size();
    allowed_.assign(slots, std::vector<char>(static_cast<std::size_t>(n_features_), 0));
    std::vector<std::vector<int>> varying(slots);
    std::vector<long> nz_count(slots, 0);
    std::vector<double> lo(slots), hi(slots);
    for (int f = 0; f < n_features_; ++f) {
      std::vector<int> touched;
      for (const auto& e : cols_[static_cast<std::size_t>(f)]) {
        int node = node_of_[static_cast<std::size_t>(e.row)];
        if (node < 0 || slot_of_[static_cast<std::size_t>(node)] < 0) continue;
        auto slot = static_cast<std::size_t>(slot_of_[static_cast<std::size_t>(node)]);
        if (nz_count[slot] == 0) touched.push_back(static_cast<int>(slot)), lo[slot] = hi[slot] = e.value;
        ++nz_count[slot];
        lo[slot] = std::min(lo[slot], e.value);
        hi[slot] = std::max(hi[slot], e.value);
      }
      for (int s : touched) {
        auto slot = static_cast<std::size_t>(s);
        const long count = totals_[static_cast<std::size_t>(active[slot])].count;
        if (nz_count[slot] < count || lo[slot] != hi[slot]) varying[slot].push_back(f);
        nz_count[slot] = 0;
      }
    }
    for (std::size_t slot = 0; slot < slots; ++slot) {
      auto& v = varying[slot];
      opt_.rng->shuffle(v);
      const std::size_t keep = std::min<std::size_t>(v.size(), static_cast<std::size_t>(opt_.max_features));
      for (std::size_t i = 0; i < keep; ++i) allowed_[slot][static_cast<std::size_t>(v[i])] = 1;
    }
  }

  void reassign(const DecisionTree& tree) {
    const std::vector<int> before = node_of_;
    std::vector<std::vector<int>> nodes_by_feature(static_cast<std::size_t>(n_features_));
    for (std::size_t r = 0; r < node_of_.size(); ++r) {
      int node = before[r];
      if (node < 0) continue;
      const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
      if (nd.left < 0) continue;
      node_of_[r] = 0.0 < nd.threshold ? nd.left : nd.right;
    }
    for (std::size_t node = 0; node < tree.nodes.size(); ++node)
      if (tree.nodes[node].left >= 0 && slot_of_.size() > node && slot_of_[node] >= 0)
        nodes_by_feature[static_cast<std::size_t>(tree.nodes[node].feature)].push_back(static_cast<int>(node));
    for (int f = 0; f < n_features_; ++f) {
      if (nodes_by_feature[static_cast<std::size_t>(f)].empty()) continue;
      for (const auto& e : cols_[static_cast<std::size_t>(f)]) {
        int node = before[static_cast<std::size_t>(e.row)];
        if (node < 0) continue;
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        if (nd.left < 0 || nd.feature != f || slot_of_[static_cast<std::size_t>(node)] < 0) continue;
        node_of_[static_cast<std::size_t>(e.row)] = e.value < nd.threshold ? nd.left : nd.right;
      }
    }
    for (std::size_t r = 0; r < node_of_.size(); ++r) {
      if (node_of_[r] < 0 || node_of_[r] == before[r]) continue;
      totals_[static_cast<std::size_t>(node_of_[r])] += stats_[r];
    }
  }

  const Columns& cols_;
  const std::vector<Stat>& stats_;
  GrowOptions opt_;
  int n_features_;
  std::vector<int> node_of_, slot_of_;
  std::vector<Stat> totals_;
  std::vector<Best> best_;
  std::vector<Scan> scan_;
  std::vector<std::vector<char>> allowed_;
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd dense_row(const SparseRows& x, Eigen::Index r) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.cols());
  for (SparseRows::InnerIterator it(x, r); it; ++it) v(it.col()) = it.value();
  return v;
}

}  // namespace

std::string_view to_string(TreeAlgo algo) {
  switch (algo) {
    case TreeAlgo::c45_style_tree: return "c45_style_tree";
    case TreeAlgo::random_forest: return "random_forest";
    case TreeAlgo::boosted_trees: return "boosted_trees";
  }
  return "unknown";
}

TreeAlgo parse_tree_algo(std::string_view text) {
  for (auto a : {TreeAlgo::c45_style_tree, TreeAlgo::random_forest, TreeAlgo::boosted_trees})
    if (text == to_string(a)) return a;
  throw ValidationError("unknown tree algorithm '" + std::string(text) + "'");
}

TreeParams TreeParams::defaults(TreeAlgo algo) {
  TreeParams p;
  if (algo == TreeAlgo::boosted_trees) p.max_depth = 6;
  return p;
}

ordered_json TreeParams::to_json() const {
  ordered_json j;
  j["max_depth"] = max_depth;
  j["max_features"] = max_features;
  j["n_trees"] = n_trees;
  j["bootstrap"] = bootstrap;
  j["rounds"] = rounds;
  j["learning_rate"] = learning_rate;
  j["lambda"] = lambda;
  j["min_child_weight"] = min_child_weight;
  j["seed"] = seed;
  return j;
}

TreeParams TreeParams::from_json(const nlohmann::json& j, TreeAlgo algo) {
  TreeParams p = defaults(algo);
  static const std::set<std::string> known{"max_depth", "max_features", "n_trees", "bootstrap", "rounds",
                                           "learning_rate", "lambda", "min_child_weight", "seed"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ValidationError("unknown tree parameter '" + k + "'");
  try {
    p.max_depth = j.value("max_depth", p.max_depth);
    p.max_features = j.value("max_features", p.max_features);
    p.n_trees = j.value("n_trees", p.n_trees);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    p.rounds = j.value("rounds", p.rounds);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.lambda = j.value("lambda", p.lambda);
    p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("tree parameters: ") + e.what());
  }
  if (p.max_depth < 0 || p.max_features < 0 || p.n_trees < 1 || p.rounds < 1 || !(p.learning_rate > 0) ||
      p.lambda < 0 || p.min_child_weight < 0)
    throw ValidationError("tree parameters out of range");
  return p;
}

int DecisionTree::leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].left >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = x(nd.feature) < nd.threshold ? nd.left : nd.right;
  }
  return node;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].left >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double TreeModel::predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_features) throw std::invalid_argument("feature vector has the wrong dimension");
  if (algo == TreeAlgo::boosted_trees) {
    double margin = base_margin;
    for (const auto& t : trees) margin += t.evaluate(x);
    return sigmoid(margin);
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.evaluate(x);
  return trees.empty() ? 0.5 : sum / static_cast<double>(trees.size());
}

std::vector<double> TreeModel::predict_proba(const SparseRows& x) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out.push_back(predict_proba(dense_row(x, r)));
  return out;
}

std::vector<Label> TreeModel::predict(const SparseRows& x) const {
  std::vector<Label> out;
  for (double p : predict_proba(x)) out.push_back(label_from_proba(p));
  return out;
}

ordered_json TreeModel::to_json() const {
  ordered_json j;
  j["algo"] = to_string(algo);
  j["n_features"] = n_features;
  j["base_margin"] = base_margin;
  j["trees"] = ordered_json::array();
  for (const auto& t : trees) {
    ordered_json jt;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    jt["feature"] = feature;
    jt["threshold"] = threshold;
    jt["left"] = left;
    jt["right"] = right;
    jt["value"] = value;
    j["trees"].push_back(std::move(jt));
  }
  return j;
}

TreeModel TreeModel::from_json(const nlohmann::json& j) {
  TreeModel m;
  m.algo = parse_tree_algo(j.at("algo").get<std::string>());
  m.n_features = j.at("n_features");
  m.base_margin = j.at("base_margin");
  for (const auto& jt : j.at("trees")) {
    auto feature = jt.at("feature").get<std::vector<int>>();
    auto threshold = jt.at("threshold").get<std::vector<double>>();
    auto left = jt.at("left").get<std::vector<int>>();
    auto right = jt.at("right").get<std::vector<int>>();
    auto value = jt.at("value").get<std::vector<double>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
      throw ValidationError("malformed tree");
    DecisionTree t;
    for (std::size_t i = 0; i < n; ++i) {
      const bool leaf = left[i] < 0;
      if (!leaf && (left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) ||
                    left[i] >= static_cast<int>(n) || right[i] >= static_cast<int>(n) || feature[i] < 0 ||
                    feature[i] >= m.n_features))
        throw ValidationError("malformed tree node");
      t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

TreeModel train_tree(const SparseRows& x, const std::vector<Label>& y, TreeAlgo algo, const TreeParams& params) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw ValidationError("cannot train a tree on zero examples");
  if (y.size() != n) throw std::invalid_argument("label count differs from row count");
  const Columns cols = presort(x);
  TreeModel model;
  model.algo = algo;
  model.n_features = static_cast<int>(x.cols());
  std::vector<int> leaf_of;

  if (algo == TreeAlgo::c45_style_tree) {
    std::vector<Stat> stats(n);
    for (std::size_t i = 0; i < n; ++i) stats[i] = {y[i] == Label::ai ? 1.0 : 0.0, 1.0, 1};
    GrowOptions opt;
    opt.criterion = Criterion::entropy;
    opt.max_depth = params.max_depth;
    opt.max_features = params.max_features;
    Rng rng = Rng::derived(params.seed, "tree");
    opt.rng = &rng;
    model.trees.push_back(Grower(cols, stats, opt).grow(leaf_of));
    return model;
  }

  if (algo == TreeAlgo::random_forest) {
    GrowOptions opt;
    opt.criterion = Criterion::gini;
    opt.max_depth = params.max_depth;
    opt.max_features = params.max_features > 0
                           ? params.max_features
                           : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
    for (int t = 0; t < params.n_trees; ++t) {
      Rng rng = Rng::derived(params.seed, "forest:" + std::to_string(t));
      std::vector<Stat> stats(n);
      for (std::size_t d = 0; d < n; ++d) {
        std::size_t i = params.bootstrap ? static_cast<std::size_t>(rng.below(n)) : d;
        stats[i] += Stat{y[i] == Label::ai ? 1.0 : 0.0, 1.0, 0};
      }
      for (auto& s : stats) s.count = s.h > 0 ? 1 : 0;
      opt.rng = &rng;
      model.trees.push_back(Grower(cols, stats, opt).grow(leaf_of));
    }
    return model;
  }

  double positives = 0;
  for (auto label : y) positives += label == Label::ai;
  const double prior = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  model.base_margin = std::log(prior / (1.0 - prior));
  std::vector<double> margin(n, model.base_margin);
  GrowOptions opt;
  opt.criterion = Criterion::newton;
  opt.max_depth = params.max_depth;
  opt.max_features = params.max_features;
  opt.lambda = params.lambda;
  opt.min_child_weight = params.min_child_weight;
  opt.leaf_scale = params.learning_rate;
  Rng rng = Rng::derived(params.seed, "boost");
  opt.rng = &rng;
  std::vector<Stat> stats(n);
  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      stats[i] = {p - (y[i] == Label::ai ? 1.0 : 0.0), std::max(p * (1.0 - p), 1e-16), 1};
    }
    DecisionTree tree = Grower(cols, stats, opt).grow(leaf_of);
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace stylo
