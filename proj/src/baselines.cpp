#include "stylo/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "stylo/rng.hpp"

namespace stylo {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::feature_tree: return "feature_tree";
    case BaselineKind::feature_forest: return "feature_forest";
    case BaselineKind::tfidf_boosted: return "tfidf_boosted";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(std::string_view text) {
  for (auto k : {BaselineKind::feature_tree, BaselineKind::feature_forest, BaselineKind::tfidf_boosted})
    if (text == to_string(k)) return k;
  throw ValidationError("unknown baseline '" + std::string(text) + "'");
}

TreeAlgo tree_algo_for(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::feature_tree: return TreeAlgo::c45_style_tree;
    case BaselineKind::feature_forest: return TreeAlgo::random_forest;
    case BaselineKind::tfidf_boosted: return TreeAlgo::boosted_trees;
  }
  return TreeAlgo::c45_style_tree;
}

BaselineSpec BaselineSpec::defaults(BaselineKind kind) { return {kind, TreeParams::defaults(tree_algo_for(kind))}; }

ordered_json BaselineSpec::to_json() const {
  ordered_json j;
  j["kind"] = to_string(kind);
  j["params"] = params.to_json();
  return j;
}

BaselineSpec BaselineSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ValidationError("baseline spec needs a 'kind'");
  for (const auto& [k, v] : j.items())
    if (k != "kind" && k != "params") throw ValidationError("unknown baseline field '" + k + "'");
  BaselineSpec s = defaults(parse_baseline_kind(j.at("kind").get<std::string>()));
  if (j.contains("params")) s.params = TreeParams::from_json(j.at("params"), tree_algo_for(s.kind));
  return s;
}

std::vector<std::string> feature_names_for(const std::vector<std::string>& languages) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  bool base_done = false;
  for (const auto& lang : languages) {
    auto fv = extract_features("x", lang);
    for (std::size_t i = 0; i < fv.names.size(); ++i) {
      if (i < kBaseFeatureCount && base_done) continue;
      if (seen.insert(fv.names[i]).second) names.push_back(fv.names[i]);
    }
    base_done = true;
  }
  return names;
}

SparseRows feature_matrix(const std::vector<SnippetRecord>& records, const std::vector<std::string>& names) {
  std::map<std::string, int, std::less<>> column;
  for (std::size_t i = 0; i < names.size(); ++i) column.emplace(names[i], static_cast<int>(i));
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto fv = extract_features(records[r].code, records[r].language_name);
    for (std::size_t i = 0; i < fv.size(); ++i) {
      auto it = column.find(fv.names[i]);
      if (it != column.end() && fv.values[i] != 0.0) triplets.emplace_back(static_cast<int>(r), it->second, fv.values[i]);
    }
  }
  SparseRows x(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(names.size()));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

namespace {

std::vector<Label> labels_of(const std::vector<SnippetRecord>& records) {
  std::vector<Label> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.target);
  return y;
}

std::vector<std::string> codes_of(const std::vector<SnippetRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.code);
  return out;
}

}  // namespace

BaselineModel BaselineModel::fit(const BaselineSpec& spec, const std::vector<SnippetRecord>& records) {
  if (records.empty()) throw ValidationError("cannot fit a baseline on zero records");
  BaselineModel m;
  m.kind = spec.kind;
  if (spec.kind == BaselineKind::tfidf_boosted) {
    m.tfidf = TfidfModel::fit(codes_of(records));
  } else {
    std::set<std::string> langs;
    for (const auto& r : records) langs.insert(r.language_name);
    m.feature_names = feature_names_for({langs.begin(), langs.end()});
  }
  m.trees = train_tree(m.transform(records), labels_of(records), tree_algo_for(spec.kind), spec.params);
  return m;
}

SparseRows BaselineModel::transform(const std::vector<SnippetRecord>& records) const {
  if (tfidf) return tfidf->transform(codes_of(records));
  return feature_matrix(records, feature_names);
}

std::vector<double> BaselineModel::predict_proba(const std::vector<SnippetRecord>& records) const {
  return trees.predict_proba(transform(records));
}

Prediction prediction_from_proba(double p) {
  Prediction pr;
  pr.prob_ai = p;
  pr.label = label_from_proba(p);
  const double q = std::clamp(p, 1e-15, 1.0 - 1e-15);
  pr.logits = {0.0, std::log(q / (1.0 - q))};
  return pr;
}

std::vector<Prediction> BaselineModel::predict(const std::vector<SnippetRecord>& records) const {
  std::vector<Prediction> out;
  for (double p : predict_proba(records)) out.push_back(prediction_from_proba(p));
  return out;
}

ordered_json BaselineModel::to_json() const {
  ordered_json j;
  j["format"] = "stylo-baseline/1";
  j["kind"] = to_string(kind);
  if (tfidf) j["tfidf"] = tfidf->to_json();
  else j["feature_names"] = feature_names;
  j["model"] = trees.to_json();
  return j;
}

BaselineModel BaselineModel::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "stylo-baseline/1") throw ValidationError("not a baseline model file");
    BaselineModel m;
    m.kind = parse_baseline_kind(j.at("kind").get<std::string>());
    if (m.kind == BaselineKind::tfidf_boosted) m.tfidf = TfidfModel::from_json(j.at("tfidf"));
    else m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.trees = TreeModel::from_json(j.at("model"));
    const std::size_t width = m.tfidf ? m.tfidf->size() : m.feature_names.size();
    if (static_cast<std::size_t>(m.trees.n_features) != width)
      throw ValidationError("baseline model width does not match its input transformation");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed baseline model: ") + e.what());
  }
}

void BaselineModel::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump() + "\n"); }

BaselineModel BaselineModel::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed baseline model " + path.string() + ": " + e.what());
  }
}

ordered_json CvResult::to_json() const {
  ordered_json j;
  j["k"] = fold_scores.size();
  j["fold_scores"] = fold_scores;
  j["mean"] = mean;
  j["std"] = std;
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  j["fold_sizes"] = sizes;
  return j;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Label>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("cross-validation needs k >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < static_cast<std::size_t>(k))
      throw ValidationError(std::string(to_string(static_cast<Label>(c))) + " class has " +
                            std::to_string(by_class[c].size()) + " records, fewer than k = " + std::to_string(k));
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t offset = 0;
  for (int c = 0; c < 2; ++c) {
    Rng rng = Rng::derived(seed, c == 0 ? "folds:human" : "folds:ai");
    rng.shuffle(by_class[c]);
    for (std::size_t j = 0; j < by_class[c].size(); ++j) folds[(offset + j) % static_cast<std::size_t>(k)].push_back(by_class[c][j]);
    offset += by_class[c].size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvResult cross_validate(const std::vector<SnippetRecord>& records, int k, std::uint64_t seed, const FoldRunner& run,
                        int workers) {
  CvResult res;
  res.folds = stratified_folds(labels_of(records), k, seed);
  res.fold_scores.assign(static_cast<std::size_t>(k), 0.0);

  auto run_fold = [&](std::size_t f) {
    std::vector<char> held(records.size(), 0);
    for (auto i : res.folds[f]) held[i] = 1;
    std::vector<SnippetRecord> train, test;
    for (std::size_t i = 0; i < records.size(); ++i) (held[i] ? test : train).push_back(records[i]);
    auto predicted = run(train, test);
    if (predicted.size() != test.size()) throw Error("fold runner returned the wrong number of predictions");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) correct += predicted[i] == test[i].target;
    res.fold_scores[f] = static_cast<double>(correct) / static_cast<double>(test.size());
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t f = next++; f < res.folds.size(); f = next++) {
      try {
        run_fold(f);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n_workers = std::clamp(workers, 1, k);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (double s : res.fold_scores) res.mean += s;
  res.mean /= static_cast<double>(k);
  for (double s : res.fold_scores) res.std += (s - res.mean) * (s - res.mean);
  res.std = std::sqrt(res.std / static_cast<double>(k));
  return res;
}

CvResult cross_validate(const BaselineSpec& spec, const std::vector<SnippetRecord>& records, int k,
                        std::uint64_t seed, int workers) {
  auto result = cross_validate(
      records, k, seed,
      [&](const std::vector<SnippetRecord>& train, const std::vector<SnippetRecord>& test) {
        auto model = BaselineModel::fit(spec, train);
        std::vector<Label> out;
        for (const auto& p : model.predict(test)) out.push_back(p.label);
        return out;
      },
      workers);
  spdlog::info("{} {}-fold CV: mean {:.4f} std {:.4f}", to_string(spec.kind), k, result.mean, result.std);
  return result;
}

}  // namespace stylo
