#include "stylo/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace stylo {

ordered_json SamplePlan::to_json() const {
  ordered_json j;
  j["per_class_count"] = per_class_count;
  j["seed"] = seed;
  j["rng"] = std::string(Rng::algorithm);
  ordered_json q = ordered_json::object();
  for (const auto& [dst, quotas] : provenance_quota) {
    ordered_json row = ordered_json::object();
    for (const auto& [src, n] : quotas) row[src] = n;
    q[dst] = row;
  }
  j["provenance_quota"] = q;
  return j;
}

void SamplePlan::validate() const {
  if (per_class_count < 1) throw ValidationError("per_class_count must be positive");
  for (const auto& [dst, quotas] : provenance_quota) {
    int sum = 0, lo = per_class_count, hi = 0;
    for (const auto& [src, n] : quotas) {
      sum += n;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    if (sum != per_class_count) throw ValidationError("quotas for " + dst + " do not sum to per_class_count");
    if (!quotas.empty() && hi - lo > 1) throw ValidationError("quotas for " + dst + " are not uniform");
  }
}

std::map<std::string, int> provenance_quota(int n, const std::vector<std::string>& provenances, Rng& rng) {
  if (provenances.empty()) throw ValidationError("no provenance languages to sample from");
  std::vector<std::string> order(provenances);
  std::sort(order.begin(), order.end());
  const int p = static_cast<int>(order.size());
  std::map<std::string, int> quota;
  for (const auto& src : order) quota[src] = n / p;
  rng.shuffle(order);
  for (int i = 0; i < n % p; ++i) ++quota[order[static_cast<std::size_t>(i)]];
  return quota;
}

SamplePlan make_sample_plan(const Dataset& dataset, int per_class_count, std::uint64_t seed) {
  SamplePlan plan;
  plan.per_class_count = per_class_count;
  plan.seed = seed;
  std::map<std::string, std::set<std::string>> provenances;
  for (const auto& r : dataset.records) {
    auto& provs = provenances[r.language_name];
    if (r.target == Label::ai) provs.insert(SubDatasetId::parse(r.set).src);
  }
  for (const auto& [dst, provs] : provenances) {
    auto rng = Rng::derived(seed, "quota:" + dst);
    plan.provenance_quota[dst] = provenance_quota(per_class_count, {provs.begin(), provs.end()}, rng);
  }
  plan.validate();
  return plan;
}

SubDataset undersample_subdataset(const SubDataset& sd, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("undersampling target must be positive");
  std::vector<std::size_t> human, ai;
  for (std::size_t i = 0; i < sd.records.size(); ++i)
    (sd.records[i].target == Label::ai ? ai : human).push_back(i);
  const auto label = sd.id.label();
  for (auto [cls, pool] : {std::pair{"human", &human}, std::pair{"ai", &ai}}) {
    if (pool->size() < static_cast<std::size_t>(n))
      throw ValidationError(label + ": " + std::to_string(pool->size()) + " " + cls + " records, " + std::to_string(n) +
                            " required (short by " + std::to_string(n - pool->size()) + ")");
  }
  auto rng = Rng::derived(seed, "undersample:" + label);
  std::vector<std::size_t> keep;
  for (auto* pool : {&human, &ai}) {
    rng.shuffle(*pool);
    keep.insert(keep.end(), pool->begin(), pool->begin() + n);
  }
  std::sort(keep.begin(), keep.end());
  SubDataset out{sd.id, {}};
  out.records.reserve(keep.size());
  for (auto i : keep) out.records.push_back(sd.records[i]);
  return out;
}

std::vector<SubDataset> partition_by_set(const Dataset& dataset) {
  std::vector<SubDataset> out;
  std::map<std::string, std::size_t> where;
  for (const auto& r : dataset.records) {
    auto [it, fresh] = where.emplace(r.set, out.size());
    if (fresh) out.push_back({SubDatasetId::parse(r.set), {}});
    out[it->second].records.push_back(r);
  }
  return out;
}

namespace {

/// Kuhn's augmenting-path matching of provenance slots onto distinct tasks.
class SlotMatcher {
 public:
  SlotMatcher(std::vector<std::vector<int>> slot_candidates, int task_count)
      : candidates_(std::move(slot_candidates)), task_owner_(static_cast<std::size_t>(task_count), -1) {}

  int solve() {
    int matched = 0;
    for (std::size_t s = 0; s < candidates_.size(); ++s) {
      visited_.assign(task_owner_.size(), false);
      if (augment(static_cast<int>(s))) ++matched;
    }
    return matched;
  }

  /// Task assigned to each slot, or -1.
  std::vector<int> assignment() const {
    std::vector<int> out(candidates_.size(), -1);
    for (std::size_t t = 0; t < task_owner_.size(); ++t)
      if (task_owner_[t] >= 0) out[static_cast<std::size_t>(task_owner_[t])] = static_cast<int>(t);
    return out;
  }

 private:
  bool augment(int slot) {
    for (int t : candidates_[static_cast<std::size_t>(slot)]) {
      auto ti = static_cast<std::size_t>(t);
      if (visited_[ti]) continue;
      visited_[ti] = true;
      if (task_owner_[ti] < 0 || augment(task_owner_[ti])) {
        task_owner_[ti] = slot;
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<int>> candidates_;
  std::vector<int> task_owner_;
  std::vector<bool> visited_;
};

}  // namespace

Dataset sample_multilingual(const Dataset& dataset, const SamplePlan& plan) {
  plan.validate();
  const int n = plan.per_class_count;
  std::vector<std::size_t> chosen;

  for (const auto& [dst, quotas] : plan.provenance_quota) {
    auto rng = Rng::derived(plan.seed, "multilingual:" + dst);

    // Human half: n distinct tasks, one record each.
    std::map<std::string, std::vector<std::size_t>> human_by_task;
    std::map<std::string, std::vector<std::size_t>> ai_by_src;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
      const auto& r = dataset.records[i];
      if (r.language_name != dst) continue;
      if (r.target == Label::human) human_by_task[r.task_name].push_back(i);
      else ai_by_src[SubDatasetId::parse(r.set).src].push_back(i);
    }
    if (human_by_task.size() < static_cast<std::size_t>(n))
      throw ValidationError(dst + ": " + std::to_string(human_by_task.size()) + " distinct human tasks, " +
                            std::to_string(n) + " required");
    std::vector<std::string> tasks;
    for (const auto& [task, idx] : human_by_task) tasks.push_back(task);
    rng.shuffle(tasks);
    for (int k = 0; k < n; ++k) {
      const auto& idx = human_by_task[tasks[static_cast<std::size_t>(k)]];
      chosen.push_back(idx[rng.below(idx.size())]);
    }

    // AI half: quota slots per provenance matched onto distinct tasks.
    std::map<std::string, int> task_id;
    std::vector<std::size_t> slot_record_base;
    std::vector<std::vector<int>> slot_candidates;
    std::vector<std::string> slot_src;
    std::map<std::string, std::map<int, std::size_t>> record_of;  // src -> task id -> record
    for (const auto& [src, quota] : quotas) {
      auto pool = ai_by_src[src];
      if (pool.size() < static_cast<std::size_t>(quota))
        throw ValidationError("quota infeasible for (" + dst + ", " + src + "): " + std::to_string(pool.size()) +
                              " AI records, quota " + std::to_string(quota));
      rng.shuffle(pool);
      std::vector<int> cands;
      for (auto i : pool) {
        auto [it, fresh] = task_id.emplace(dataset.records[i].task_name, static_cast<int>(task_id.size()));
        if (record_of[src].emplace(it->second, i).second) cands.push_back(it->second);
      }
      for (int q = 0; q < quota; ++q) {
        // Rotate so slots of one provenance do not all start on the same task.
        std::vector<int> rotated(cands);
        if (!rotated.empty())
          std::rotate(rotated.begin(), rotated.begin() + static_cast<long>(static_cast<std::size_t>(q) % rotated.size()),
                      rotated.end());
        slot_candidates.push_back(std::move(rotated));
        slot_src.push_back(src);
      }
    }
    SlotMatcher matcher(slot_candidates, static_cast<int>(task_id.size()));
    if (matcher.solve() < n) {
      auto assign = matcher.assignment();
      std::map<std::string, int> missing;
      for (std::size_t s = 0; s < assign.size(); ++s)
        if (assign[s] < 0) ++missing[slot_src[s]];
      std::string cells;
      for (const auto& [src, m] : missing) cells += " (" + dst + ", " + src + ") short by " + std::to_string(m) + ";";
      throw ValidationError("quota infeasible with distinct tasks:" + cells);
    }
    auto assign = matcher.assignment();
    for (std::size_t s = 0; s < assign.size(); ++s) chosen.push_back(record_of[slot_src[s]][assign[s]]);
  }

  std::sort(chosen.begin(), chosen.end());
  Dataset out;
  out.records.reserve(chosen.size());
  for (auto i : chosen) out.records.push_back(dataset.records[i]);
  return out;
}

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::task_grouped ? "task_grouped" : "random_stratified";
}

SplitMode parse_split_mode(std::string_view text) {
  if (text == "random_stratified") return SplitMode::random_stratified;
  if (text == "task_grouped") return SplitMode::task_grouped;
  throw ValidationError("unknown split mode '" + std::string(text) + "'");
}

Split split_train_test(const std::vector<SnippetRecord>& records, double ratio, SplitMode mode, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must be in (0, 1)");
  const std::size_t total = records.size();
  if (total < 2) throw ValidationError("need at least 2 records to split, got " + std::to_string(total));
  const auto target = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total))),
                                              1, total - 1);
  auto rng = Rng::derived(seed, std::string("split:") + std::string(to_string(mode)));
  std::vector<bool> in_train(total, false);

  if (mode == SplitMode::random_stratified) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < total; ++i) by_class[static_cast<std::size_t>(records[i].target)].push_back(i);
    // Largest-remainder allocation of `target` over the classes.
    std::array<std::size_t, 2> take{};
    std::array<double, 2> frac{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 2; ++c) {
      double exact = ratio * static_cast<double>(by_class[c].size());
      take[c] = static_cast<std::size_t>(std::floor(exact));
      frac[c] = exact - std::floor(exact);
      assigned += take[c];
    }
    while (assigned < target) {
      std::size_t c = frac[1] > frac[0] ? 1 : 0;
      if (take[c] >= by_class[c].size()) c = 1 - c;
      ++take[c];
      frac[c] = -1.0;
      ++assigned;
    }
    while (assigned > target) {
      std::size_t c = take[1] > take[0] ? 1 : 0;
      --take[c];
      --assigned;
    }
    for (std::size_t c = 0; c < 2; ++c) {
      rng.shuffle(by_class[c]);
      for (std::size_t k = 0; k < take[c]; ++k) in_train[by_class[c][k]] = true;
    }
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < total; ++i) groups[records[i].task_name].push_back(i);
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [task, idx] : groups) order.push_back(&idx);
    rng.shuffle(order);
    std::size_t train_size = 0;
    for (const auto* g : order) {
      if (train_size + g->size() <= target) {
        for (auto i : *g) in_train[i] = true;
        train_size += g->size();
      }
    }
    if (train_size == 0 || train_size == total)
      throw ValidationError("task-grouped split leaves one side empty (" + std::to_string(groups.size()) + " tasks)");
  }

  Split split;
  split.ratio = ratio;
  split.mode = mode;
  for (std::size_t i = 0; i < total; ++i) (in_train[i] ? split.train : split.test).push_back(records[i]);
  if (split.train.empty() || split.test.empty()) throw ValidationError("dataset too small to split");
  return split;
}

std::vector<ordered_json> sample_manifest(const std::vector<SnippetRecord>& records) {
  std::vector<ordered_json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    ordered_json j;
    j["set"] = r.set;
    j["task"] = r.task_name;
    j["target"] = std::string(to_string(r.target));
    rows.push_back(std::move(j));
  }
  return rows;
}

std::vector<ordered_json> split_manifest(const Split& split) {
  std::vector<ordered_json> rows;
  for (const auto* side : {&split.train, &split.test}) {
    auto part = sample_manifest(*side);
    for (auto& j : part) {
      j["split"] = side == &split.train ? "train" : "test";
      rows.push_back(std::move(j));
    }
  }
  return rows;
}

}  // namespace stylo
