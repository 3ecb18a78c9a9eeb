#include "stylo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "stylo/rng.hpp"

namespace stylo {

std::vector<Label> labels_of(const std::vector<SnippetRecord>& records) {
  std::vector<Label> y;
  for (const auto& r : records) y.push_back(r.target);
  return y;
}

std::uint64_t split_seed(std::uint64_t seed, const std::string& name) {
  return Rng::derived(seed, "split:" + name).next();
}

namespace {

ordered_json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}, {"n", m.n}}; }

}  // namespace

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  m.mean = mean(values);
  m.std = stddev(values, 0);
  return m;
}

std::string_view to_string(GridMode mode) { return mode == GridMode::monolingual ? "monolingual" : "multilingual"; }

GridMode parse_grid_mode(std::string_view text) {
  if (text == "monolingual") return GridMode::monolingual;
  if (text == "multilingual") return GridMode::multilingual;
  throw ValidationError("unknown grid mode '" + std::string(text) + "'");
}

std::vector<std::string> ExperimentGrid::languages() const {
  std::set<std::string> s;
  for (const auto& [key, m] : cells) s.insert(key.first);
  for (const auto& [key, why] : missing) s.insert(key.first);
  return {s.begin(), s.end()};
}

std::vector<std::string> ExperimentGrid::provenances() const {
  std::set<std::string> s;
  for (const auto& [key, m] : cells) s.insert(key.second);
  for (const auto& [key, why] : missing) s.insert(key.second);
  return {s.begin(), s.end()};
}

ordered_json ExperimentGrid::to_json() const {
  ordered_json j;
  j["mode"] = to_string(mode);
  j["cells"] = ordered_json::array();
  for (const auto& [key, m] : cells) {
    ordered_json c{{"dst", key.first}, {"src", key.second}};
    c["metrics"] = m.to_json();
    j["cells"].push_back(std::move(c));
  }
  j["missing"] = ordered_json::array();
  for (const auto& [key, why] : missing) j["missing"].push_back({{"dst", key.first}, {"src", key.second}, {"reason", why}});
  j["per_provenance"] = ordered_json::object();
  for (const auto& [k, v] : per_provenance) j["per_provenance"][k] = mean_std_json(v);
  j["per_language"] = ordered_json::object();
  for (const auto& [k, v] : per_language) j["per_language"][k] = mean_std_json(v);
  j["overall"] = overall ? mean_std_json(*overall) : ordered_json(nullptr);
  return j;
}

void compute_marginals(ExperimentGrid& grid) {
  grid.per_provenance.clear();
  grid.per_language.clear();
  grid.overall.reset();
  std::map<std::string, std::vector<double>> by_src, by_dst;
  for (const auto& [key, m] : grid.cells) {
    by_dst[key.first].push_back(m.accuracy);
    by_src[key.second].push_back(m.accuracy);
  }
  for (const auto& [k, v] : by_dst) grid.per_language[k] = mean_std(v);
  if (grid.mode == GridMode::monolingual) {
    for (const auto& [k, v] : by_src) grid.per_provenance[k] = mean_std(v);
  } else if (!grid.cells.empty()) {
    std::vector<double> all;
    for (const auto& [key, m] : grid.cells) all.push_back(m.accuracy);
    grid.overall = mean_std(all);
  }
}

ExperimentGrid run_grid(const Dataset& dataset, const Trainer& trainer, GridMode mode, const GridOptions& options,
                        std::vector<CellRun>* runs) {
  ExperimentGrid grid;
  grid.mode = mode;
  if (mode == GridMode::monolingual) {
    std::set<std::string> langs;
    std::set<std::pair<std::string, std::string>> present;
    for (const auto& sd : partition_by_set(dataset)) {
      const auto label = sd.id.label();
      langs.insert(sd.id.dst);
      langs.insert(sd.id.src);
      present.emplace(sd.id.dst, sd.id.src);
      try {
        auto split = split_train_test(sd.records, options.train_ratio, options.split_mode, split_seed(options.seed, label));
        auto predictor = trainer(split.train, label);
        auto preds = predictor(split.test);
        grid.cells[{sd.id.dst, sd.id.src}] = compute_metrics(preds, labels_of(split.test));
        spdlog::info("{}: accuracy {:.4f} on {} records", label, grid.cells[{sd.id.dst, sd.id.src}].accuracy,
                     split.test.size());
        if (runs) runs->push_back({sd.id, std::move(split), std::move(predictor), std::move(preds)});
      } catch (const ValidationError& e) {
        spdlog::warn("{}: cell skipped: {}", label, e.what());
        grid.missing[{sd.id.dst, sd.id.src}] = e.what();
      }
    }
    for (const auto& d : langs)
      for (const auto& s : langs)
        if (d != s && !present.contains({d, s})) grid.missing[{d, s}] = "no sub-dataset";
  } else {
    std::map<std::string, std::vector<SnippetRecord>> by_lang;
    for (const auto& r : dataset.records) by_lang[r.language_name].push_back(r);
    std::map<std::string, Split> splits;
    std::vector<SnippetRecord> train;
    for (auto& [lang, records] : by_lang) {
      try {
        auto split = split_train_test(records, options.train_ratio, options.split_mode, split_seed(options.seed, lang));
        train.insert(train.end(), split.train.begin(), split.train.end());
        splits.emplace(lang, std::move(split));
      } catch (const ValidationError& e) {
        grid.missing[{lang, std::string(kMultilingualSource)}] = e.what();
      }
    }
    if (!train.empty()) {
      auto predictor = trainer(train, std::string(kMultilingualSource));
      for (auto& [lang, split] : splits) {
        auto preds = predictor(split.test);
        grid.cells[{lang, std::string(kMultilingualSource)}] = compute_metrics(preds, labels_of(split.test));
        if (runs) runs->push_back({{lang, std::string(kMultilingualSource)}, split, predictor, std::move(preds)});
      }
    }
  }
  compute_marginals(grid);
  return grid;
}

ordered_json GridAnova::to_json() const {
  ordered_json j;
  j["language"] = language ? language->to_json() : ordered_json(nullptr);
  j["provenance"] = provenance ? provenance->to_json() : ordered_json(nullptr);
  j["language_checks"] = language_checks.to_json();
  j["provenance_checks"] = provenance_checks.to_json();
  if (!note.empty()) j["note"] = note;
  return j;
}

GridAnova grid_anova(const ExperimentGrid& grid) {
  GridAnova out;
  std::map<std::string, std::vector<double>> by_dst, by_src;
  for (const auto& [key, m] : grid.cells) {
    by_dst[key.first].push_back(m.accuracy);
    by_src[key.second].push_back(m.accuracy);
  }
  auto groups_of = [](const std::map<std::string, std::vector<double>>& by) {
    std::vector<std::vector<double>> g;
    for (const auto& [k, v] : by)
      if (v.size() >= 2) g.push_back(v);
    return g;
  };
  auto run = [&](const std::vector<std::vector<double>>& groups, std::optional<AnovaResult>& slot,
                 Diagnostics& checks, std::string_view what) {
    checks = normality_variance_checks(groups);
    try {
      slot = anova_oneway(groups);
    } catch (const ValidationError& e) {
      if (!out.note.empty()) out.note += "; ";
      out.note += std::string(what) + ": " + e.what();
    }
  };
  run(groups_of(by_dst), out.language, out.language_checks, "language");
  run(groups_of(by_src), out.provenance, out.provenance_checks, "provenance");
  return out;
}

ordered_json ShiftReport::to_json() const {
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row{{"dst", r.dst}, {"model_src", r.model_src}, {"in_distribution", r.in_distribution}};
    row["out_of_distribution"] = r.out_of_distribution;
    row["out_mean"] = r.out_mean;
    row["gap"] = r.gap;
    j["rows"].push_back(std::move(row));
  }
  j["mean_gap"] = mean_gap;
  j["test"] = test ? test->to_json() : ordered_json(nullptr);
  if (!note.empty()) j["note"] = note;
  return j;
}

ShiftReport provenance_shift(const ExperimentGrid& grid, const std::vector<CellRun>& runs) {
  ShiftReport report;
  if (grid.mode != GridMode::monolingual) throw ValidationError("provenance shift needs a monolingual grid");
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [src, m] : grid.per_provenance) ranked.emplace_back(-m.mean, src);
  std::sort(ranked.begin(), ranked.end());

  std::map<std::pair<std::string, std::string>, const CellRun*> by_cell;
  for (const auto& run : runs) by_cell[{run.id.dst, run.id.src}] = &run;

  std::vector<double> in_acc, out_acc;
  for (const auto& dst : grid.languages()) {
    const CellRun* chosen = nullptr;
    for (const auto& [neg, src] : ranked)
      if (auto it = by_cell.find({dst, src}); it != by_cell.end()) {
        chosen = it->second;
        break;
      }
    if (!chosen) continue;
    ShiftRow row;
    row.dst = dst;
    row.model_src = chosen->id.src;
    row.in_distribution = grid.cells.at({dst, chosen->id.src}).accuracy;

    std::set<std::tuple<std::string, Label, std::string>> seen;
    for (const auto& r : chosen->split.train) seen.emplace(r.task_name, r.target, r.code);
    for (const auto& [key, run] : by_cell) {
      if (key.first != dst || run == chosen) continue;
      std::vector<SnippetRecord> test;
      for (const auto& r : run->split.test)
        if (!seen.contains({r.task_name, r.target, r.code})) test.push_back(r);
      if (test.empty()) continue;
      auto preds = chosen->predictor(test);
      row.out_of_distribution[key.second] = compute_metrics(preds, labels_of(test)).accuracy;
    }
    if (row.out_of_distribution.empty()) continue;
    std::vector<double> outs;
    for (const auto& [src, acc] : row.out_of_distribution) outs.push_back(acc), out_acc.push_back(acc);
    row.out_mean = mean(outs);
    row.gap = row.out_mean - row.in_distribution;
    in_acc.push_back(row.in_distribution);
    report.rows.push_back(std::move(row));
  }
  if (!report.rows.empty()) {
    double s = 0.0;
    for (const auto& r : report.rows) s += r.gap;
    report.mean_gap = s / static_cast<double>(report.rows.size());
  }
  try {
    report.test = welch_ttest(out_acc, in_acc);
  } catch (const ValidationError& e) {
    report.note = std::string("t test skipped: ") + e.what();
  }
  return report;
}

Metrics external_dataset_eval(const Predictor& predictor, const std::vector<SnippetRecord>& external) {
  if (external.empty()) throw ValidationError("external dataset is empty");
  for (const auto& r : external)
    if (clean_snippet(r.code).empty()) throw ValidationError("external record '" + r.task_name + "' has no code");
  return compute_metrics(predictor(external), labels_of(external));
}

std::size_t char_length(std::string_view utf8) {
  std::size_t n = 0;
  for (unsigned char c : utf8) n += (c & 0xC0) != 0x80;
  return n;
}

ordered_json LengthStats::to_json() const {
  auto group = [](const LengthGroup& g) { return ordered_json{{"mean", g.mean}, {"std", g.std}, {"n", g.n}}; };
  ordered_json j = ordered_json::array();
  for (const auto& l : languages) {
    ordered_json row{{"language", l.language}};
    row["all"] = group(l.all);
    row["ai"] = group(l.ai);
    row["human"] = group(l.human);
    row["t_test"] = l.test ? l.test->to_json() : ordered_json(nullptr);
    if (!l.note.empty()) row["note"] = l.note;
    j.push_back(std::move(row));
  }
  return j;
}

LengthStats length_stats(const Dataset& dataset) {
  if (dataset.records.empty()) throw ValidationError("length statistics need a non-empty dataset");
  std::map<std::string, std::array<std::vector<double>, 2>> by_lang;
  for (const auto& r : dataset.records)
    by_lang[r.language_name][static_cast<int>(r.target)].push_back(static_cast<double>(char_length(r.code)));
  auto group = [](const std::vector<double>& v) {
    LengthGroup g;
    g.n = v.size();
    if (!v.empty()) g.mean = mean(v);
    if (v.size() >= 2) g.std = stddev(v, 1);
    return g;
  };
  LengthStats out;
  for (const auto& [lang, groups] : by_lang) {
    LanguageLengths l;
    l.language = lang;
    const auto& human = groups[0];
    const auto& ai = groups[1];
    std::vector<double> all = human;
    all.insert(all.end(), ai.begin(), ai.end());
    l.all = group(all);
    l.ai = group(ai);
    l.human = group(human);
    if (ai.size() < 2 || human.size() < 2) {
      l.note = "fewer than two snippets in a group; t test skipped";
    } else {
      try {
        l.test = welch_ttest(ai, human);
      } catch (const ValidationError& e) {
        l.note = std::string("t test skipped: ") + e.what();
      }
    }
    out.languages.push_back(std::move(l));
  }
  return out;
}

}  // namespace stylo
