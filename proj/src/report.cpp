#include "stylo/report.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace stylo {

namespace {

/// Left-aligned first column, right-aligned others.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], char_length(r[i]));
    }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::size_t pad = width[i] - char_length(r[i]);
      if (i == 0) line += r[i] + std::string(pad, ' ');
      else line += "  " + std::string(pad, ' ') + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string p_text(double p) { return p < 0.001 ? "<0.001" : fmt::format("{:.3f}", p); }

MeanStd marginal(const ExperimentGrid& g, double Metrics::*field) {
  std::vector<double> v;
  for (const auto& [k, m] : g.cells) v.push_back(m.*field);
  return mean_std(v);
}

}  // namespace

std::string format_percent(double fraction, int decimals) { return fmt::format("{:.{}f}", fraction * 100.0, decimals); }

std::string format_mean_std(const MeanStd& m, int decimals) {
  return format_percent(m.mean, decimals) + " ± " + format_percent(m.std, decimals);
}

ExperimentGrid grid_from_json(const nlohmann::json& j) {
  try {
    ExperimentGrid g;
    g.mode = parse_grid_mode(j.at("mode").get<std::string>());
    for (const auto& c : j.at("cells")) {
      const auto& jm = c.at("metrics");
      Metrics m;
      m.accuracy = jm.at("accuracy");
      m.f1_ai = jm.value("f1_ai", 0.0);
      m.f1_macro = jm.value("f1_macro", 0.0);
      if (jm.contains("auc") && !jm.at("auc").is_null()) m.auc = jm.at("auc").get<double>();
      m.n = jm.value("n", std::size_t{0});
      for (double v : {m.accuracy, m.f1_ai, m.f1_macro, m.auc.value_or(0.0)})
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("metric outside [0, 1] in grid cell");
      g.cells[{c.at("dst").get<std::string>(), c.at("src").get<std::string>()}] = m;
    }
    if (j.contains("missing"))
      for (const auto& c : j.at("missing"))
        g.missing[{c.at("dst").get<std::string>(), c.at("src").get<std::string>()}] = c.value("reason", "");
    compute_marginals(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed grid: ") + e.what());
  }
}

std::string length_table(const LengthStats& stats) {
  std::vector<std::vector<std::string>> rows{{"Language", "All", "AI", "Human", "t", "95% CI (human - AI)", "p"}};
  auto cell = [](const LengthGroup& g) { return fmt::format("{:.0f}±{:.0f}", g.mean, g.std); };
  for (const auto& l : stats.languages) {
    std::vector<std::string> r{l.language, cell(l.all), cell(l.ai), cell(l.human)};
    if (l.test) {
      r.push_back(fmt::format("{:.2f}", l.test->t));
      r.push_back(fmt::format("{:.0f} to {:.0f}", l.test->ci_low, l.test->ci_high));
      r.push_back(p_text(l.test->p_value));
    } else {
      r.insert(r.end(), {"-", "-", "-"});
    }
    rows.push_back(std::move(r));
  }
  return render(rows);
}

std::string accuracy_table(const ExperimentGrid* mono, const ExperimentGrid* multi) {
  std::set<std::string> lang_set;
  if (mono)
    for (const auto& l : mono->languages()) lang_set.insert(l);
  if (multi)
    for (const auto& l : multi->languages()) lang_set.insert(l);
  const std::vector<std::string> langs(lang_set.begin(), lang_set.end());

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Prov. language"};
  header.insert(header.end(), langs.begin(), langs.end());
  header.push_back("Prov. accuracy");
  rows.push_back(header);

  if (mono) {
    for (const auto& src : mono->provenances()) {
      std::vector<std::string> r{src};
      for (const auto& dst : langs) {
        auto it = mono->cells.find({dst, src});
        r.push_back(it == mono->cells.end() ? "-" : format_percent(it->second.accuracy));
      }
      auto pm = mono->per_provenance.find(src);
      r.push_back(pm == mono->per_provenance.end() ? "-" : format_mean_std(pm->second));
      rows.push_back(std::move(r));
    }
    std::vector<std::string> r{"Language accuracy"};
    for (const auto& dst : langs) {
      auto it = mono->per_language.find(dst);
      r.push_back(it == mono->per_language.end() ? "-" : format_mean_std(it->second));
    }
    r.push_back("-");
    rows.push_back(std::move(r));
  }
  if (multi) {
    auto add = [&](std::string name, auto value, const MeanStd& m) {
      std::vector<std::string> r{std::move(name)};
      for (const auto& dst : langs) {
        auto it = multi->cells.find({dst, std::string(kMultilingualSource)});
        r.push_back(it == multi->cells.end() ? "-" : value(it->second));
      }
      r.push_back(format_mean_std(m));
      rows.push_back(std::move(r));
    };
    add("Multilingual model accuracy", [](const Metrics& m) { return format_percent(m.accuracy); },
        marginal(*multi, &Metrics::accuracy));
    add("Multilingual model F1", [](const Metrics& m) { return format_percent(m.f1_ai); },
        marginal(*multi, &Metrics::f1_ai));
    std::vector<double> aucs;
    for (const auto& [k, m] : multi->cells)
      if (m.auc) aucs.push_back(*m.auc);
    add("Multilingual model AUC", [](const Metrics& m) { return m.auc ? format_percent(*m.auc) : std::string("-"); },
        mean_std(aucs));
  }
  return render(rows);
}

std::optional<TTestResult> multilingual_comparison(const ExperimentGrid& mono, const ExperimentGrid& multi) {
  std::vector<double> a, b;
  for (const auto& [dst, m] : mono.per_language) {
    auto it = multi.cells.find({dst, std::string(kMultilingualSource)});
    if (it == multi.cells.end()) continue;
    a.push_back(it->second.accuracy);
    b.push_back(m.mean);
  }
  try {
    return welch_ttest(a, b);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::string tests_table(const GridAnova& anova, const std::optional<TTestResult>& comparison) {
  std::vector<std::vector<std::string>> rows{{"Test", "Statistic", "95% CI", "p"}};
  auto add_anova = [&](const std::string& name, const std::optional<AnovaResult>& r) {
    if (r) rows.push_back({name, fmt::format("F={:.2f}", r->f), "-", p_text(r->p_value)});
    else rows.push_back({name, "-", "-", "-"});
  };
  add_anova("Lang. accuracy (ANOVA)", anova.language);
  add_anova("Prov. accuracy (ANOVA)", anova.provenance);
  if (comparison)
    rows.push_back({"Multilingual comp. (t-test)", fmt::format("t={:.2f}", comparison->t),
                    fmt::format("{:.1f} to {:.1f}", comparison->ci_low * 100.0, comparison->ci_high * 100.0),
                    p_text(comparison->p_value)});
  return render(rows);
}

std::string baseline_table(const std::vector<BaselineRow>& rows_in) {
  std::vector<std::vector<std::string>> rows{{"Baseline", "Data", "CV accuracy", "Ours", "Difference"}};
  for (const auto& r : rows_in) {
    MeanStd m{r.cv.mean, r.cv.std, r.cv.fold_scores.size()};
    std::vector<std::string> row{r.name, r.language, format_mean_std(m)};
    if (r.reference) {
      row.push_back(format_percent(*r.reference));
      row.push_back(fmt::format("{:+.1f}", (*r.reference - r.cv.mean) * 100.0));
    } else {
      row.insert(row.end(), {"-", "-"});
    }
    rows.push_back(std::move(row));
  }
  return render(rows);
}

std::string shift_tsv(const ShiftReport& report) {
  std::set<std::string> srcs;
  for (const auto& r : report.rows)
    for (const auto& [s, a] : r.out_of_distribution) srcs.insert(s);
  std::string out = "dst\tmodel_src\tin_distribution\tout_mean\tgap";
  for (const auto& s : srcs) out += "\t" + s;
  out += "\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}", r.dst, r.model_src, r.in_distribution, r.out_mean, r.gap);
    for (const auto& s : srcs) {
      auto it = r.out_of_distribution.find(s);
      out += it == r.out_of_distribution.end() ? std::string("\t") : fmt::format("\t{:.6f}", it->second);
    }
    out += "\n";
  }
  return out;
}

std::vector<ordered_json> grid_rows(const ExperimentGrid& grid) {
  std::vector<ordered_json> rows;
  for (const auto& [key, m] : grid.cells) {
    ordered_json r{{"mode", to_string(grid.mode)}, {"dst", key.first}, {"src", key.second}};
    r["metrics"] = m.to_json();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace stylo
