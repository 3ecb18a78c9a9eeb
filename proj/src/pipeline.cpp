#include "stylo/pipeline.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "stylo/baselines.hpp"
#include "stylo/classifier.hpp"
#include "stylo/corpus.hpp"
#include "stylo/hash.hpp"
#include "stylo/report.hpp"
#include "stylo/rng.hpp"
#include "stylo/sampling.hpp"

namespace fs = std::filesystem;

namespace stylo {

namespace layout {
fs::path subsets_dir(const RunConfig& c) { return c.paths.datasets / "subsets"; }
fs::path dataset_file(const RunConfig& c) { return c.paths.datasets / "dataset.jsonl"; }
fs::path samples_dir(const RunConfig& c) { return c.paths.datasets / "samples"; }
fs::path monolingual_samples_dir(const RunConfig& c) { return samples_dir(c) / "monolingual"; }
fs::path multilingual_sample_file(const RunConfig& c) { return samples_dir(c) / "multilingual.jsonl"; }
}  // namespace layout

namespace {

void write_json(const fs::path& path, const ordered_json& j) { write_file_atomic(path, j.dump(2, ' ', false) + "\n"); }

std::vector<fs::path> jsonl_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

void require_dataset(const fs::path& path, std::string_view hint) {
  if (!fs::is_regular_file(path))
    throw ValidationError(path.string() + " not found; run '" + std::string(hint) + "' first");
}

Trainer classifier_trainer(const RunConfig& config) {
  return [&config](const std::vector<SnippetRecord>& train_set, const std::string& cell) -> Predictor {
    auto model = std::make_shared<ModelCheckpoint>(
        train(train_set, {}, config.encoder, cell_train_config(config, cell)));
    return [model](const std::vector<SnippetRecord>& records) { return model->predict_all(records); };
  };
}

std::vector<SnippetRecord> records_of_set(const fs::path& dir, const std::string& label) {
  const auto path = dir / (label + ".jsonl");
  if (!fs::is_regular_file(path)) return {};
  return read_records(path);
}

}  // namespace

RunManifest::RunManifest(std::string command, const RunConfig& config)
    : command_(std::move(command)),
      config_(config.to_json()),
      config_hash_(config.hash()),
      seed_(config.seed),
      train_seed_(config.train.seed) {}

void RunManifest::add_input(const fs::path& path) { inputs_.push_back(path); }
void RunManifest::add_output(const fs::path& path) { outputs_.push_back(path); }
void RunManifest::set(const std::string& key, ordered_json value) { extra_[key] = std::move(value); }

void RunManifest::write(const fs::path& path) const {
  const auto dir = fs::absolute(path).parent_path();
  auto files = [&](const std::vector<fs::path>& list) {
    ordered_json a = ordered_json::array();
    for (const auto& p : list) {
      const auto abs = fs::absolute(p).lexically_normal();
      a.push_back({{"path", abs.lexically_relative(dir).generic_string()},
                   {"sha256", fs::is_regular_file(abs) ? sha256_file(abs) : std::string()}});
    }
    return a;
  };
  ordered_json j;
  j["command"] = command_;
  j["config_sha256"] = config_hash_;
  j["seeds"] = {{"seed", seed_}, {"train_seed", train_seed_}};
  j["rng"] = Rng::algorithm;
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  j["config"] = config_;
  write_json(path, j);
}

std::unique_ptr<CompletionClient> make_completion_client(const RunConfig& config) {
  if (config.completion.client == "http")
    return std::make_unique<HttpCompletionClient>(config.completion.endpoint,
                                                  std::chrono::seconds(config.completion.timeout_s));
  return std::make_unique<FakeCompletionClient>(FakeCompletionClient::Options{config.completion.unterminated_every});
}

LanguageRanking effective_ranking(const RunConfig& config, const LanguageRegistry& registry) {
  auto ranking = LanguageRanking::load(config.paths.ranking, registry);
  if (config.supported_languages.empty()) return ranking;
  std::set<std::string> supported;
  for (const auto& l : config.supported_languages) supported.insert(registry.canonicalize(l));
  std::erase_if(ranking.entries, [&](const auto& e) { return !supported.contains(e.first); });
  return ranking;
}

BuildResult cmd_build_dataset(const RunConfig& config, CompletionClient* client) {
  config.require_inputs_for_build();
  const auto registry =
      config.paths.aliases.empty() ? LanguageRegistry::builtin() : LanguageRegistry::from_alias_file(config.paths.aliases);
  const auto ranking = effective_ranking(config, registry);

  CorpusLoadReport load_report;
  const auto corpus = filter_languages(load_corpus(config.paths.corpus, registry, &load_report), ranking, config.top_k);
  spdlog::info("corpus: {} snippets, {} tasks, {} languages after filtering", corpus.size(), corpus.tasks().size(),
               corpus.languages().size());

  std::unique_ptr<CompletionClient> owned;
  if (!client) {
    owned = make_completion_client(config);
    client = owned.get();
  }
  const ResponseCache cache(config.paths.cache);
  const WhitespaceTokenCounter counter;
  GenerationOptions options;
  options.limits = config.limits;
  options.counter = &counter;
  options.cache = &cache;
  options.retry = config.completion.retry;
  options.workers = config.workers;

  BuildResult result;
  std::vector<SubDataset> subsets;
  ordered_json failures = ordered_json::array();
  for (const auto& pair : all_pairs(corpus)) {
    std::vector<TranslationFailure> failed;
    auto sd = build_subdataset(corpus, pair, *client, options, &failed);
    for (const auto& f : failed)
      failures.push_back({{"set", sd.id.label()}, {"task", f.task}, {"status", to_string(f.status)}, {"detail", f.detail}});
    result.failures += failed.size();
    result.sets.push_back(sd.id.label());
    subsets.push_back(std::move(sd));
  }
  result.dataset = assemble_dataset(subsets, &result.summary);

  RunManifest manifest("build-dataset", config);
  manifest.add_input(config.paths.corpus);
  manifest.add_input(config.paths.ranking);
  if (!config.paths.aliases.empty()) manifest.add_input(config.paths.aliases);

  fs::create_directories(layout::subsets_dir(config));
  for (const auto& sd : subsets) {
    const auto path = layout::subsets_dir(config) / (sd.id.label() + ".jsonl");
    write_records(path, sd.records);
    manifest.add_output(path);
  }
  write_records(layout::dataset_file(config), result.dataset.records);
  manifest.add_output(layout::dataset_file(config));

  ordered_json report;
  report["corpus"] = {{"records_read", load_report.records_read},
                      {"duplicates_dropped", load_report.duplicates_dropped},
                      {"blank_dropped", load_report.blank_dropped},
                      {"snippets_kept", corpus.size()},
                      {"tasks", corpus.tasks().size()},
                      {"languages", std::vector<std::string>(corpus.languages().begin(), corpus.languages().end())}};
  report["client"] = client->name();
  report["token_counter"] = counter.name();
  report["summary"] = result.summary.to_json();
  report["failures"] = failures;
  ordered_json overlap = ordered_json::object();
  for (const auto& lang : corpus.languages())
    overlap[lang] = result.dataset.records.empty() ? 0 : overlapping_tasks(result.dataset, lang);
  report["overlapping_tasks"] = overlap;
  const auto report_path = config.paths.datasets / "build_report.json";
  write_json(report_path, report);
  manifest.add_output(report_path);
  manifest.write(config.paths.datasets / "manifest.json");
  spdlog::info("dataset: {} records in {} sub-datasets, {} failed translations", result.summary.records,
               subsets.size(), result.failures);
  return result;
}

SampleResult cmd_sample(const RunConfig& config) {
  require_dataset(layout::dataset_file(config), "build-dataset");
  Dataset dataset{read_records(layout::dataset_file(config))};
  RunManifest manifest("sample", config);
  manifest.add_input(layout::dataset_file(config));

  SampleResult result;
  const auto mono_dir = layout::monolingual_samples_dir(config);
  fs::remove_all(mono_dir);
  fs::create_directories(mono_dir);
  ordered_json skipped = ordered_json::array();
  std::vector<SnippetRecord> mono_all;
  for (const auto& sd : partition_by_set(dataset)) {
    const auto label = sd.id.label();
    try {
      auto sampled = undersample_subdataset(sd, config.per_class_count,
                                            Rng::derived(config.seed, "undersample:" + label).next());
      const auto path = mono_dir / (label + ".jsonl");
      write_records(path, sampled.records);
      manifest.add_output(path);
      mono_all.insert(mono_all.end(), sampled.records.begin(), sampled.records.end());
      result.monolingual_sets.push_back(label);
    } catch (const ValidationError& e) {
      spdlog::warn("{}: not sampled: {}", label, e.what());
      skipped.push_back({{"set", label}, {"reason", e.what()}});
      result.skipped.push_back(label);
    }
  }
  const auto mono_manifest = layout::samples_dir(config) / "monolingual_manifest.jsonl";
  write_jsonl(mono_manifest, sample_manifest(mono_all));
  manifest.add_output(mono_manifest);

  ordered_json report;
  report["per_class_count"] = config.per_class_count;
  report["monolingual_sets"] = result.monolingual_sets;
  report["skipped"] = skipped;
  const auto multi_path = layout::multilingual_sample_file(config);
  try {
    const auto plan = make_sample_plan(dataset, config.per_class_count, Rng::derived(config.seed, "multilingual").next());
    auto multi = sample_multilingual(dataset, plan);
    write_records(multi_path, multi.records);
    manifest.add_output(multi_path);
    const auto plan_path = layout::samples_dir(config) / "sample_plan.json";
    write_json(plan_path, plan.to_json());
    manifest.add_output(plan_path);
    const auto multi_manifest = layout::samples_dir(config) / "multilingual_manifest.jsonl";
    write_jsonl(multi_manifest, sample_manifest(multi.records));
    manifest.add_output(multi_manifest);
    result.multilingual_records = multi.records.size();
    report["multilingual"] = {{"records", multi.records.size()}};
  } catch (const ValidationError& e) {
    spdlog::warn("multilingual sample not drawn: {}", e.what());
    fs::remove(multi_path);
    report["multilingual"] = {{"records", 0}, {"reason", e.what()}};
  }
  const auto report_path = layout::samples_dir(config) / "sample_report.json";
  write_json(report_path, report);
  manifest.add_output(report_path);
  manifest.write(layout::samples_dir(config) / "manifest.json");
  return result;
}

Scope Scope::parse(std::string_view text) {
  Scope s;
  if (text == kMultilingualSource) return s;
  s.multilingual = false;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    s.id = {std::string(text.substr(0, slash)), std::string(text.substr(slash + 1))};
  } else {
    try {
      s.id = SubDatasetId::parse(text);
    } catch (const std::exception&) {
      throw ValidationError("scope must be 'multilingual', 'Dst/Src' or 'Dst_from_Src', got '" + std::string(text) + "'");
    }
  }
  if (s.id.dst.empty() || s.id.src.empty() || s.id.dst == s.id.src)
    throw ValidationError("invalid scope '" + std::string(text) + "'");
  return s;
}

std::string Scope::label() const { return multilingual ? std::string(kMultilingualSource) : id.label(); }

TrainConfig cell_train_config(const RunConfig& config, const std::string& cell) {
  TrainConfig t = config.train;
  t.seed = Rng::derived(config.train.seed, "train:" + cell).next();
  return t;
}

TrainResult cmd_train(const RunConfig& config, const Scope& scope) {
  const auto label = scope.label();
  RunManifest manifest("train", config);
  manifest.set("scope", label);
  Split split;
  if (scope.multilingual) {
    const auto path = layout::multilingual_sample_file(config);
    require_dataset(path, "sample");
    manifest.add_input(path);
    std::map<std::string, std::vector<SnippetRecord>> by_lang;
    for (auto& r : read_records(path)) by_lang[r.language_name].push_back(std::move(r));
    for (const auto& [lang, records] : by_lang) {
      auto s = split_train_test(records, config.train_ratio, config.split_mode, split_seed(config.seed, lang));
      split.train.insert(split.train.end(), s.train.begin(), s.train.end());
      split.test.insert(split.test.end(), s.test.begin(), s.test.end());
    }
  } else {
    const auto path = layout::monolingual_samples_dir(config) / (label + ".jsonl");
    require_dataset(path, "sample");
    manifest.add_input(path);
    split = split_train_test(read_records(path), config.train_ratio, config.split_mode, split_seed(config.seed, label));
  }

  auto checkpoint = train(split.train, split.test, config.encoder, cell_train_config(config, label),
                          [&](const EpochLog& e) {
                            spdlog::info("{} epoch {}: lr {:.3g} loss {:.5f}{}", label, e.epoch, e.lr, e.train_loss,
                                         e.val_accuracy ? fmt::format(" val {:.4f}", *e.val_accuracy) : "");
                          });
  TrainResult result;
  result.checkpoint_dir = config.paths.checkpoints / label;
  result.test_metrics = compute_metrics(checkpoint.predict_all(split.test), labels_of(split.test));
  checkpoint.save(result.checkpoint_dir);

  ordered_json metrics;
  metrics["scope"] = label;
  metrics["train_records"] = split.train.size();
  metrics["test_records"] = split.test.size();
  metrics["test"] = result.test_metrics.to_json();
  metrics["history"] = checkpoint.history().to_json();
  const auto metrics_path = result.checkpoint_dir / "metrics.json";
  write_json(metrics_path, metrics);
  const auto split_path = result.checkpoint_dir / "split_manifest.jsonl";
  write_jsonl(split_path, split_manifest(split));
  for (const char* f : {"manifest.json", "weights.bin", "tokenizer.json"}) manifest.add_output(result.checkpoint_dir / f);
  manifest.add_output(metrics_path);
  manifest.add_output(split_path);
  manifest.write(result.checkpoint_dir / "run_manifest.json");
  spdlog::info("{}: test accuracy {:.4f} on {} records", label, result.test_metrics.accuracy, split.test.size());
  return result;
}

EvalScope parse_eval_scope(std::string_view text) {
  if (text.empty() || text == "all") return EvalScope::all;
  if (text == "monolingual") return EvalScope::monolingual;
  if (text == "multilingual") return EvalScope::multilingual;
  throw ValidationError("evaluate scope must be all, monolingual or multilingual");
}

EvaluateResult cmd_evaluate(const RunConfig& config, EvalScope scope) {
  EvaluateResult result;
  RunManifest manifest("evaluate", config);
  const auto& out = config.paths.reports;
  fs::create_directories(out);
  auto emit_json = [&](const std::string& name, const ordered_json& j) {
    write_json(out / name, j);
    manifest.add_output(out / name);
  };
  auto emit_text = [&](const std::string& name, const std::string& text) {
    write_file_atomic(out / name, text);
    manifest.add_output(out / name);
  };

  const Trainer trainer = classifier_trainer(config);
  GridOptions grid_options{config.train_ratio, config.split_mode, config.seed};
  std::vector<CellRun> mono_runs, multi_runs;
  std::vector<ordered_json> cell_rows;

  if (scope != EvalScope::multilingual) {
    Dataset mono;
    for (const auto& f : jsonl_files(layout::monolingual_samples_dir(config))) {
      manifest.add_input(f);
      auto recs = read_records(f);
      mono.records.insert(mono.records.end(), recs.begin(), recs.end());
    }
    if (mono.records.empty()) throw ValidationError("no monolingual samples found; run 'sample' first");
    result.monolingual = run_grid(mono, trainer, GridMode::monolingual, grid_options, &mono_runs);
    emit_json("grid_monolingual.json", result.monolingual->to_json());
    auto rows = grid_rows(*result.monolingual);
    cell_rows.insert(cell_rows.end(), rows.begin(), rows.end());

    result.shift = provenance_shift(*result.monolingual, mono_runs);
    emit_json("shift.json", result.shift->to_json());
    emit_text("shift.tsv", shift_tsv(*result.shift));
  }

  if (scope != EvalScope::monolingual) {
    const auto path = layout::multilingual_sample_file(config);
    require_dataset(path, "sample");
    manifest.add_input(path);
    result.multilingual =
        run_grid(Dataset{read_records(path)}, trainer, GridMode::multilingual, grid_options, &multi_runs);
    emit_json("grid_multilingual.json", result.multilingual->to_json());
    auto rows = grid_rows(*result.multilingual);
    cell_rows.insert(cell_rows.end(), rows.begin(), rows.end());
  }

  write_jsonl(out / "grid_cells.jsonl", cell_rows);
  manifest.add_output(out / "grid_cells.jsonl");
  emit_text("table_accuracy.txt", accuracy_table(result.monolingual ? &*result.monolingual : nullptr,
                                                 result.multilingual ? &*result.multilingual : nullptr));

  if (result.monolingual) {
    const auto anova = grid_anova(*result.monolingual);
    std::optional<TTestResult> comparison;
    if (result.multilingual) comparison = multilingual_comparison(*result.monolingual, *result.multilingual);
    emit_json("tests.json", {{"anova", anova.to_json()},
                             {"multilingual_comparison", comparison ? comparison->to_json() : ordered_json(nullptr)}});
    emit_text("table_tests.txt", tests_table(anova, comparison));

    // Baselines on the sub-datasets of the provenance with the best marginal.
    const auto& grid = *result.monolingual;
    std::string best;
    double best_mean = -1.0;
    for (const auto& [src, m] : grid.per_provenance)
      if (m.mean > best_mean) best_mean = m.mean, best = src;
    std::vector<BaselineRow> rows;
    ordered_json baseline_json = ordered_json::array();
    const auto model_dir = out / "baselines";
    if (!best.empty()) fs::create_directories(model_dir);
    for (const auto& dst : grid.languages()) {
      auto cell = grid.cells.find({dst, best});
      if (cell == grid.cells.end()) continue;
      const auto label = SubDatasetId{dst, best}.label();
      const auto records = records_of_set(layout::monolingual_samples_dir(config), label);
      for (auto spec : config.baselines) {
        const auto name = std::string(to_string(spec.kind));
        spec.params.seed = Rng::derived(config.seed, "baseline:" + name + ":" + label).next();
        try {
          auto cv = cross_validate(spec, records, config.cv_folds, Rng::derived(config.seed, "cv:" + label).next(),
                                   config.workers);
          rows.push_back({name, label, cv, cell->second.accuracy});
          baseline_json.push_back({{"baseline", name}, {"set", label}, {"cv", cv.to_json()},
                                   {"classifier_accuracy", cell->second.accuracy}});
          const auto model_path = model_dir / (name + "_" + label + ".json");
          BaselineModel::fit(spec, records).save(model_path);
          manifest.add_output(model_path);
        } catch (const ValidationError& e) {
          spdlog::warn("{} on {}: skipped: {}", name, label, e.what());
          baseline_json.push_back({{"baseline", name}, {"set", label}, {"skipped", e.what()}});
        }
      }
    }
    emit_json("baselines.json", {{"provenance", best}, {"folds", config.cv_folds}, {"results", baseline_json}});
    emit_text("table_baselines.txt", baseline_table(rows));
  }

  if (!config.paths.external.empty()) {
    if (multi_runs.empty()) {
      spdlog::warn("external dataset given but no multilingual model was trained; skipped");
    } else {
      manifest.add_input(config.paths.external);
      const auto m = external_dataset_eval(multi_runs.front().predictor, read_records(config.paths.external));
      emit_json("external.json", {{"dataset", config.paths.external.filename().string()}, {"metrics", m.to_json()}});
    }
  }
  manifest.write(out / "manifest.json");
  return result;
}

std::vector<std::string> read_detect_input(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (clean_snippet(text).empty()) return {};

  std::vector<std::string> lines;
  {
    std::istringstream ls(text);
    std::string line;
    while (std::getline(ls, line))
      if (!clean_snippet(line).empty()) lines.push_back(line);
  }
  auto as_record = [](const std::string& line) -> std::optional<std::string> {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("code") || !j.at("code").is_string()) return std::nullopt;
    return j.at("code").get<std::string>();
  };
  if (!as_record(lines.front())) return {text};

  std::vector<std::string> snippets;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto code = as_record(lines[i]);
    if (!code) throw ValidationError(fmt::format("input record {}: expected an object with a string 'code' field", i + 1));
    if (clean_snippet(*code).empty()) throw ValidationError(fmt::format("input record {}: code is empty", i + 1));
    snippets.push_back(std::move(*code));
  }
  return snippets;
}

std::size_t cmd_detect(const fs::path& checkpoint_dir, std::istream& in, std::ostream& out) {
  const auto checkpoint = ModelCheckpoint::load(checkpoint_dir);
  const auto snippets = read_detect_input(in);
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    const auto p = checkpoint.predict(snippets[i]);
    out << dump_line({{"index", i}, {"label", to_string(p.label)}, {"prob_ai", p.prob_ai}}) << "\n";
  }
  out.flush();
  return snippets.size();
}

std::string cmd_stats(const RunConfig& config, const fs::path& dataset_path, const fs::path& out_dir) {
  require_dataset(dataset_path, "build-dataset");
  const Dataset dataset{read_records(dataset_path)};
  const auto stats = length_stats(dataset);
  std::string text = length_table(stats);

  ordered_json overlap = ordered_json::object();
  std::set<std::string> languages;
  for (const auto& r : dataset.records) languages.insert(r.language_name);
  text += "\nOverlapping tasks\n";
  for (const auto& lang : languages) {
    const int n = overlapping_tasks(dataset, lang);
    overlap[lang] = n;
    text += fmt::format("{}\t{}\n", lang, n);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    RunManifest manifest("stats", config);
    manifest.add_input(dataset_path);
    write_json(out_dir / "length_stats.json", {{"languages", stats.to_json()}, {"overlapping_tasks", overlap}});
    write_file_atomic(out_dir / "table_lengths.txt", text);
    manifest.add_output(out_dir / "length_stats.json");
    manifest.add_output(out_dir / "table_lengths.txt");
    manifest.write(out_dir / "stats_manifest.json");
  }
  return text;
}

std::string cmd_report(const RunConfig& config) {
  const auto& dir = config.paths.reports;
  auto load = [&](const char* name) -> std::optional<ExperimentGrid> {
    const auto path = dir / name;
    if (!fs::is_regular_file(path)) return std::nullopt;
    try {
      return grid_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  };
  const auto mono = load("grid_monolingual.json");
  const auto multi = load("grid_multilingual.json");
  if (!mono && !multi) throw ValidationError("no grid files in " + dir.string() + "; run 'evaluate' first");

  RunManifest manifest("report", config);
  for (const char* name : {"grid_monolingual.json", "grid_multilingual.json"})
    if (fs::is_regular_file(dir / name)) manifest.add_input(dir / name);

  std::string text = accuracy_table(mono ? &*mono : nullptr, multi ? &*multi : nullptr);
  write_file_atomic(dir / "table_accuracy.txt", text);
  manifest.add_output(dir / "table_accuracy.txt");
  if (mono) {
    const auto tests = tests_table(grid_anova(*mono), multi ? multilingual_comparison(*mono, *multi) : std::nullopt);
    write_file_atomic(dir / "table_tests.txt", tests);
    manifest.add_output(dir / "table_tests.txt");
    text += "\n" + tests;
  }
  manifest.write(dir / "report_manifest.json");
  return text;
}

}  // namespace stylo
