#include <fstream>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "stylo/pipeline.hpp"

namespace fs = std::filesystem;
using namespace stylo;

namespace {

struct Options {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string scope;
  fs::path out;
  fs::path checkpoint;
  std::string input = "-";
  fs::path dataset;
  bool quiet = false;
};

RunConfig load_config(const Options& o, bool required) {
  RunConfig c;
  if (!o.config.empty()) {
    c = RunConfig::load(o.config);
  } else if (required) {
    throw ValidationError("--config is required for this command");
  } else {
    c.base_dir = fs::current_path();
    c.paths.cache = c.base_dir / "cache";
    c.paths.datasets = c.base_dir / "datasets";
    c.paths.checkpoints = c.base_dir / "checkpoints";
    c.paths.reports = c.base_dir / "reports";
  }
  if (o.seed) c.seed = c.train.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  c.validate();
  return c;
}

int run(CLI::App& app, const Options& o) {
  auto* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();

  if (name == "detect") {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (o.input != "-") {
      file.open(o.input, std::ios::binary);
      if (!file) throw ValidationError("cannot read " + o.input);
      in = &file;
    }
    if (o.out.empty()) {
      cmd_detect(o.checkpoint, *in, std::cout);
    } else {
      std::ofstream out(o.out, std::ios::binary);
      if (!out) throw ValidationError("cannot write " + o.out.string());
      cmd_detect(o.checkpoint, *in, out);
    }
    return 0;
  }

  RunConfig c = load_config(o, name != "stats");
  if (name == "build-dataset") {
    if (!o.out.empty()) c.paths.datasets = fs::absolute(o.out);
    auto r = cmd_build_dataset(c);
    std::cout << r.summary.records << " records in " << r.sets.size() << " sub-datasets, " << r.failures
              << " failed translations\n";
  } else if (name == "sample") {
    if (!o.out.empty()) c.paths.datasets = fs::absolute(o.out);
    auto r = cmd_sample(c);
    std::cout << r.monolingual_sets.size() << " sub-datasets sampled, " << r.skipped.size() << " skipped, "
              << r.multilingual_records << " multilingual records\n";
  } else if (name == "train") {
    if (!o.out.empty()) c.paths.checkpoints = fs::absolute(o.out);
    auto r = cmd_train(c, Scope::parse(o.scope.empty() ? "multilingual" : o.scope));
    std::cout << r.checkpoint_dir.string() << "\taccuracy " << r.test_metrics.accuracy << "\n";
  } else if (name == "evaluate") {
    if (!o.out.empty()) c.paths.reports = fs::absolute(o.out);
    cmd_evaluate(c, parse_eval_scope(o.scope));
    std::cout << read_file(c.paths.reports / "table_accuracy.txt");
  } else if (name == "stats") {
    const fs::path dataset = o.dataset.empty() ? layout::dataset_file(c) : o.dataset;
    std::cout << cmd_stats(c, dataset, o.out.empty() ? c.paths.reports : o.out);
  } else if (name == "report") {
    if (!o.out.empty()) c.paths.reports = fs::absolute(o.out);
    std::cout << cmd_report(c);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human vs AI code stylometry toolkit"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON)");
    sub->add_option("--seed", o.seed, "Override the run and training seeds");
    sub->add_option("--workers", o.workers, "Worker budget")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "Output location");
    sub->add_flag("-q,--quiet", o.quiet, "Only log warnings and errors");
  };
  common(app.add_subcommand("build-dataset", "Translate the corpus into the labeled dataset"));
  common(app.add_subcommand("sample", "Undersample sub-datasets and draw the multilingual sample"));
  auto* train = app.add_subcommand("train", "Train one classifier");
  common(train);
  train->add_option("--scope", o.scope, "multilingual, Dst/Src or Dst_from_Src");
  auto* evaluate = app.add_subcommand("evaluate", "Run the experiment grids and write the reports");
  common(evaluate);
  evaluate->add_option("--scope", o.scope, "all, monolingual or multilingual");
  auto* detect = app.add_subcommand("detect", "Classify snippets with a trained checkpoint");
  common(detect);
  detect->add_option("checkpoint", o.checkpoint, "Checkpoint directory")->required();
  detect->add_option("input", o.input, "Snippet file, JSONL file with a code field, or - for stdin");
  auto* stats = app.add_subcommand("stats", "Snippet-length statistics of a dataset");
  common(stats);
  stats->add_option("dataset", o.dataset, "Dataset file (defaults to the configured dataset)");
  common(app.add_subcommand("report", "Re-render the tables from stored grids"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  auto logger = spdlog::stderr_color_mt("stylo");
  spdlog::set_default_logger(logger);
  spdlog::set_level(o.quiet ? spdlog::level::warn : spdlog::level::info);
  try {
    return run(app, o);
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}
