#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "stylo/pipeline.hpp"

namespace fs = std::filesystem;
using namespace stylo;

TEST_CASE("config defaults carry the reference constants") {
  const auto c = RunConfig::from_json(nlohmann::json::object(), "/tmp");
  CHECK(c.per_class_count == 470);
  CHECK(c.limits.prompt == 1024);
  CHECK(c.limits.generation == 2048);
  CHECK(c.train_ratio == 0.8);
  CHECK(c.train.epochs == 15);
  CHECK(c.top_k == 10);
  CHECK(c.cv_folds == 10);
  CHECK(c.baselines.size() == 3);
}

TEST_CASE("config rejects unknown fields and bad values") {
  CHECK_THROWS_AS(RunConfig::from_json({{"sed", 1}}, "/tmp"), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json({{"sampling", {{"per_class_count", 10}, {"ratio", 0.5}}}}, "/tmp"),
                  ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json({{"sampling", {{"train_ratio", 1.5}}}}, "/tmp").validate(), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_json({{"seed", "abc"}}, "/tmp"), ValidationError);
}

TEST_CASE("config hash ignores the checkout location") {
  fixtures::TempDir a, b;
  const auto ca = fixtures::write_desk_workspace(a.path());
  const auto cb = fixtures::write_desk_workspace(b.path());
  CHECK(ca.hash() == cb.hash());
  CHECK(ca.paths.corpus.is_absolute());
  auto reloaded = RunConfig::from_json(nlohmann::json::parse(ca.to_json().dump()), a.path());
  CHECK(reloaded.hash() == ca.hash());
}

TEST_CASE("missing ranking file fails before any translation") {
  fixtures::TempDir dir;
  auto c = fixtures::write_desk_workspace(dir.path());
  fs::remove(c.paths.ranking);
  CHECK_THROWS_AS(c.require_inputs_for_build(), ValidationError);
  CHECK_THROWS_AS(cmd_build_dataset(c), ValidationError);
  CHECK_FALSE(fs::exists(c.paths.datasets / "dataset.jsonl"));
}

TEST_CASE("scopes parse") {
  CHECK(Scope::parse("multilingual").multilingual);
  const auto s = Scope::parse("Java/Kotlin");
  CHECK_FALSE(s.multilingual);
  CHECK(s.label() == "Java_from_Kotlin");
  CHECK(Scope::parse("Java_from_Kotlin").label() == "Java_from_Kotlin");
  CHECK_THROWS_AS(Scope::parse("Java"), ValidationError);
  CHECK(parse_eval_scope("monolingual") == EvalScope::monolingual);
  CHECK_THROWS_AS(parse_eval_scope("both"), ValidationError);
}

TEST_CASE("detect input formats") {
  std::istringstream raw("  def f():\n    pass\n");
  CHECK(read_detect_input(raw) == std::vector<std::string>{"  def f():\n    pass\n"});
  std::istringstream jsonl("{\"code\": \"a = 1\"}\n\n{\"code\": \"b = 2\", \"id\": 3}\n");
  CHECK(read_detect_input(jsonl) == std::vector<std::string>{"a = 1", "b = 2"});
  std::istringstream empty(" \n\n");
  CHECK(read_detect_input(empty).empty());
}

TEST_CASE("desk pipeline end to end") {
  fixtures::TempDir dir;
  fixtures::DeskOptions opts;
  opts.epochs = 2;
  const auto c = fixtures::write_desk_workspace(dir.path(), opts);

  const auto built = cmd_build_dataset(c);
  CHECK(built.sets.size() == 6);
  CHECK(built.failures > 0);
  CHECK(fs::exists(layout::dataset_file(c)));
  CHECK(read_records(layout::dataset_file(c)).size() == built.summary.records);
  const auto manifest = nlohmann::json::parse(read_file(c.paths.datasets / "manifest.json"));
  CHECK(manifest.at("config_sha256") == c.hash());
  CHECK(manifest.at("inputs").size() >= 2);

  const auto sampled = cmd_sample(c);
  CHECK(sampled.multilingual_records == 3u * 2u * static_cast<std::size_t>(opts.per_class_count));

  const auto trained = cmd_train(c, Scope::parse("Java/Python"));
  CHECK(trained.checkpoint_dir.filename() == "Java_from_Python");
  CHECK(fs::exists(trained.checkpoint_dir / "split_manifest.jsonl"));
  const auto again = cmd_train(c, Scope::parse("Java_from_Python"));
  CHECK(again.test_metrics.accuracy == trained.test_metrics.accuracy);

  std::istringstream in("public class A { }\n");
  std::ostringstream out;
  CHECK(cmd_detect(trained.checkpoint_dir, in, out) == 1);
  const auto verdict = nlohmann::json::parse(out.str());
  CHECK(verdict.at("index") == 0);
  CHECK((verdict.at("label") == "ai" || verdict.at("label") == "human"));
  std::istringstream none("");
  std::ostringstream silent;
  CHECK(cmd_detect(trained.checkpoint_dir, none, silent) == 0);
  CHECK(silent.str().empty());

  const auto eval = cmd_evaluate(c);
  REQUIRE(eval.monolingual);
  CHECK(eval.monolingual->cells.size() + eval.monolingual->missing.size() == 6);
  for (auto f : {"grid_monolingual.json", "grid_multilingual.json", "table_accuracy.txt", "tests.json",
                 "baselines.json", "shift.tsv", "manifest.json"})
    CHECK_MESSAGE(fs::exists(c.paths.reports / f), f);

  const auto table = read_file(c.paths.reports / "table_accuracy.txt");
  CHECK(cmd_report(c).find(table) != std::string::npos);
  CHECK(cmd_stats(c, layout::dataset_file(c), c.paths.reports).find("Python") != std::string::npos);
}

#ifdef STYLO_CLI
TEST_CASE("cli exit codes") {
  fixtures::TempDir dir;
  const std::string cli = STYLO_CLI;
  CHECK(std::system((cli + " --help > /dev/null").c_str()) == 0);
  std::ofstream(dir / "bad.json") << "{\"seeed\": 1}";
  CHECK(WEXITSTATUS(std::system((cli + " sample -q --config " + (dir / "bad.json").string() + " 2>/dev/null").c_str())) == 1);
  CHECK(WEXITSTATUS(std::system((cli + " nonsense 2>/dev/null >/dev/null").c_str())) != 0);
  std::ofstream(dir / "empty.txt").close();
  CHECK(WEXITSTATUS(std::system((cli + " detect " + (dir / "nowhere").string() + " " + (dir / "empty.txt").string() +
                                 " 2>/dev/null")
                                    .c_str())) == 1);
}
#endif
