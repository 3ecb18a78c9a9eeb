#include <algorithm>
#include <set>

#include "doctest.h"
#include "stylo/sampling.hpp"

using namespace stylo;

namespace {

SnippetRecord rec(const std::string& task, const std::string& dst, const std::string& src, Label target) {
  SnippetRecord r;
  r.task_name = task;
  r.language_name = dst;
  r.code = task + "/" + src + "/" + std::string(to_string(target));
  r.target = target;
  r.set = dst + "_from_" + src;
  return r;
}

SubDataset subdataset(int human, int ai) {
  SubDataset sd;
  sd.id = {"Java", "Python"};
  for (int i = 0; i < std::max(human, ai); ++i) {
    if (i < human) sd.records.push_back(rec("T" + std::to_string(i), "Java", "Python", Label::human));
    if (i < ai) sd.records.push_back(rec("T" + std::to_string(i), "Java", "Python", Label::ai));
  }
  return sd;
}

std::pair<int, int> counts(const std::vector<SnippetRecord>& records) {
  int h = 0, a = 0;
  for (const auto& r : records) (r.target == Label::ai ? a : h) += 1;
  return {h, a};
}

}  // namespace

TEST_CASE("undersampling equalizes classes") {
  const auto sd = subdataset(600, 580);
  const auto out = undersample_subdataset(sd, 470, 1);
  CHECK(counts(out.records) == std::pair{470, 470});
  CHECK(out.id.label() == sd.id.label());
  CHECK(undersample_subdataset(sd, 470, 1).records == out.records);
  CHECK(undersample_subdataset(sd, 470, 2).records != out.records);

  const auto exact = subdataset(470, 470);
  CHECK(undersample_subdataset(exact, 470, 9).records == exact.records);

  try {
    undersample_subdataset(subdataset(470, 469), 470, 1);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("ai") != std::string::npos);
  }
}

TEST_CASE("provenance quotas are uniform") {
  std::vector<std::string> nine{"C", "C#", "C++", "Go", "Java", "JavaScript", "Kotlin", "Ruby", "Rust"};
  Rng rng(3);
  const auto q = provenance_quota(470, nine, rng);
  int at52 = 0, at53 = 0;
  for (const auto& [src, n] : q) (n == 52 ? at52 : at53) += n == 52 || n == 53;
  CHECK(at52 == 7);
  CHECK(at53 == 2);
  Rng rng2(3);
  for (const auto& [src, n] : provenance_quota(9, nine, rng2)) CHECK(n == 1);
  CHECK_THROWS(provenance_quota(4, {}, rng));
}

TEST_CASE("multilingual sample on a three-language fixture") {
  const std::vector<std::string> langs{"C", "Java", "Python"};
  Dataset d;
  for (int t = 0; t < 10; ++t)
    for (const auto& dst : langs)
      for (const auto& src : langs) {
        if (src == dst) continue;
        d.records.push_back(rec("T" + std::to_string(t), dst, src, Label::human));
        if ((t + static_cast<int>(src.size())) % 3 != 0) d.records.push_back(rec("T" + std::to_string(t), dst, src, Label::ai));
      }
  const auto plan = make_sample_plan(d, 4, 11);
  const auto out = sample_multilingual(d, plan);
  for (const auto& dst : langs) {
    std::set<std::string> human_tasks, ai_tasks;
    std::map<std::string, int> per_src;
    for (const auto& r : out.records) {
      if (r.language_name != dst) continue;
      if (r.target == Label::human) {
        CHECK(human_tasks.insert(r.task_name).second);
      } else {
        CHECK(ai_tasks.insert(r.task_name).second);
        ++per_src[SubDatasetId::parse(r.set).src];
      }
      CHECK(std::find(d.records.begin(), d.records.end(), r) != d.records.end());
    }
    CHECK(human_tasks.size() == 4);
    CHECK(ai_tasks.size() == 4);
    CHECK(per_src == plan.provenance_quota.at(dst));
  }
  CHECK(sample_multilingual(d, plan).records == out.records);

  auto greedy = plan;
  greedy.per_class_count = 10;
  for (auto& [dst, q] : greedy.provenance_quota) q = {{q.begin()->first, 5}, {std::next(q.begin())->first, 5}};
  CHECK_THROWS_AS(sample_multilingual(d, greedy), ValidationError);
}

TEST_CASE("stratified split sizes") {
  std::vector<SnippetRecord> records;
  for (int i = 0; i < 470; ++i)
    for (Label l : {Label::human, Label::ai}) records.push_back(rec("T" + std::to_string(i), "Go", "C", l));
  const auto s = split_train_test(records, 0.8, SplitMode::random_stratified, 5);
  CHECK(s.train.size() == 752);
  CHECK(s.test.size() == 188);
  const auto [th, ta] = counts(s.test);
  CHECK(std::abs(th - ta) <= 1);
  CHECK(split_train_test(records, 0.8, SplitMode::random_stratified, 5).test == s.test);

  const auto tiny = split_train_test({rec("A", "Go", "C", Label::human), rec("B", "Go", "C", Label::ai)}, 0.5,
                                     SplitMode::random_stratified, 1);
  CHECK(tiny.train.size() == 1);
  CHECK(tiny.test.size() == 1);
  CHECK_THROWS(split_train_test(records, 1.0, SplitMode::random_stratified, 1));
}

TEST_CASE("grouped split keeps a task on one side") {
  std::vector<SnippetRecord> records;
  for (int i = 0; i < 40; ++i)
    for (Label l : {Label::human, Label::ai}) records.push_back(rec("T" + std::to_string(i), "Go", "C", l));
  const auto s = split_train_test(records, 0.8, SplitMode::task_grouped, 2);
  std::set<std::string> train_tasks;
  for (const auto& r : s.train) train_tasks.insert(r.task_name);
  for (const auto& r : s.test) CHECK_FALSE(train_tasks.contains(r.task_name));
  CHECK(s.train.size() + s.test.size() == records.size());
}

TEST_CASE("manifests list every record") {
  std::vector<SnippetRecord> records{rec("A", "Go", "C", Label::human), rec("B", "Go", "C", Label::ai)};
  const auto m = sample_manifest(records);
  REQUIRE(m.size() == 2);
  CHECK(m[1].at("task") == "B");
  const auto s = split_manifest(split_train_test(records, 0.5, SplitMode::random_stratified, 1));
  CHECK(s.size() == 2);
}
