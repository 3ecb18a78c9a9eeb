#include "stylo/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "stylo/records.hpp"

namespace stylo {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

LanguageRegistry LanguageRegistry::builtin() {
  LanguageRegistry r;
  for (const char* name : {"C++", "C", "C#", "Go", "Java", "JavaScript", "Kotlin", "Python", "Ruby", "Rust"})
    r.add_canonical(name);
  r.add_alias("cpp", "C++");
  r.add_alias("c plus plus", "C++");
  r.add_alias("c sharp", "C#");
  r.add_alias("c_sharp", "C#");
  r.add_alias("csharp", "C#");
  r.add_alias("golang", "Go");
  r.add_alias("js", "JavaScript");
  r.add_alias("ecmascript", "JavaScript");
  r.add_alias("python3", "Python");
  r.add_alias("rust-lang", "Rust");
  return r;
}

LanguageRegistry LanguageRegistry::from_alias_file(const std::filesystem::path& path) {
  auto r = builtin();
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected alias<TAB>canonical");
    r.add_alias(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
  }
  return r;
}

void LanguageRegistry::add_canonical(std::string_view name) { by_lower_[lower(name)] = std::string(name); }

void LanguageRegistry::add_alias(std::string_view alias, std::string_view canonical) {
  if (alias.empty() || canonical.empty()) throw ValidationError("empty language alias");
  add_canonical(canonical);
  by_lower_[lower(alias)] = std::string(canonical);
}

std::string LanguageRegistry::canonicalize(std::string_view name) const {
  auto t = trim(name);
  auto it = by_lower_.find(lower(t));
  return it == by_lower_.end() ? t : it->second;
}

bool LanguageRegistry::is_known(std::string_view name) const { return by_lower_.contains(lower(trim(name))); }

LanguageRanking LanguageRanking::load(const std::filesystem::path& path, const LanguageRegistry& registry) {
  LanguageRanking ranking;
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto tab = line.find('\t');
    auto where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) throw ValidationError(where + ": expected name<TAB>rank");
    int rank = 0;
    try {
      std::size_t used = 0;
      auto field = trim(line.substr(tab + 1));
      rank = std::stoi(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(where + ": rank is not an integer");
    }
    ranking.entries.emplace_back(registry.canonicalize(line.substr(0, tab)), rank);
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  ranking.validate();
  return ranking;
}

void LanguageRanking::validate() const {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].second < 1) throw ValidationError("rank must be positive for " + entries[i].first);
    if (i > 0 && entries[i].second <= entries[i - 1].second)
      throw ValidationError("ranks must be strictly increasing (" + entries[i].first + ")");
    if (!seen.insert(entries[i].first).second)
      throw ValidationError("duplicate ranked language " + entries[i].first);
  }
}

Corpus Corpus::from_snippets(std::vector<RawSnippet> snippets, const LanguageRegistry& registry,
                             CorpusLoadReport* report) {
  CorpusLoadReport local;
  local.records_read = snippets.size();
  Corpus c;
  c.snippets_.reserve(snippets.size());
  for (auto& s : snippets) {
    s.language_name = registry.canonicalize(s.language_name);
    if (clean_snippet(s.code).empty()) {
      ++local.blank_dropped;
      continue;
    }
    auto key = std::make_pair(s.task_name, s.language_name);
    if (c.index_.contains(key)) {
      ++local.duplicates_dropped;
      continue;
    }
    c.index_.emplace(std::move(key), c.snippets_.size());
    c.languages_.insert(s.language_name);
    c.tasks_.insert(s.task_name);
    c.snippets_.push_back(std::move(s));
  }
  if (report) *report = local;
  return c;
}

const RawSnippet* Corpus::find(std::string_view task, std::string_view language) const {
  auto it = index_.find(std::make_pair(std::string(task), std::string(language)));
  return it == index_.end() ? nullptr : &snippets_[it->second];
}

std::set<std::string> Corpus::tasks_in(std::string_view language) const {
  std::set<std::string> out;
  for (const auto& s : snippets_)
    if (s.language_name == language) out.insert(s.task_name);
  return out;
}

Corpus load_corpus(const std::filesystem::path& path, const LanguageRegistry& registry,
                   CorpusLoadReport* report) {
  CorpusLoadReport local;
  auto corpus = Corpus::from_snippets(read_raw_snippets(path), registry, &local);
  spdlog::info("corpus {}: {} records read, {} snippets kept ({} duplicates, {} blank), {} tasks, {} languages",
               path.string(), local.records_read, corpus.size(), local.duplicates_dropped, local.blank_dropped,
               corpus.tasks().size(), corpus.languages().size());
  if (report) *report = local;
  return corpus;
}

Corpus filter_languages(const Corpus& corpus, const LanguageRanking& ranking, int k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  std::set<std::string> keep;
  for (const auto& [name, rank] : ranking.entries) {
    if (static_cast<int>(keep.size()) == k) break;
    if (corpus.languages().contains(name)) keep.insert(name);
  }
  if (static_cast<int>(keep.size()) < k)
    throw ValidationError("only " + std::to_string(keep.size()) + " ranked languages present in corpus, " +
                          std::to_string(k) + " requested (short by " + std::to_string(k - keep.size()) + ")");
  std::vector<RawSnippet> kept;
  for (const auto& s : corpus.snippets())
    if (keep.contains(s.language_name)) kept.push_back(s);
  // Already canonical and unique: the registry only needs to be the identity.
  return Corpus::from_snippets(std::move(kept), LanguageRegistry{});
}

PairSpec balance_pair(const Corpus& corpus, std::string_view src, std::string_view dst) {
  if (src == dst) throw ValidationError("pair languages must differ: " + std::string(src));
  for (auto lang : {src, dst})
    if (!corpus.languages().contains(std::string(lang)))
      throw ValidationError("language not in corpus: " + std::string(lang));
  auto a = corpus.tasks_in(src);
  auto b = corpus.tasks_in(dst);
  PairSpec p{std::string(src), std::string(dst), {}};
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(p.task_ids));
  if (p.task_ids.empty()) spdlog::warn("pair {} -> {} has no shared tasks", src, dst);
  return p;
}

std::vector<PairSpec> all_pairs(const Corpus& corpus) {
  std::vector<PairSpec> out;
  for (const auto& src : corpus.languages())
    for (const auto& dst : corpus.languages())
      if (src != dst) out.push_back(balance_pair(corpus, src, dst));
  return out;
}

int overlapping_tasks(const Dataset& dataset, std::string_view dst) {
  std::set<std::string> languages;
  for (const auto& r : dataset.records) languages.insert(r.language_name);
  if (!languages.contains(std::string(dst))) throw ValidationError("unknown language " + std::string(dst));

  std::map<std::string, std::set<std::string>> provenances_by_task;
  for (const auto& r : dataset.records) {
    if (r.language_name != dst || r.target != Label::ai) continue;
    provenances_by_task[r.task_name].insert(SubDatasetId::parse(r.set).src);
  }
  std::size_t others = languages.size() - 1;
  int count = 0;
  for (const auto& [task, provs] : provenances_by_task) {
    std::size_t covered = 0;
    for (const auto& lang : languages)
      if (lang != dst && provs.contains(lang)) ++covered;
    if (others > 0 && covered == others) ++count;
  }
  return count;
}

}  // namespace stylo
