#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylo/types.hpp"

namespace stylo {

/// Maps language-name spellings onto canonical names ("C sharp" -> "C#").
/// Matching is case-insensitive. Names not in the registry pass through
/// trimmed but otherwise unchanged.
class LanguageRegistry {
 public:
  /// The ten evaluation languages plus common aliases.
  static LanguageRegistry builtin();
  /// Builtin registry extended with an `alias<TAB>canonical` file.
  static LanguageRegistry from_alias_file(const std::filesystem::path& path);

  void add_canonical(std::string_view name);
  void add_alias(std::string_view alias, std::string_view canonical);
  std::string canonicalize(std::string_view name) const;
  bool is_known(std::string_view name) const;

 private:
  std::map<std::string, std::string> by_lower_;
};

/// Language popularity ranking, best first. Ranks strictly increase.
struct LanguageRanking {
  std::vector<std::pair<std::string, int>> entries;

  /// Parses `name<TAB>rank` lines; '#' starts a comment line.
  static LanguageRanking load(const std::filesystem::path& path, const LanguageRegistry& registry);
  void validate() const;
};

struct CorpusLoadReport {
  std::size_t records_read = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t blank_dropped = 0;
};

/// Deduplicated task-solution corpus: at most one snippet per (task, language),
/// the first one in input order.
class Corpus {
 public:
  Corpus() = default;
  static Corpus from_snippets(std::vector<RawSnippet> snippets, const LanguageRegistry& registry,
                              CorpusLoadReport* report = nullptr);

  const std::vector<RawSnippet>& snippets() const { return snippets_; }
  const std::set<std::string>& languages() const { return languages_; }
  const std::set<std::string>& tasks() const { return tasks_; }

  const RawSnippet* find(std::string_view task, std::string_view language) const;
  std::set<std::string> tasks_in(std::string_view language) const;
  std::size_t size() const { return snippets_.size(); }

 private:
  std::vector<RawSnippet> snippets_;
  std::set<std::string> languages_;
  std::set<std::string> tasks_;
  std::map<std::pair<std::string, std::string>, std::size_t, std::less<>> index_;
};

Corpus load_corpus(const std::filesystem::path& path,
                   const LanguageRegistry& registry = LanguageRegistry::builtin(),
                   CorpusLoadReport* report = nullptr);

/// Keeps the k best-ranked languages present in the corpus, preserving
/// snippet order. Throws ValidationError if fewer than k are present.
Corpus filter_languages(const Corpus& corpus, const LanguageRanking& ranking, int k);

/// Ordered translation pair with the tasks solved in both languages.
struct PairSpec {
  std::string src;
  std::string dst;
  std::vector<std::string> task_ids;  // sorted
};

PairSpec balance_pair(const Corpus& corpus, std::string_view src, std::string_view dst);

/// All ordered pairs (src != dst) over the corpus languages, sorted by (src, dst).
std::vector<PairSpec> all_pairs(const Corpus& corpus);

/// Tasks in `dst` having AI records translated from every other language of
/// the dataset.
int overlapping_tasks(const Dataset& dataset, std::string_view dst);

}  // namespace stylo
