#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stylo/config.hpp"
#include "stylo/encoder.hpp"
#include "stylo/rng.hpp"
#include "stylo/types.hpp"

namespace stylo::fixtures {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Small but stylistically varied solution to `task` in one of Python,
/// Java, C, C++, Go, Ruby, JavaScript, Rust, Kotlin or C#.
std::string solution_code(const std::string& language, int task, Rng& rng);

/// Every task solved in every language, except a seeded fraction of
/// (task, language) holes.
std::vector<RawSnippet> desk_corpus(const std::vector<std::string>& languages, int tasks, std::uint64_t seed,
                                    double hole_rate = 0.0);

struct DeskOptions {
  std::vector<std::string> languages{"Python", "Java", "C"};
  int tasks = 24;
  int per_class_count = 16;
  int unterminated_every = 7;
  std::uint64_t seed = 7;
  int epochs = 3;
};

/// Writes corpus.jsonl, ranking.tsv and config.json into `dir` and returns
/// the loaded config. The encoder is a tiny small_scratch model.
RunConfig write_desk_workspace(const std::filesystem::path& dir, const DeskOptions& options = {});

/// Human snippets and AI-labeled copies of them: lines whitespace-normalized,
/// shuffled, and carrying marker tokens. `per_class` records of each label.
std::vector<SnippetRecord> planted_signal_dataset(int per_class, std::uint64_t seed,
                                                  const std::string& language = "Python");

/// Same records with targets permuted by a seeded shuffle.
std::vector<SnippetRecord> shuffle_labels(std::vector<SnippetRecord> records, std::uint64_t seed);

/// Tiny encoder and a training recipe that converges in a few epochs on the
/// planted-signal data.
EncoderConfig tiny_encoder(int layers = 2, int hidden = 32, int heads = 2, int max_len = 128);
TrainConfig fast_training(int epochs, std::uint64_t seed);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

/// Compares accumulate_gradients against central finite differences of the
/// eval-mode cross-entropy for every parameter entry.
GradientCheck check_gradients(SequenceClassifier<double>& model, const std::vector<int>& ids, Label label,
                              double step = 1e-5);

}  // namespace stylo::fixtures
