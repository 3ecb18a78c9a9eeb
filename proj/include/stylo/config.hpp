#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stylo/baselines.hpp"
#include "stylo/classifier.hpp"
#include "stylo/generation.hpp"
#include "stylo/sampling.hpp"

namespace stylo {

struct PathsConfig {
  std::filesystem::path corpus;
  std::filesystem::path ranking;
  std::filesystem::path aliases;  // optional
  std::filesystem::path cache;
  std::filesystem::path datasets;
  std::filesystem::path checkpoints;
  std::filesystem::path reports;
  std::filesystem::path external;  // optional labeled dataset for cross-dataset testing
};

struct CompletionConfig {
  std::string client = "fake";  // "fake" or "http"
  std::string endpoint;
  int timeout_s = 600;
  int unterminated_every = 0;  // fake client only
  RetryPolicy retry;
};

/// Every tunable of a run. Relative paths resolve against the directory of
/// the config file.
struct RunConfig {
  std::filesystem::path base_dir;  // directory of the config file
  std::uint64_t seed = 0;
  int workers = 1;
  PathsConfig paths;
  int top_k = 10;
  std::vector<std::string> supported_languages;  // empty: no restriction
  CompletionConfig completion;
  TokenLimits limits;
  int per_class_count = 470;
  double train_ratio = 0.8;
  SplitMode split_mode = SplitMode::random_stratified;
  EncoderConfig encoder;
  TrainConfig train;
  std::vector<BaselineSpec> baselines;
  int cv_folds = 10;

  /// Canonical JSON with every default filled in. Paths are written
  /// relative to base_dir so the hash does not depend on the checkout location.
  ordered_json to_json() const;
  std::string hash() const;

  /// Throws ValidationError on unknown fields, bad values or missing files.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Value checks plus existence of the input files a command needs.
  void validate() const;
  void require_inputs_for_build() const;
};

}  // namespace stylo
