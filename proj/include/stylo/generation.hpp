#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stylo/completion.hpp"
#include "stylo/corpus.hpp"
#include "stylo/types.hpp"

namespace stylo {

struct TokenLimits {
  int prompt = 1024;      // longest accepted rendered prompt
  int generation = 2048;  // max new tokens per completion
};

/// Translation prompt. The completion model continues after the trailing
/// fence, so the translated code is whatever precedes the next fence.
inline constexpr std::string_view kTranslationTemplate =
    "Translate this ```\n{CODE_SNIPPET}\n``` from {SOURCE_LANGUAGE} to {TARGET_LANGUAGE}. "
    "Here is the translated code\n\n```";

struct PromptSpec {
  std::string template_text;
  std::string code_snippet;
  std::string source_language;
  std::string target_language;
  std::string rendered;
  std::size_t prompt_tokens = 0;
};

/// Raised by build_prompt when the rendered prompt exceeds the token limit.
class PromptTooLong : public Error {
 public:
  PromptTooLong(std::size_t tokens, int limit);
  std::size_t tokens;
};

PromptSpec build_prompt(const RawSnippet& snippet, std::string_view src, std::string_view dst,
                        const TokenLimits& limits, const TokenCounter& counter);

struct ParsedPrompt {
  std::string code;
  std::string source_language;
  std::string target_language;
};
/// Inverse of build_prompt's rendering; nullopt if `rendered` is not a
/// translation prompt.
std::optional<ParsedPrompt> parse_translation_prompt(std::string_view rendered);

enum class GenerationStatus { ok, empty, unterminated, over_length, transport_error };
std::string_view to_string(GenerationStatus status);

struct GenerationResult {
  std::string raw_text;
  std::optional<std::string> extracted_code;  // present iff status == ok
  GenerationStatus status = GenerationStatus::empty;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  bool cached = false;
  std::string error;  // transport diagnostics
};

/// Takes the text up to the first closing fence of a completion.
GenerationResult extract_completion(std::string raw_text);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double backoff_factor = 2.0;
};

struct TranslateOptions {
  const ResponseCache* cache = nullptr;
  RetryPolicy retry;
};

/// One greedy completion for a prompt, served from the cache when present.
/// Transport failures that survive all retries come back as
/// GenerationStatus::transport_error and are not cached.
GenerationResult translate(CompletionClient& client, const PromptSpec& prompt, const TokenLimits& limits,
                           const TranslateOptions& options = {});

struct TranslationFailure {
  std::string task;
  GenerationStatus status;
  std::string detail;
};

struct GenerationOptions {
  TokenLimits limits;
  const TokenCounter* counter = nullptr;  // defaults to whitespace
  const ResponseCache* cache = nullptr;
  RetryPolicy retry;
  int workers = 1;
};

/// Human record for every task of the pair plus an AI record for every
/// successful translation; all in pair.dst. Throws TransportError when a
/// request still fails after retries.
SubDataset build_subdataset(const Corpus& corpus, const PairSpec& pair, CompletionClient& client,
                            const GenerationOptions& options, std::vector<TranslationFailure>* failures = nullptr);

struct DatasetSummary {
  std::map<std::string, std::size_t> per_set;
  std::map<std::string, std::size_t> per_language;
  std::map<std::string, std::size_t> per_target;
  std::size_t records = 0;
  std::size_t unique_tasks = 0;

  nlohmann::ordered_json to_json() const;
};

/// Concatenates sub-datasets in the given order after schema validation.
/// Throws ValidationError on a duplicate (set, task, target) key.
Dataset assemble_dataset(const std::vector<SubDataset>& subdatasets, DatasetSummary* summary = nullptr);

DatasetSummary summarize(const Dataset& dataset);

}  // namespace stylo
