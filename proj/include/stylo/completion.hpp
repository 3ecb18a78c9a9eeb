#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "stylo/types.hpp"

namespace stylo {

/// Counts tokens the way the generation model would.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Whitespace-separated words. Used with the fake client.
class WhitespaceTokenCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "whitespace"; }
};

/// Body of one completion request. Decoding is always greedy.
struct CompletionRequest {
  std::string prompt;
  int max_new_tokens = 2048;
  bool greedy = true;

  nlohmann::ordered_json to_json() const;
  /// SHA-256 over the prompt and the decoding parameters.
  std::string cache_key() const;
};

struct CompletionResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;

  nlohmann::ordered_json to_json() const;
  static CompletionResponse from_json(const nlohmann::json& j);
};

/// Transport-level failure (connection refused, non-2xx, bad body).
class TransportError : public Error {
 public:
  using Error::Error;
};

class CacheCorruption : public Error {
 public:
  using Error::Error;
};

/// A text-completion LLM. Implementations must be safe to call from several
/// threads at once.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// POSTs {prompt, max_new_tokens, greedy} as JSON to an http:// endpoint and
/// expects {text, prompt_tokens, completion_tokens} back.
class HttpCompletionClient final : public CompletionClient {
 public:
  explicit HttpCompletionClient(std::string endpoint_url,
                                std::chrono::seconds timeout = std::chrono::seconds(600));
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return "http:" + url_; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
  std::string path_;
  std::chrono::seconds timeout_;
};

/// Deterministic stand-in for an LLM, for desk-scale runs. It pulls the
/// snippet and languages out of a translation prompt and returns a
/// "translation": a provenance comment followed by the snippet re-indented
/// with four-space steps and stripped of trailing blanks, then the closing
/// fence. Every `unterminated_every`-th distinct snippet (by hash) gets no
/// closing fence.
class FakeCompletionClient final : public CompletionClient {
 public:
  struct Options {
    int unterminated_every = 0;  // 0 disables
  };
  FakeCompletionClient() = default;
  explicit FakeCompletionClient(Options options) : options_(options) {}
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string name() const override { return "fake"; }

 private:
  Options options_;
  WhitespaceTokenCounter counter_;
};

/// Content-addressed response store: <dir>/<key[0:2]>/<key>.json, each
/// holding the request and the response. Writes are atomic per entry.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  /// Throws CacheCorruption if the stored entry is unreadable or was stored
  /// for a different request.
  std::optional<CompletionResponse> get(const CompletionRequest& request) const;
  void put(const CompletionRequest& request, const CompletionResponse& response) const;
  std::filesystem::path entry_path(const CompletionRequest& request) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace stylo
