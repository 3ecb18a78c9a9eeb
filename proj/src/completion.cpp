#include "stylo/completion.hpp"

#include <algorithm>
#include <sstream>

#include "httplib.h"

#include "stylo/generation.hpp"
#include "stylo/hash.hpp"
#include "stylo/records.hpp"

namespace stylo {

std::size_t WhitespaceTokenCounter::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

nlohmann::ordered_json CompletionRequest::to_json() const {
  nlohmann::ordered_json j;
  j["prompt"] = prompt;
  j["max_new_tokens"] = max_new_tokens;
  j["greedy"] = greedy;
  return j;
}

std::string CompletionRequest::cache_key() const { return sha256_hex(dump_line(to_json())); }

nlohmann::ordered_json CompletionResponse::to_json() const {
  nlohmann::ordered_json j;
  j["text"] = text;
  j["prompt_tokens"] = prompt_tokens;
  j["completion_tokens"] = completion_tokens;
  return j;
}

CompletionResponse CompletionResponse::from_json(const nlohmann::json& j) {
  CompletionResponse r;
  r.text = j.at("text").get<std::string>();
  r.prompt_tokens = j.value("prompt_tokens", 0);
  r.completion_tokens = j.value("completion_tokens", 0);
  return r;
}

HttpCompletionClient::HttpCompletionClient(std::string endpoint_url, std::chrono::seconds timeout)
    : url_(std::move(endpoint_url)), timeout_(timeout) {
  constexpr std::string_view scheme = "http://";
  if (url_.rfind(scheme, 0) != 0) throw ValidationError("completion endpoint must be an http:// URL: " + url_);
  std::string rest = url_.substr(scheme.size());
  auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.rfind(':');
  host_ = authority.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad port in endpoint " + url_);
    }
  }
  if (host_.empty()) throw ValidationError("missing host in endpoint " + url_);
}

CompletionResponse HttpCompletionClient::complete(const CompletionRequest& request) {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(std::chrono::seconds(10));
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  auto res = cli.Post(path_, dump_line(request.to_json()), "application/json");
  if (!res) throw TransportError("POST " + url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("POST " + url_ + " returned HTTP " + std::to_string(res->status));
  try {
    return CompletionResponse::from_json(nlohmann::json::parse(res->body));
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("malformed completion response: " + std::string(e.what()));
  }
}

namespace {

std::string comment_prefix(std::string_view language) {
  return language == "Python" || language == "Ruby" ? "#" : "//";
}

std::string fake_translation(const ParsedPrompt& p) {
  std::vector<std::string> lines;
  std::istringstream in(p.code);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);

  auto indent_cols = [](const std::string& l) {
    int cols = 0;
    for (char c : l) {
      if (c == ' ') cols += 1;
      else if (c == '\t') cols += 4;
      else break;
    }
    return cols;
  };
  int unit = 0;
  for (const auto& l : lines) {
    if (l.find_first_not_of(" \t") == std::string::npos) continue;
    int c = indent_cols(l);
    if (c > 0 && (unit == 0 || c < unit)) unit = c;
  }

  std::string out = "\n" + comment_prefix(p.target_language) + " translated from " + p.source_language + "\n";
  for (const auto& l : lines) {
    auto first = l.find_first_not_of(" \t");
    if (first == std::string::npos) {
      out += "\n";
      continue;
    }
    auto last = l.find_last_not_of(" \t\r");
    int level = unit > 0 ? indent_cols(l) / unit : 0;
    out += std::string(static_cast<std::size_t>(4 * level), ' ');
    out += l.substr(first, last - first + 1);
    out += "\n";
  }
  out += "```\n";
  return out;
}

std::string first_words(std::string_view text, std::size_t n) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!space && !in_word) {
      if (words == n) return std::string(text.substr(0, i));
      ++words;
    }
    in_word = !space;
  }
  return std::string(text);
}

}  // namespace

CompletionResponse FakeCompletionClient::complete(const CompletionRequest& request) {
  CompletionResponse r;
  r.prompt_tokens = static_cast<int>(counter_.count(request.prompt));
  auto parsed = parse_translation_prompt(request.prompt);
  if (!parsed) return r;  // not a translation prompt: empty completion
  r.text = fake_translation(*parsed);
  if (options_.unterminated_every > 0 &&
      fnv1a64(parsed->code) % static_cast<std::uint64_t>(options_.unterminated_every) == 0) {
    r.text.erase(r.text.rfind("```"));
  }
  if (counter_.count(r.text) > static_cast<std::size_t>(request.max_new_tokens))
    r.text = first_words(r.text, static_cast<std::size_t>(request.max_new_tokens));
  r.completion_tokens = static_cast<int>(counter_.count(r.text));
  return r;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::entry_path(const CompletionRequest& request) const {
  auto key = request.cache_key();
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<CompletionResponse> ResponseCache::get(const CompletionRequest& request) const {
  auto path = entry_path(request);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(read_file(path));
    const auto& req = j.at("request");
    if (req.at("prompt").get<std::string>() != request.prompt ||
        req.at("max_new_tokens").get<int>() != request.max_new_tokens ||
        req.at("greedy").get<bool>() != request.greedy)
      throw CacheCorruption("cache entry " + path.string() + " does not match its request");
    return CompletionResponse::from_json(j.at("response"));
  } catch (const nlohmann::json::exception& e) {
    throw CacheCorruption("unreadable cache entry " + path.string() + ": " + e.what());
  }
}

void ResponseCache::put(const CompletionRequest& request, const CompletionResponse& response) const {
  nlohmann::ordered_json j;
  j["request"] = request.to_json();
  j["response"] = response.to_json();
  write_file_atomic(entry_path(request), dump_line(j) + "\n");
}

}  // namespace stylo
