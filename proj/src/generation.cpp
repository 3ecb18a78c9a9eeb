#include "stylo/generation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <tuple>
#include <thread>

#include <spdlog/spdlog.h>

namespace stylo {

namespace {

constexpr std::string_view kFence = "```";

void replace_all(std::string& s, std::string_view what, std::string_view with) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = s.find(what, pos);
    if (hit == std::string::npos) break;
    out.append(s, pos, hit - pos);
    out.append(with);
    pos = hit + what.size();
  }
  out.append(s, pos, std::string::npos);
  s = std::move(out);
}

std::string render(std::string_view code, std::string_view src, std::string_view dst) {
  std::string text(kTranslationTemplate);
  replace_all(text, "{SOURCE_LANGUAGE}", src);
  replace_all(text, "{TARGET_LANGUAGE}", dst);
  // Last, so placeholder-like text inside the snippet is never expanded.
  replace_all(text, "{CODE_SNIPPET}", code);
  return text;
}

}  // namespace

PromptTooLong::PromptTooLong(std::size_t n, int limit)
    : Error("prompt has " + std::to_string(n) + " tokens, limit is " + std::to_string(limit)), tokens(n) {}

PromptSpec build_prompt(const RawSnippet& snippet, std::string_view src, std::string_view dst,
                        const TokenLimits& limits, const TokenCounter& counter) {
  if (snippet.language_name != src)
    throw std::invalid_argument("snippet language " + snippet.language_name + " is not the source language " +
                                std::string(src));
  if (src == dst) throw std::invalid_argument("source and target language are both " + std::string(src));
  if (clean_snippet(snippet.code).empty()) throw std::invalid_argument("empty code snippet");

  PromptSpec p;
  p.template_text = std::string(kTranslationTemplate);
  p.code_snippet = snippet.code;
  p.source_language = std::string(src);
  p.target_language = std::string(dst);
  p.rendered = render(snippet.code, src, dst);
  p.prompt_tokens = counter.count(p.rendered);
  if (p.prompt_tokens > static_cast<std::size_t>(limits.prompt)) throw PromptTooLong(p.prompt_tokens, limits.prompt);
  return p;
}

std::optional<ParsedPrompt> parse_translation_prompt(std::string_view rendered) {
  constexpr std::string_view head = "Translate this ```\n";
  constexpr std::string_view mid = "\n``` from ";
  constexpr std::string_view tail = ". Here is the translated code\n\n```";
  if (rendered.substr(0, head.size()) != head) return std::nullopt;
  if (rendered.size() < head.size() + tail.size() || rendered.substr(rendered.size() - tail.size()) != tail)
    return std::nullopt;
  auto body = rendered.substr(head.size(), rendered.size() - head.size() - tail.size());
  auto m = body.rfind(mid);
  if (m == std::string_view::npos) return std::nullopt;
  auto langs = body.substr(m + mid.size());
  auto to = langs.rfind(" to ");
  if (to == std::string_view::npos) return std::nullopt;
  return ParsedPrompt{std::string(body.substr(0, m)), std::string(langs.substr(0, to)),
                      std::string(langs.substr(to + 4))};
}

std::string_view to_string(GenerationStatus status) {
  switch (status) {
    case GenerationStatus::ok: return "ok";
    case GenerationStatus::empty: return "empty";
    case GenerationStatus::unterminated: return "unterminated";
    case GenerationStatus::over_length: return "over_length";
    case GenerationStatus::transport_error: return "transport_error";
  }
  return "unknown";
}

GenerationResult extract_completion(std::string raw_text) {
  GenerationResult r;
  r.raw_text = std::move(raw_text);
  if (clean_snippet(r.raw_text).empty()) {
    r.status = GenerationStatus::empty;
    return r;
  }
  auto close = r.raw_text.find(kFence);
  if (close == std::string::npos) {
    r.status = GenerationStatus::unterminated;
    return r;
  }
  auto code = r.raw_text.substr(0, close);
  if (clean_snippet(code).empty()) {
    r.status = GenerationStatus::empty;
    return r;
  }
  r.status = GenerationStatus::ok;
  r.extracted_code = std::move(code);
  return r;
}

GenerationResult translate(CompletionClient& client, const PromptSpec& prompt, const TokenLimits& limits,
                           const TranslateOptions& options) {
  CompletionRequest request{prompt.rendered, limits.generation, true};
  if (prompt.prompt_tokens > static_cast<std::size_t>(limits.prompt)) {
    GenerationResult r;
    r.status = GenerationStatus::over_length;
    r.prompt_tokens = static_cast<int>(prompt.prompt_tokens);
    return r;
  }

  std::optional<CompletionResponse> response;
  bool cached = false;
  if (options.cache) {
    response = options.cache->get(request);
    cached = response.has_value();
  }
  if (!response) {
    std::string last_error;
    auto delay = options.retry.base_delay;
    for (int attempt = 1; attempt <= std::max(1, options.retry.attempts); ++attempt) {
      try {
        response = client.complete(request);
        break;
      } catch (const TransportError& e) {
        last_error = e.what();
        spdlog::warn("completion attempt {}/{} failed: {}", attempt, options.retry.attempts, last_error);
        if (attempt < options.retry.attempts) {
          std::this_thread::sleep_for(delay);
          delay = std::chrono::milliseconds(
              static_cast<long long>(std::llround(static_cast<double>(delay.count()) * options.retry.backoff_factor)));
        }
      }
    }
    if (!response) {
      GenerationResult r;
      r.status = GenerationStatus::transport_error;
      r.error = last_error;
      return r;
    }
    if (options.cache) options.cache->put(request, *response);
  }

  GenerationResult r = extract_completion(response->text);
  r.prompt_tokens = response->prompt_tokens;
  r.completion_tokens = response->completion_tokens;
  r.cached = cached;
  if (response->prompt_tokens > limits.prompt || response->completion_tokens > limits.generation) {
    r.status = GenerationStatus::over_length;
    r.extracted_code.reset();
  }
  return r;
}

SubDataset build_subdataset(const Corpus& corpus, const PairSpec& pair, CompletionClient& client,
                            const GenerationOptions& options, std::vector<TranslationFailure>* failures) {
  WhitespaceTokenCounter default_counter;
  const TokenCounter& counter = options.counter ? *options.counter : default_counter;
  SubDataset sd;
  sd.id = SubDatasetId{pair.dst, pair.src};
  const std::string set_label = sd.id.label();
  const std::size_t n = pair.task_ids.size();

  std::vector<std::optional<PromptSpec>> prompts(n);
  std::vector<GenerationResult> results(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* src = corpus.find(pair.task_ids[i], pair.src);
    if (!src) throw ValidationError("task " + pair.task_ids[i] + " has no " + pair.src + " solution");
    RawSnippet cleaned = *src;
    cleaned.code = clean_snippet(src->code);
    try {
      prompts[i] = build_prompt(cleaned, pair.src, pair.dst, options.limits, counter);
    } catch (const PromptTooLong& e) {
      results[i].status = GenerationStatus::over_length;
      results[i].prompt_tokens = static_cast<int>(e.tokens);
    }
  }

  TranslateOptions topt{options.cache, options.retry};
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      if (!prompts[i]) continue;
      try {
        results[i] = translate(client, *prompts[i], options.limits, topt);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  // Assembly runs in task order regardless of how requests interleaved.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& task = pair.task_ids[i];
    const auto* human = corpus.find(task, pair.dst);
    if (!human) throw ValidationError("task " + task + " has no " + pair.dst + " solution");
    SnippetRecord h{human->task_name, human->task_url, human->task_description, pair.dst,
                    clean_snippet(human->code), Label::human, set_label};
    if (h.code.empty()) continue;
    sd.records.push_back(h);

    const auto& res = results[i];
    if (res.status == GenerationStatus::transport_error)
      throw TransportError("translation of task '" + task + "' for " + set_label + " failed: " + res.error);
    std::string code = res.extracted_code ? clean_snippet(*res.extracted_code) : std::string{};
    if (res.status != GenerationStatus::ok || code.empty()) {
      auto status = res.status == GenerationStatus::ok ? GenerationStatus::empty : res.status;
      spdlog::info("{}: dropped AI snippet for '{}' ({})", set_label, task, to_string(status));
      if (failures) failures->push_back({task, status, res.error});
      continue;
    }
    SnippetRecord a = h;
    a.code = std::move(code);
    a.target = Label::ai;
    sd.records.push_back(std::move(a));
  }
  return sd;
}

nlohmann::ordered_json DatasetSummary::to_json() const {
  nlohmann::ordered_json j;
  j["records"] = records;
  j["unique_tasks"] = unique_tasks;
  j["per_target"] = per_target;
  j["per_language"] = per_language;
  j["per_set"] = per_set;
  return j;
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary s;
  std::set<std::string> tasks;
  for (const auto& r : dataset.records) {
    ++s.per_set[r.set];
    ++s.per_language[r.language_name];
    ++s.per_target[std::string(to_string(r.target))];
    tasks.insert(r.task_name);
  }
  s.records = dataset.records.size();
  s.unique_tasks = tasks.size();
  return s;
}

Dataset assemble_dataset(const std::vector<SubDataset>& subdatasets, DatasetSummary* summary) {
  Dataset ds;
  std::set<std::tuple<std::string, std::string, Label>> keys;
  for (const auto& sd : subdatasets) {
    const auto label = sd.id.label();
    for (const auto& r : sd.records) {
      if (r.set != label) throw ValidationError("record of " + r.set + " filed under " + label);
      if (r.language_name != sd.id.dst)
        throw ValidationError(label + ": record in " + r.language_name + ", expected " + sd.id.dst);
      if (r.code.empty() || clean_snippet(r.code) != r.code)
        throw ValidationError(label + ": code of task '" + r.task_name + "' is not cleaned");
      if (!keys.emplace(r.set, r.task_name, r.target).second)
        throw ValidationError("duplicate record (" + r.set + ", " + r.task_name + ", " +
                              std::string(to_string(r.target)) + ")");
      ds.records.push_back(r);
    }
  }
  auto s = summarize(ds);
  spdlog::info("assembled {} records from {} sub-datasets ({} tasks)", s.records, subdatasets.size(), s.unique_tasks);
  if (summary) *summary = std::move(s);
  return ds;
}

}  // namespace stylo
