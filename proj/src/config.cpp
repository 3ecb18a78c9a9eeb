#include "stylo/config.hpp"

#include <set>

#include "stylo/hash.hpp"

namespace stylo {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, std::string_view where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ValidationError("unknown field '" + k + "' in " + std::string(where));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_file(const std::filesystem::path& p, std::string_view what) {
  if (p.empty()) throw ValidationError(std::string(what) + " path is not configured");
  if (!std::filesystem::is_regular_file(p)) throw ValidationError(std::string(what) + " not found: " + p.string());
}

}  // namespace

ordered_json RunConfig::to_json() const {
  auto rel = [this](const std::filesystem::path& p) {
    if (p.empty() || base_dir.empty()) return p.generic_string();
    return p.lexically_relative(base_dir).generic_string();
  };
  ordered_json j;
  j["seed"] = seed;
  j["workers"] = workers;
  j["paths"] = {{"corpus", rel(paths.corpus)},     {"ranking", rel(paths.ranking)},
                {"aliases", rel(paths.aliases)},   {"cache", rel(paths.cache)},
                {"datasets", rel(paths.datasets)}, {"checkpoints", rel(paths.checkpoints)},
                {"reports", rel(paths.reports)},   {"external", rel(paths.external)}};
  j["languages"] = {{"top_k", top_k}, {"supported", supported_languages}};
  j["completion"] = {{"client", completion.client},
                     {"endpoint", completion.endpoint},
                     {"timeout_s", completion.timeout_s},
                     {"unterminated_every", completion.unterminated_every},
                     {"retry",
                      {{"attempts", completion.retry.attempts},
                       {"base_delay_ms", completion.retry.base_delay.count()},
                       {"backoff_factor", completion.retry.backoff_factor}}}};
  j["limits"] = {{"prompt", limits.prompt}, {"generation", limits.generation}};
  j["sampling"] = {{"per_class_count", per_class_count},
                   {"train_ratio", train_ratio},
                   {"split_mode", to_string(split_mode)},
                   {"rng", Rng::algorithm}};
  j["encoder"] = encoder.to_json();
  if (j["encoder"].contains("checkpoint")) j["encoder"]["checkpoint"] = rel(encoder.checkpoint);
  j["train"] = train.to_json();
  j["baselines"] = ordered_json::array();
  for (const auto& b : baselines) j["baselines"].push_back(b.to_json());
  j["cv_folds"] = cv_folds;
  return j;
}

std::string RunConfig::hash() const { return sha256_hex(dump_line(to_json())); }

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  RunConfig c;
  c.base_dir = base;
  reject_unknown(j, {"seed", "workers", "paths", "languages", "completion", "limits", "sampling", "encoder", "train",
                     "baselines", "cv_folds"},
                 "config");
  try {
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      reject_unknown(p, {"corpus", "ranking", "aliases", "cache", "datasets", "checkpoints", "reports", "external"},
                     "paths");
      c.paths.corpus = resolve(base, p.value("corpus", ""));
      c.paths.ranking = resolve(base, p.value("ranking", ""));
      c.paths.aliases = resolve(base, p.value("aliases", ""));
      c.paths.cache = resolve(base, p.value("cache", "cache"));
      c.paths.datasets = resolve(base, p.value("datasets", "datasets"));
      c.paths.checkpoints = resolve(base, p.value("checkpoints", "checkpoints"));
      c.paths.reports = resolve(base, p.value("reports", "reports"));
      c.paths.external = resolve(base, p.value("external", ""));
    } else {
      c.paths.cache = base / "cache";
      c.paths.datasets = base / "datasets";
      c.paths.checkpoints = base / "checkpoints";
      c.paths.reports = base / "reports";
    }
    if (j.contains("languages")) {
      const auto& l = j.at("languages");
      reject_unknown(l, {"top_k", "supported"}, "languages");
      c.top_k = l.value("top_k", c.top_k);
      c.supported_languages = l.value("supported", std::vector<std::string>{});
    }
    if (j.contains("completion")) {
      const auto& cc = j.at("completion");
      reject_unknown(cc, {"client", "endpoint", "timeout_s", "unterminated_every", "retry"}, "completion");
      c.completion.client = cc.value("client", c.completion.client);
      c.completion.endpoint = cc.value("endpoint", "");
      c.completion.timeout_s = cc.value("timeout_s", c.completion.timeout_s);
      c.completion.unterminated_every = cc.value("unterminated_every", 0);
      if (cc.contains("retry")) {
        const auto& r = cc.at("retry");
        reject_unknown(r, {"attempts", "base_delay_ms", "backoff_factor"}, "completion.retry");
        c.completion.retry.attempts = r.value("attempts", c.completion.retry.attempts);
        c.completion.retry.base_delay =
            std::chrono::milliseconds(r.value("base_delay_ms", static_cast<long>(c.completion.retry.base_delay.count())));
        c.completion.retry.backoff_factor = r.value("backoff_factor", c.completion.retry.backoff_factor);
      }
    }
    if (j.contains("limits")) {
      const auto& l = j.at("limits");
      reject_unknown(l, {"prompt", "generation"}, "limits");
      c.limits.prompt = l.value("prompt", c.limits.prompt);
      c.limits.generation = l.value("generation", c.limits.generation);
    }
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      reject_unknown(s, {"per_class_count", "train_ratio", "split_mode", "rng"}, "sampling");
      c.per_class_count = s.value("per_class_count", c.per_class_count);
      c.train_ratio = s.value("train_ratio", c.train_ratio);
      c.split_mode = parse_split_mode(s.value("split_mode", std::string(to_string(c.split_mode))));
      if (s.contains("rng") && s.at("rng").get<std::string>() != Rng::algorithm)
        throw ValidationError("config asks for RNG '" + s.at("rng").get<std::string>() + "', this build provides '" +
                              std::string(Rng::algorithm) + "'");
    }
    if (j.contains("encoder")) {
      auto e = j.at("encoder");
      if (e.contains("checkpoint")) e["checkpoint"] = resolve(base, e.at("checkpoint").get<std::string>()).string();
      c.encoder = EncoderConfig::from_json(e);
    }
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("baselines"))
      for (const auto& b : j.at("baselines")) c.baselines.push_back(BaselineSpec::from_json(b));
    else
      for (auto k : {BaselineKind::feature_tree, BaselineKind::feature_forest, BaselineKind::tfidf_boosted})
        c.baselines.push_back(BaselineSpec::defaults(k));
    c.cv_folds = j.value("cv_folds", c.cv_folds);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ValidationError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, std::filesystem::absolute(path).parent_path());
}

void RunConfig::validate() const {
  if (workers < 1) throw ValidationError("workers must be positive");
  if (top_k < 1) throw ValidationError("languages.top_k must be positive");
  if (limits.prompt < 1 || limits.generation < 1) throw ValidationError("token limits must be positive");
  if (per_class_count < 1) throw ValidationError("sampling.per_class_count must be positive");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ValidationError("sampling.train_ratio must be in (0, 1)");
  if (cv_folds < 2) throw ValidationError("cv_folds must be at least 2");
  if (completion.client != "fake" && completion.client != "http")
    throw ValidationError("completion.client must be 'fake' or 'http'");
  if (completion.client == "http" && completion.endpoint.empty())
    throw ValidationError("completion.endpoint is required for the http client");
  if (completion.timeout_s < 1 || completion.retry.attempts < 1 || completion.unterminated_every < 0)
    throw ValidationError("completion timeout, retry attempts and unterminated_every are out of range");
  encoder.validate();
  train.validate();
  if (!paths.aliases.empty()) require_file(paths.aliases, "alias file");
  if (!paths.external.empty()) require_file(paths.external, "external dataset");
  if (encoder.variant == EncoderVariant::pretrained_checkpoint &&
      !std::filesystem::is_regular_file(encoder.checkpoint / "manifest.json"))
    throw ValidationError("pretrained checkpoint not found: " + encoder.checkpoint.string());
}

void RunConfig::require_inputs_for_build() const {
  require_file(paths.corpus, "corpus");
  require_file(paths.ranking, "language ranking");
}

}  // namespace stylo
