#include "stylo/classifier.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "stylo/hash.hpp"
#include "stylo/optim.hpp"

namespace stylo {

static_assert(std::endian::native == std::endian::little, "weight files are written in host byte order");

namespace {

constexpr std::string_view kWeightsMagic = "STYLOWT1";
constexpr std::string_view kManifestFormat = "stylo-checkpoint/1";

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw ValidationError("weight file is truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

ModelShape shape_for(const EncoderConfig& enc, int vocab_size, double dropout) {
  ModelShape s;
  s.vocab_size = vocab_size;
  s.hidden = enc.hidden;
  s.heads = enc.heads;
  s.layers = enc.layers;
  s.ffn_dim = enc.ffn_dim > 0 ? enc.ffn_dim : 4 * enc.hidden;
  s.head_dim = enc.head_dim > 0 ? enc.head_dim : enc.hidden;
  s.max_len = enc.max_len;
  s.dropout = dropout;
  return s;
}

std::vector<int> ids_for(const CodeTokenizer& tok, std::string_view code, int max_len) {
  auto cleaned = clean_snippet(code);
  if (cleaned.empty()) throw ValidationError("cannot classify empty code");
  return tok.tokenize(cleaned, max_len).ids;
}

}  // namespace

std::string_view to_string(EncoderVariant v) {
  return v == EncoderVariant::small_scratch ? "small_scratch" : "pretrained_checkpoint";
}

EncoderVariant parse_encoder_variant(std::string_view text) {
  if (text == "small_scratch") return EncoderVariant::small_scratch;
  if (text == "pretrained_checkpoint") return EncoderVariant::pretrained_checkpoint;
  throw ValidationError("unknown encoder variant '" + std::string(text) + "'");
}

void EncoderConfig::validate() const {
  if (variant == EncoderVariant::pretrained_checkpoint) {
    if (checkpoint.empty()) throw ValidationError("pretrained_checkpoint variant needs a checkpoint path");
    return;
  }
  if (layers < 1 || hidden < 1 || heads < 1) throw ValidationError("encoder sizes must be positive");
  if (hidden % heads != 0) throw ValidationError("hidden size must be divisible by the head count");
  if (max_len < 2) throw ValidationError("max_len must be at least 2");
  if (ffn_dim < 0 || head_dim < 0) throw ValidationError("ffn_dim and head_dim must be non-negative");
  if (max_vocab < 5 || min_freq < 1) throw ValidationError("max_vocab must be >= 5 and min_freq >= 1");
}

ordered_json EncoderConfig::to_json() const {
  ordered_json j;
  j["variant"] = to_string(variant);
  if (variant == EncoderVariant::pretrained_checkpoint) j["checkpoint"] = checkpoint.string();
  j["layers"] = layers;
  j["hidden"] = hidden;
  j["heads"] = heads;
  j["ffn_dim"] = ffn_dim;
  j["head_dim"] = head_dim;
  j["max_len"] = max_len;
  j["max_vocab"] = max_vocab;
  j["min_freq"] = min_freq;
  return j;
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  static const std::set<std::string> known{"variant", "checkpoint", "layers",  "hidden",    "heads",
                                           "ffn_dim", "head_dim",   "max_len", "max_vocab", "min_freq"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ValidationError("unknown encoder field '" + k + "'");
  try {
    c.variant = parse_encoder_variant(j.value("variant", std::string("small_scratch")));
    c.checkpoint = j.value("checkpoint", std::string());
    c.layers = j.value("layers", c.layers);
    c.hidden = j.value("hidden", c.hidden);
    c.heads = j.value("heads", c.heads);
    c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
    c.head_dim = j.value("head_dim", c.head_dim);
    c.max_len = j.value("max_len", c.max_len);
    c.max_vocab = j.value("max_vocab", c.max_vocab);
    c.min_freq = j.value("min_freq", c.min_freq);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (!(lr_initial > 0.0) || !(lr_decay_factor > 0.0)) throw ValidationError("learning rates must be positive");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be non-negative");
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (lr_decay_epoch < 1 || lr_decay_epoch >= epochs)
    throw ValidationError("lr_decay_epoch must be in [1, epochs)");
  if (batch_size < 1 || grad_accumulation < 1) throw ValidationError("batch_size and grad_accumulation must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
}

ordered_json TrainConfig::to_json() const {
  ordered_json j;
  j["optimizer"] = "AdamW";
  j["lr_initial"] = lr_initial;
  j["weight_decay"] = weight_decay;
  j["epochs"] = epochs;
  j["lr_decay_epoch"] = lr_decay_epoch;
  j["lr_decay_factor"] = lr_decay_factor;
  j["batch_size"] = batch_size;
  j["grad_accumulation"] = grad_accumulation;
  j["dropout"] = dropout;
  j["seed"] = seed;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  static const std::set<std::string> known{"optimizer",       "lr_initial", "weight_decay",      "epochs",
                                           "lr_decay_epoch",  "lr_decay_factor", "batch_size", "grad_accumulation",
                                           "dropout",         "seed"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ValidationError("unknown training field '" + k + "'");
  try {
    if (j.value("optimizer", std::string("AdamW")) != "AdamW") throw ValidationError("only AdamW is supported");
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.lr_decay_epoch = j.value("lr_decay_epoch", c.lr_decay_epoch);
    c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.grad_accumulation = j.value("grad_accumulation", c.grad_accumulation);
    c.dropout = j.value("dropout", c.dropout);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

ordered_json TrainingHistory::to_json() const {
  ordered_json j;
  j["epochs"] = ordered_json::array();
  for (const auto& e : epochs) {
    ordered_json row;
    row["epoch"] = e.epoch;
    row["lr"] = e.lr;
    row["train_loss"] = e.train_loss;
    row["val_accuracy"] = e.val_accuracy ? ordered_json(*e.val_accuracy) : ordered_json(nullptr);
    j["epochs"].push_back(std::move(row));
  }
  j["step_lr"] = step_lr;
  return j;
}

ModelCheckpoint::ModelCheckpoint(CodeTokenizer tokenizer, Model model, EncoderConfig encoder, TrainConfig train,
                                 TrainingHistory history)
    : tokenizer_(std::move(tokenizer)), model_(std::move(model)), encoder_(std::move(encoder)),
      train_(std::move(train)), history_(std::move(history)) {}

std::string serialize_weights(const std::vector<const nn::Parameter<double>*>& params) {
  std::string out(kWeightsMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.cols()));
    out.append(reinterpret_cast<const char*>(p->value.data()), sizeof(double) * static_cast<std::size_t>(p->value.size()));
  }
  return out;
}

void deserialize_weights(std::string_view in, const std::vector<nn::Parameter<double>*>& params) {
  if (in.substr(0, kWeightsMagic.size()) != kWeightsMagic) throw ValidationError("not a weight file");
  in.remove_prefix(kWeightsMagic.size());
  auto count = take<std::uint32_t>(in);
  if (count != params.size())
    throw ValidationError("weight file has " + std::to_string(count) + " tensors, model expects " +
                          std::to_string(params.size()));
  for (auto* p : params) {
    auto len = take<std::uint32_t>(in);
    if (in.size() < len) throw ValidationError("weight file is truncated");
    std::string name(in.substr(0, len));
    in.remove_prefix(len);
    auto rows = take<std::uint32_t>(in);
    auto cols = take<std::uint32_t>(in);
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
      throw ValidationError("weight tensor '" + name + "' does not match model tensor '" + p->name + "'");
    const std::size_t bytes = sizeof(double) * rows * cols;
    if (in.size() < bytes) throw ValidationError("weight file is truncated");
    std::memcpy(p->value.data(), in.data(), bytes);
    in.remove_prefix(bytes);
  }
  if (!in.empty()) throw ValidationError("trailing bytes in weight file");
}

void ModelCheckpoint::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto weights = serialize_weights(model_.parameters());
  auto tokenizer = dump_line(tokenizer_.to_json());
  ordered_json m;
  m["format"] = kManifestFormat;
  m["encoder"] = encoder_.to_json();
  const auto& s = model_.shape();
  m["shape"] = {{"vocab_size", s.vocab_size}, {"hidden", s.hidden},   {"heads", s.heads},
                {"layers", s.layers},         {"ffn_dim", s.ffn_dim}, {"head_dim", s.head_dim},
                {"max_len", s.max_len},       {"dropout", s.dropout}};
  m["train"] = train_.to_json();
  m["tokenizer_sha256"] = tokenizer_.hash();
  m["weights_sha256"] = sha256_hex(weights);
  m["history"] = history_.to_json();
  write_file_atomic(dir / "weights.bin", weights);
  write_file_atomic(dir / "tokenizer.json", tokenizer + "\n");
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

ModelCheckpoint ModelCheckpoint::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("checkpoint directory not found: " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != kManifestFormat) throw ValidationError("unsupported checkpoint format");

  CodeTokenizer tok;
  try {
    tok = CodeTokenizer::from_json(nlohmann::json::parse(read_file(dir / "tokenizer.json")));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed tokenizer state: " + std::string(e.what()));
  }
  if (tok.hash() != m.at("tokenizer_sha256").get<std::string>())
    throw ValidationError("tokenizer state does not match the checkpoint manifest");
  auto weights = read_file(dir / "weights.bin");
  if (sha256_hex(weights) != m.at("weights_sha256").get<std::string>())
    throw ValidationError("weights do not match the checkpoint manifest");

  const auto& js = m.at("shape");
  ModelShape shape;
  shape.vocab_size = js.at("vocab_size");
  shape.hidden = js.at("hidden");
  shape.heads = js.at("heads");
  shape.layers = js.at("layers");
  shape.ffn_dim = js.at("ffn_dim");
  shape.head_dim = js.at("head_dim");
  shape.max_len = js.at("max_len");
  shape.dropout = js.at("dropout");
  if (shape.vocab_size != tok.size()) throw ValidationError("vocabulary size differs from the tokenizer state");

  Rng init(0);
  Model model(shape, init);
  deserialize_weights(weights, model.parameters());

  TrainingHistory history;
  for (const auto& e : m.at("history").at("epochs")) {
    EpochLog log{e.at("epoch"), e.at("lr"), e.at("train_loss"), std::nullopt};
    if (!e.at("val_accuracy").is_null()) log.val_accuracy = e.at("val_accuracy").get<double>();
    history.epochs.push_back(log);
  }
  history.step_lr = m.at("history").at("step_lr").get<std::vector<double>>();
  return ModelCheckpoint(std::move(tok), std::move(model), EncoderConfig::from_json(m.at("encoder")),
                         TrainConfig::from_json(m.at("train")), std::move(history));
}

Prediction ModelCheckpoint::predict(std::string_view code) const {
  return model_.predict(ids_for(tokenizer_, code, model_.shape().max_len));
}

std::vector<Prediction> ModelCheckpoint::predict_all(const std::vector<SnippetRecord>& records) const {
  std::vector<Prediction> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(predict(r.code));
  return out;
}

ModelCheckpoint train(const std::vector<SnippetRecord>& train_set, const std::vector<SnippetRecord>& val_set,
                      const EncoderConfig& encoder, const TrainConfig& config, const EpochCallback& on_epoch) {
  encoder.validate();
  config.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");
  {
    std::set<std::tuple<std::string, std::string, Label>> seen;
    for (const auto& r : train_set) seen.emplace(r.set, r.task_name, r.target);
    for (const auto& r : val_set)
      if (seen.contains({r.set, r.task_name, r.target}))
        throw ValidationError("record (" + r.set + ", " + r.task_name + ", " + std::string(to_string(r.target)) +
                              ") is in both the training and validation sets");
  }

  Rng init_rng = Rng::derived(config.seed, "init");
  CodeTokenizer tokenizer;
  ModelCheckpoint::Model model;
  EncoderConfig used = encoder;
  if (encoder.variant == EncoderVariant::pretrained_checkpoint) {
    auto base = ModelCheckpoint::load(encoder.checkpoint);
    tokenizer = base.tokenizer();
    model = base.model();
    model.set_dropout(config.dropout);
    model.reset_head(init_rng);
    used = base.encoder_config();
    used.variant = EncoderVariant::pretrained_checkpoint;
    used.checkpoint = encoder.checkpoint;
    spdlog::info("warm start from {} ({} tensors)", encoder.checkpoint.string(), model.parameters().size());
  } else {
    std::vector<std::string> texts;
    texts.reserve(train_set.size());
    for (const auto& r : train_set) texts.push_back(clean_snippet(r.code));
    tokenizer = CodeTokenizer::build(texts, encoder.max_vocab, encoder.min_freq);
    model = ModelCheckpoint::Model(shape_for(encoder, tokenizer.size(), config.dropout), init_rng);
  }
  const int max_len = model.shape().max_len;

  std::vector<std::vector<int>> train_ids, val_ids;
  std::size_t truncated = 0;
  for (const auto& r : train_set) {
    auto seq = tokenizer.tokenize(clean_snippet(r.code), max_len);
    truncated += seq.truncated;
    train_ids.push_back(std::move(seq.ids));
  }
  for (const auto& r : val_set) val_ids.push_back(ids_for(tokenizer, r.code, max_len));
  spdlog::info("training on {} records ({} truncated), vocabulary {}, validating on {}", train_set.size(), truncated,
               tokenizer.size(), val_set.size());

  AdamW<double> opt(model.parameters(), config.weight_decay);
  StepSchedule schedule{config.lr_initial, config.lr_decay_epoch, config.lr_decay_factor};
  Rng order_rng = Rng::derived(config.seed, "order");
  Rng dropout_rng = Rng::derived(config.seed, "dropout");
  TrainingHistory history;
  const std::size_t per_step = static_cast<std::size_t>(config.batch_size) * config.grad_accumulation;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = schedule.at_epoch(epoch);
    auto order = shuffled_indices(train_ids.size(), order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += per_step) {
      const std::size_t stop = std::min(order.size(), start + per_step);
      model.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const auto i = order[k];
        double loss = model.accumulate_gradients(train_ids[i], train_set[i].target, &dropout_rng);
        if (!std::isfinite(loss))
          throw Error("non-finite loss at epoch " + std::to_string(epoch) + " on task '" + train_set[i].task_name +
                      "' (lr " + std::to_string(lr) + ")");
        loss_sum += loss;
      }
      opt.step(lr, 1.0 / static_cast<double>(stop - start));
      history.step_lr.push_back(lr);
    }
    EpochLog log{epoch, lr, loss_sum / static_cast<double>(order.size()), std::nullopt};
    if (!val_ids.empty()) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < val_ids.size(); ++i) correct += model.predict(val_ids[i]).label == val_set[i].target;
      log.val_accuracy = static_cast<double>(correct) / static_cast<double>(val_ids.size());
    }
    spdlog::info("epoch {}/{} lr {:.3g} loss {:.6f}{}", epoch, config.epochs, lr, log.train_loss,
                 log.val_accuracy ? fmt::format(" val_acc {:.4f}", *log.val_accuracy) : std::string());
    history.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return ModelCheckpoint(std::move(tokenizer), std::move(model), used, config, std::move(history));
}

}  // namespace stylo
