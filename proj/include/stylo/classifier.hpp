#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stylo/encoder.hpp"
#include "stylo/records.hpp"
#include "stylo/tokenizer.hpp"

namespace stylo {

enum class EncoderVariant { small_scratch, pretrained_checkpoint };
std::string_view to_string(EncoderVariant v);
EncoderVariant parse_encoder_variant(std::string_view text);

/// Which encoder to train. `pretrained_checkpoint` warm-starts encoder
/// weights and vocabulary from an earlier checkpoint directory and puts a
/// fresh head on top; the other fields are then taken from that checkpoint.
struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::small_scratch;
  std::filesystem::path checkpoint;
  int layers = 4;
  int hidden = 256;
  int heads = 4;
  int ffn_dim = 0;   // 0 means 4 * hidden
  int head_dim = 0;  // 0 means hidden
  int max_len = 512;
  int max_vocab = 16000;
  int min_freq = 1;

  void validate() const;
  ordered_json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
  double lr_initial = 2e-5;
  double weight_decay = 0.01;
  int epochs = 15;
  int lr_decay_epoch = 10;
  double lr_decay_factor = 0.1;
  int batch_size = 16;
  int grad_accumulation = 1;
  double dropout = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
  ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_accuracy;
};

struct TrainingHistory {
  std::vector<EpochLog> epochs;
  std::vector<double> step_lr;  // learning rate used at every optimizer step
  ordered_json to_json() const;
};

/// Trained encoder, head, vocabulary and the configuration that made them.
class ModelCheckpoint {
 public:
  using Model = SequenceClassifier<double>;

  ModelCheckpoint() = default;
  ModelCheckpoint(CodeTokenizer tokenizer, Model model, EncoderConfig encoder, TrainConfig train,
                  TrainingHistory history);

  /// Writes manifest.json, weights.bin and tokenizer.json into `dir`.
  void save(const std::filesystem::path& dir) const;
  /// Verifies the manifest's content hashes against the other two files.
  static ModelCheckpoint load(const std::filesystem::path& dir);

  /// Cleans, tokenizes and classifies in eval mode.
  Prediction predict(std::string_view code) const;
  std::vector<Prediction> predict_all(const std::vector<SnippetRecord>& records) const;

  const CodeTokenizer& tokenizer() const { return tokenizer_; }
  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const EncoderConfig& encoder_config() const { return encoder_; }
  const TrainConfig& train_config() const { return train_; }
  const TrainingHistory& history() const { return history_; }

 private:
  CodeTokenizer tokenizer_;
  Model model_;
  EncoderConfig encoder_;
  TrainConfig train_;
  TrainingHistory history_;
};

/// Binary weight file: "STYLOWT1", u32 tensor count, then per tensor
/// u32 name length, name bytes, u32 rows, u32 cols and rows*cols
/// little-endian float64 values in row-major order.
std::string serialize_weights(const std::vector<const nn::Parameter<double>*>& params);
void deserialize_weights(std::string_view bytes, const std::vector<nn::Parameter<double>*>& params);

/// Optional per-epoch callback, e.g. for progress output.
using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains with AdamW and the step schedule. Train and validation sets must
/// not share a (set, task, target) record. Aborts on a non-finite loss.
ModelCheckpoint train(const std::vector<SnippetRecord>& train_set, const std::vector<SnippetRecord>& val_set,
                      const EncoderConfig& encoder, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace stylo
