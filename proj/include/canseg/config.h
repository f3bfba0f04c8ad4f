#ifndef CANSEG_CONFIG_H_
#define CANSEG_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "nlohmann/json.hpp"

namespace canseg {

enum class ModelKind { kSeq2Seq, kPGNet, kTransducer };
enum class Regime { kHigh, kLow };

// "s2s", "pgnet", "il" ("transducer" is accepted as an alias).
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);
std::string to_string(Regime regime);
Regime parse_regime(std::string_view text);

enum class OptimizerKind { kAdam, kAdadelta };

// Every hyperparameter of the three models. defaults() returns the
// published settings for a model kind and resource regime.
struct TrainConfig {
  ModelKind kind = ModelKind::kPGNet;
  Regime regime = Regime::kHigh;

  int embedding_size = 100;
  int encoder_hidden = 100;  // per direction
  int decoder_hidden = 100;
  int attention_size = 100;
  int action_embedding_size = 100;  // transducer only
  double dropout = 0.3;

  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double adadelta_rho = 0.95;
  double adadelta_epsilon = 1e-6;
  // When false, Adadelta applies its raw update and learning_rate is only
  // recorded (the behavior of the toolkit the transducer was published with).
  bool adadelta_uses_learning_rate = true;
  double clip_norm = 5.0;

  int batch_size = 32;
  int epochs = 100;
  int patience = 10;
  // Stop once dev accuracy reaches 100%; the returned checkpoint is the
  // same because later epochs cannot improve on it.
  bool stop_at_perfect_dev = true;

  int beam_width = 1;      // test-time decoding
  int dev_beam_width = 1;  // decoding used for early stopping

  double schedule_k = 12.0;  // transducer roll-in decay
  int cap_margin = 5;        // transducer cap: |x| + max target length + margin
  int cap_factor = 3;        // encoder-decoder cap: factor * |x| + offset
  int cap_offset = 10;

  uint64_t seed = 0;

  static TrainConfig defaults(ModelKind kind, Regime regime);

  nlohmann::json to_json() const;
  // Starts from defaults(kind, regime) found in the document, then applies
  // every other key. Unknown keys throw InvalidArgument.
  static TrainConfig from_json(const nlohmann::json& doc);

  // Sets one hyperparameter from text, e.g. set("dropout", "0.4").
  void set(const std::string& key, const std::string& value);

  // FNV-1a over the canonical JSON rendering.
  std::string hash() const;
};

// Flat `key = value` file, '#' comments, blank lines ignored.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_key_value_text(std::string_view text);

// p(e) = k / (k + exp(e / k)).
double expert_probability(int epoch, double k);

}  // namespace canseg

#endif  // CANSEG_CONFIG_H_
