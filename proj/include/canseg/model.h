#ifndef CANSEG_MODEL_H_
#define CANSEG_MODEL_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "canseg/config.h"
#include "canseg/data.h"
#include "canseg/ndiff/graph.h"
#include "canseg/rng.h"
#include "nlohmann/json.hpp"

namespace canseg {

struct DecodeResult {
  // Content symbols rendered as text; morpheme boundaries are kBoundaryChar.
  std::u32string output;
  // Sum of log-probabilities of the chosen symbols or actions.
  double score = 0;
  // False if the output cap was reached before the end symbol / STOP.
  bool complete = true;
};

// Per-step state the trainer hands to a model.
struct TrainContext {
  Rng* rng = nullptr;  // dropout and sampling; null disables dropout
  int epoch = 0;       // zero-based
  double p_expert = 1.0;
};

// Common surface of the three segmentation models.
class Model {
 public:
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  virtual ModelKind kind() const = 0;
  const Vocabulary& vocab() const { return vocab_; }
  const TrainConfig& config() const { return config_; }
  ndiff::ParameterSet& params() { return params_; }
  const ndiff::ParameterSet& params() const { return params_; }

  // Called once with the training corpus before the first epoch.
  virtual void prepare(const Corpus& /*train*/) {}

  // Loss of one training example, recorded on `tape`.
  virtual ndiff::Var training_loss(ndiff::Tape& tape, const SegmentationExample& example,
                                   TrainContext& ctx) const = 0;

  virtual DecodeResult decode(const std::u32string& surface, int beam_width) const = 0;
  Morphemes predict(const std::u32string& surface, int beam_width) const;

  // Model-specific values stored in the model file header.
  virtual nlohmann::json extra_metadata() const { return nlohmann::json::object(); }
  virtual void load_extra_metadata(const nlohmann::json& /*doc*/) {}

 protected:
  Model(Vocabulary vocab, TrainConfig config)
      : vocab_(std::move(vocab)), config_(std::move(config)) {}

  Vocabulary vocab_;
  TrainConfig config_;
  ndiff::ParameterSet params_;
};

// Builds an untrained model of config.kind, initialized from config.seed.
std::unique_ptr<Model> create_model(const TrainConfig& config, const Vocabulary& vocab);

std::vector<Morphemes> predict_all(const Model& model, const std::vector<std::u32string>& words,
                                   int beam_width);

// ---------------------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;  // one-based
  double train_loss = 0;
  double dev_accuracy = 0;
  double best_so_far = 0;
  bool has_p_expert = false;
  double p_expert = 0;

  nlohmann::json to_json() const;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_accuracy = 0;

  // One JSON object per line.
  std::string to_jsonl() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Minibatch training with early stopping on dev word accuracy. The
// parameters of the best dev epoch are restored before returning. Throws
// InvalidArgument for an empty train or dev corpus.
TrainingLog train_model(Model& model, const Corpus& train, const Corpus& dev,
                        const EpochCallback& on_epoch = {});

double dev_accuracy(const Model& model, const Corpus& dev, int beam_width);

}  // namespace canseg

#endif  // CANSEG_MODEL_H_
