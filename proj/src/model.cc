#include "canseg/model.h"

#include <numeric>
#include <sstream>

#include "canseg/attention_model.h"
#include "canseg/errors.h"
#include "canseg/ndiff/ops.h"
#include "canseg/ndiff/optim.h"
#include "canseg/transducer.h"

namespace canseg {

Morphemes Model::predict(const std::u32string& surface, int beam_width) const {
  return split_prediction(decode(surface, beam_width).output);
}

std::unique_ptr<Model> create_model(const TrainConfig& config, const Vocabulary& vocab) {
  switch (config.kind) {
    case ModelKind::kSeq2Seq:
    case ModelKind::kPGNet:
      return std::make_unique<AttentionModel>(vocab, config);
    case ModelKind::kTransducer:
      return std::make_unique<TransducerModel>(vocab, config);
  }
  throw InvalidArgument("unknown model kind");
}

std::vector<Morphemes> predict_all(const Model& model, const std::vector<std::u32string>& words,
                                   int beam_width) {
  std::vector<Morphemes> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(model.predict(w, beam_width));
  return out;
}

double dev_accuracy(const Model& model, const Corpus& dev, int beam_width) {
  if (dev.empty()) throw InvalidArgument("empty development corpus");
  size_t correct = 0;
  for (const auto& ex : dev.examples)
    correct += model.predict(ex.surface, beam_width) == ex.morphemes;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(dev.size());
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json doc = {{"epoch", epoch},
                        {"train_loss", train_loss},
                        {"dev_accuracy", dev_accuracy},
                        {"best_so_far", best_so_far}};
  if (has_p_expert) doc["p_expert"] = p_expert;
  return doc;
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) out += e.to_json().dump() + "\n";
  return out;
}

namespace {

ndiff::OptimizerOptions optimizer_options(const TrainConfig& c) {
  if (c.optimizer == OptimizerKind::kAdam)
    return ndiff::AdamOptions{c.learning_rate, c.adam_beta1, c.adam_beta2, c.adam_epsilon};
  return ndiff::AdadeltaOptions{c.adadelta_uses_learning_rate ? c.learning_rate : 1.0,
                                c.adadelta_rho, c.adadelta_epsilon};
}

}  // namespace

TrainingLog train_model(Model& model, const Corpus& train, const Corpus& dev,
                        const EpochCallback& on_epoch) {
  if (train.empty()) throw InvalidArgument("empty training corpus");
  if (dev.empty()) throw InvalidArgument("empty development corpus");
  const TrainConfig& cfg = model.config();
  model.prepare(train);

  ndiff::ParameterSet& params = model.params();
  ndiff::Optimizer optimizer(params, optimizer_options(cfg));
  Rng root(cfg.seed);
  Rng order_rng = root.fork(1);
  Rng step_rng = root.fork(2);

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainingLog log;
  double best = -1;
  int since_improvement = 0;
  auto best_values = params.snapshot();
  const bool scheduled = model.kind() == ModelKind::kTransducer;
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  ndiff::Tape tape;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(std::span<size_t>(order));
    TrainContext ctx;
    ctx.rng = &step_rng;
    ctx.epoch = epoch;
    ctx.p_expert = scheduled ? expert_probability(epoch, cfg.schedule_k) : 1.0;

    double total_loss = 0;
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(order.size(), start + batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (size_t k = start; k < end; ++k) {
        tape.clear();
        ndiff::Var loss = model.training_loss(tape, train.examples[order[k]], ctx);
        total_loss += loss.value().item();
        tape.backward(ndiff::scale(loss, weight));
      }
      tape.clear();
      params.clip_grad_norm(cfg.clip_norm);
      optimizer.step(params);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = total_loss / static_cast<double>(train.size());
    rec.dev_accuracy = dev_accuracy(model, dev, cfg.dev_beam_width);
    rec.has_p_expert = scheduled;
    rec.p_expert = ctx.p_expert;
    if (rec.dev_accuracy > best) {
      best = rec.dev_accuracy;
      best_values = params.snapshot();
      log.best_epoch = rec.epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    rec.best_so_far = best;
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (cfg.stop_at_perfect_dev && best >= 100.0) break;
    if (since_improvement > 0 && since_improvement >= cfg.patience) break;
  }
  params.restore(best_values);
  log.best_dev_accuracy = std::max(best, 0.0);
  return log;
}

}  // namespace canseg
