#ifndef CANSEG_NDIFF_OPTIM_H_
#define CANSEG_NDIFF_OPTIM_H_

#include <cstdint>
#include <variant>
#include <vector>

#include "canseg/ndiff/graph.h"

namespace canseg::ndiff {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdadeltaOptions {
  double learning_rate = 1.0;
  double rho = 0.95;
  double epsilon = 1e-6;
};

using OptimizerOptions = std::variant<AdamOptions, AdadeltaOptions>;

// Adam (bias-corrected moments) or Adadelta (Zeiler 2012, with the update
// scaled by a learning rate). Accumulators mirror the parameter shapes.
class Optimizer {
 public:
  Optimizer(const ParameterSet& params, OptimizerOptions options);

  // Applies one update from the current gradients. Throws Error on a
  // non-finite gradient, leaving the parameters untouched.
  void step(ParameterSet& params);

  int64_t step_count() const { return steps_; }
  const OptimizerOptions& options() const { return options_; }
  const std::vector<Tensor>& first_accumulators() const { return acc1_; }
  const std::vector<Tensor>& second_accumulators() const { return acc2_; }

 private:
  OptimizerOptions options_;
  std::vector<Tensor> acc1_;  // Adam m / Adadelta E[g^2]
  std::vector<Tensor> acc2_;  // Adam v / Adadelta E[dx^2]
  int64_t steps_ = 0;
};

}  // namespace canseg::ndiff

#endif  // CANSEG_NDIFF_OPTIM_H_
