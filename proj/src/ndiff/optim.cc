#include "canseg/ndiff/optim.h"

#include <cmath>

#include "canseg/errors.h"

namespace canseg::ndiff {

Optimizer::Optimizer(const ParameterSet& params, OptimizerOptions options)
    : options_(options) {
  for (const auto& p : params.all()) {
    acc1_.emplace_back(p->value.shape());
    acc2_.emplace_back(p->value.shape());
  }
}

void Optimizer::step(ParameterSet& params) {
  const auto& all = params.all();
  if (all.size() != acc1_.size()) throw ShapeError("optimizer built for another parameter set");
  for (size_t k = 0; k < all.size(); ++k) {
    if (!all[k]->grad.same_shape(acc1_[k]))
      throw ShapeError("optimizer accumulator shape mismatch for " + all[k]->name);
    if (!all[k]->grad.flat().allFinite())
      throw Error("non-finite gradient in parameter " + all[k]->name);
  }
  ++steps_;
  if (const auto* adam = std::get_if<AdamOptions>(&options_)) {
    const double bc1 = 1.0 - std::pow(adam->beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(adam->beta2, static_cast<double>(steps_));
    for (size_t k = 0; k < all.size(); ++k) {
      Parameter& p = *all[k];
      double* m = acc1_[k].data();
      double* v = acc2_[k].data();
      double* w = p.value.data();
      const double* g = p.grad.data();
      for (size_t i = 0; i < p.value.size(); ++i) {
        m[i] = adam->beta1 * m[i] + (1 - adam->beta1) * g[i];
        v[i] = adam->beta2 * v[i] + (1 - adam->beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= adam->learning_rate * mhat / (std::sqrt(vhat) + adam->epsilon);
      }
    }
  } else {
    const auto& ad = std::get<AdadeltaOptions>(options_);
    for (size_t k = 0; k < all.size(); ++k) {
      Parameter& p = *all[k];
      double* eg = acc1_[k].data();
      double* edx = acc2_[k].data();
      double* w = p.value.data();
      const double* g = p.grad.data();
      for (size_t i = 0; i < p.value.size(); ++i) {
        eg[i] = ad.rho * eg[i] + (1 - ad.rho) * g[i] * g[i];
        const double dx = -std::sqrt(edx[i] + ad.epsilon) / std::sqrt(eg[i] + ad.epsilon) * g[i];
        edx[i] = ad.rho * edx[i] + (1 - ad.rho) * dx * dx;
        w[i] += ad.learning_rate * dx;
      }
    }
  }
}

}  // namespace canseg::ndiff
