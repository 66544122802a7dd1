#include <cmath>

#include "dsdst/trainer.h"

namespace dsdst::trainer {

Adam::Adam(const model::ParameterSet& params, const TrainConfig& config)
    : beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      epsilon_(config.adam_epsilon),
      weight_decay_(config.weight_decay),
      m_(params.zeros_like()),
      v_(params.zeros_like()) {}

void Adam::step(model::ParameterSet& params, const model::ParameterSet& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = grads[i].array();
    auto m = m_[i].array();
    auto v = v_[i].array();
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.square();
    auto p = params[i].array();
    auto update = (m / c1) / ((v / c2).sqrt() + epsilon_);
    if (params.decays(i)) {
      p -= lr * (update + weight_decay_ * p);
    } else {
      p -= lr * update;
    }
  }
  params.round_to_float();
}

double clip_global_norm(model::ParameterSet& grads, double max_norm) {
  const double norm = grads.norm();
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] *= scale;
  }
  return norm;
}

}  // namespace dsdst::trainer
