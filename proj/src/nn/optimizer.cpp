#include "tessera/nn/optimizer.hpp"

#include <cmath>

namespace tessera::nn {

Optimizer::Optimizer(ParameterSet& params, OptimizerConfig config)
    : params_(params), config_(config), order_(params.all()) {
  if (config_.scheme == Scheme::Adam) {
    for (const Parameter* p : order_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
}

void Optimizer::step() {
  ++steps_;
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Parameter* p : order_) {
      for (double g : p->grad.data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }

  const double lr = config_.learning_rate;
  if (config_.scheme == Scheme::Sgd) {
    for (Parameter* p : order_) {
      auto value = p->value.data();
      const auto grad = p->grad.data();
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * scale * grad[i];
    }
  } else {
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t k = 0; k < order_.size(); ++k) {
      auto value = order_[k]->value.data();
      const auto grad = order_[k]->grad.data();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i] * scale;
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        value[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
    }
  }
  params_.zero_grad();
}

}  // namespace tessera::nn
