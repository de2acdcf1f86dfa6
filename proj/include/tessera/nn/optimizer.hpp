#pragma once

#include <vector>

#include "tessera/nn/tensor.hpp"

namespace tessera::nn {

enum class Scheme { Sgd, Adam };

struct OptimizerConfig {
  Scheme scheme = Scheme::Adam;
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clipping threshold; 0 disables clipping.
  double clip_norm = 5.0;
};

/// First-order update over every parameter of a set. step() applies the
/// accumulated gradients and then zeroes them.
class Optimizer {
 public:
  Optimizer(ParameterSet& params, OptimizerConfig config);

  void step();
  std::size_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  ParameterSet& params_;
  OptimizerConfig config_;
  std::vector<Parameter*> order_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace tessera::nn
