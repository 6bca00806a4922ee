#pragma once

#include <vector>

#include "dwsnn/tensor.hpp"

namespace dwsnn {

// Adam with bias correction (defaults beta1 0.9, beta2 0.999, eps 1e-8).
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Tensor> m;  // first moments, shaped like the parameters
  std::vector<Tensor> v;  // second moments

  static AdamState init(const std::vector<Tensor*>& params);
};

// One update over all parameters; grads aligns with params. A zero gradient
// still advances the step counter.
void adam_update(const std::vector<Tensor*>& params,
                 const std::vector<Tensor>& grads, AdamState& state,
                 double learning_rate);

}  // namespace dwsnn
