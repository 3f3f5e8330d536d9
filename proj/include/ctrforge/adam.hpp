#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ctrforge/graph.hpp"
#include "ctrforge/tensor.hpp"

namespace ctrforge {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moment buffers are float32 like the parameters; the
// per-element update itself is computed in double. One shared step counter:
// step() updates every parameter present in `grads`.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  int64_t steps() const { return t_; }

  void step(ParamMap& params, const GradMap& grads);

 private:
  struct Slot {
    Tensor m;
    Tensor v;
  };

  AdamConfig cfg_;
  std::map<std::string, Slot> slots_;
  int64_t t_ = 0;
};

}  // namespace ctrforge
