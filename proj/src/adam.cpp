#include "ctrforge/adam.hpp"

#include <cmath>

#include "ctrforge/errors.hpp"

namespace ctrforge {

void Adam::step(ParamMap& params, const GradMap& grads) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    auto pit = params.find(name);
    contract(pit != params.end(), "adam_step: gradient for unknown parameter " + name);
    Tensor& p = pit->second;
    contract(p.same_shape(g), "adam_step: shape mismatch for " + name);

    auto sit = slots_.find(name);
    if (sit == slots_.end()) {
      Slot s{Tensor::zeros(p.shape()), Tensor::zeros(p.shape())};
      sit = slots_.emplace(name, std::move(s)).first;
    }
    Tensor& m = sit->second.m;
    Tensor& v = sit->second.v;
    contract(m.same_shape(p), "adam_step: stale state shape for " + name);

    for (int64_t i = 0; i < p.size(); ++i) {
      double gi = static_cast<double>(g.data()[i]);
      double mi = cfg_.beta1 * static_cast<double>(m.data()[i]) + (1.0 - cfg_.beta1) * gi;
      double vi = cfg_.beta2 * static_cast<double>(v.data()[i]) + (1.0 - cfg_.beta2) * gi * gi;
      m.data()[i] = static_cast<float>(mi);
      v.data()[i] = static_cast<float>(vi);
      double update = cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
      p.data()[i] = static_cast<float>(static_cast<double>(p.data()[i]) - update);
    }
  }
}

}  // namespace ctrforge
