#include "csfiqa/adam.hpp"

#include <cmath>

#include "csfiqa/errors.hpp"

namespace csfiqa {

void Adam::step(ParamStore& store, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, param] : store.all()) {
    if (store.frozen(name)) continue;
    Tensor p = param;
    if (p.grad().size() != p.numel()) continue;  // unused this step
    State& s = state_[name];
    if (s.m.size() != p.numel()) {
      s.m.assign(p.numel(), 0.0);
      s.v.assign(p.numel(), 0.0);
    }
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double g = p.grad()[i];
      if (!std::isfinite(g))
        throw NumericError("adam: non-finite gradient in " + name + "[" +
                           std::to_string(i) + "]");
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      p.mutable_data()[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace csfiqa
