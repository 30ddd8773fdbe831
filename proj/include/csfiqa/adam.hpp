#pragma once

#include <map>
#include <string>
#include <vector>

#include "csfiqa/params.hpp"

namespace csfiqa {

// Adam with bias correction; state is keyed by parameter name. Frozen
// parameters are never touched. Throws NumericError (naming the parameter) on
// a non-finite gradient.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store, double lr);

 private:
  struct State {
    std::vector<double> m, v;
  };
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::map<std::string, State> state_;
};

}  // namespace csfiqa
