#pragma once

#include <functional>
#include <vector>

#include "csfiqa/tensor.hpp"

namespace csfiqa {

// Compares reverse-mode gradients of a scalar-valued graph against central
// finite differences. `f` must rebuild the graph on every call (parameters are
// perturbed in place between evaluations). Returns the max over parameters of
// ||analytic - cd||_2 / max(||analytic||_2, ||cd||_2, 1e-8), aggregating each
// parameter's entries so isolated near-zero gradient entries do not amplify
// finite-difference roundoff.
double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double h = 1e-5);

}  // namespace csfiqa
