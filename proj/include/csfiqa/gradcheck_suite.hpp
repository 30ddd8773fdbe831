#pragma once

#include <iosfwd>

#include "csfiqa/config.hpp"

namespace csfiqa {

// Runs the finite-difference battery: every differentiable op on randomized
// small tensors, then the full total loss of a batch-4 model built from
// cfg.model. Prints one line per check; returns true iff every max relative
// error is <= tol.
bool run_gradcheck_suite(const RunConfig& cfg, std::ostream& os, double tol = 1e-4,
                         double h = 1e-5);

}  // namespace csfiqa
