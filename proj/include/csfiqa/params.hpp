#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "csfiqa/rng.hpp"
#include "csfiqa/tensor.hpp"

namespace csfiqa {

// Named parameter registry. Iteration order (std::map) is the canonical order
// for checkpoints and optimizer traversal, so runs are deterministic.
class ParamStore {
 public:
  // Frozen parameters keep requires_grad = false and are never updated by the
  // optimizer, but they are saved/loaded like any other array.
  Tensor add(const std::string& name, std::vector<std::size_t> shape,
             std::vector<double> data, bool frozen = false);
  Tensor zeros(const std::string& name, std::vector<std::size_t> shape,
               bool frozen = false);
  Tensor full(const std::string& name, std::vector<std::size_t> shape, double value,
              bool frozen = false);
  Tensor trunc_normal(const std::string& name, std::vector<std::size_t> shape,
                      double sigma, Rng& rng, bool frozen = false);

  Tensor get(const std::string& name) const;
  bool frozen(const std::string& name) const { return frozen_.count(name) > 0; }
  const std::map<std::string, Tensor>& all() const { return params_; }

  void zero_grad();
  std::size_t total_elements() const;
  std::vector<Tensor> trainable() const;

 private:
  std::map<std::string, Tensor> params_;
  std::set<std::string> frozen_;
};

// Checkpoint container: a text manifest (embedded run config + per-array name,
// shape, byte offset) followed by raw little-endian float64 data.
void save_checkpoint(const std::string& path, const std::string& config_text,
                     const ParamStore& store);
// Returns the embedded config text; fills arrays into `out` (name -> values).
std::string load_checkpoint(const std::string& path,
                            std::map<std::string, std::pair<std::vector<std::size_t>,
                                                            std::vector<double>>>& out);
// Copies loaded arrays into an already-constructed store; shape mismatches or
// missing names are DataErrors.
void restore_params(ParamStore& store, const std::string& path);

}  // namespace csfiqa
