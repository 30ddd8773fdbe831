#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "csfiqa/errors.hpp"

namespace csfiqa {

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One value in the computation graph. Values are immutable after the forward
// op that created them; parents + backward_fn form the implicit tape.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized lazily by ensure_grad()
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::size_t numel() const { return data.size(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() { grad.assign(data.size(), 0.0); }
};

// Dense float64 tensor with reverse-mode autodiff. Thin shared handle; copying
// a Tensor aliases the underlying node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);
  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  // 1-D convenience constructor.
  static Tensor vector(std::vector<double> data, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->numel(); }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& mutable_data() { return node_->data; }
  double at(std::size_t i) const { return node_->data[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& mutable_grad() { return node_->grad; }
  void zero_grad() { node_->zero_grad(); }

  // Reverse pass from a scalar root. Visits each reachable node exactly once
  // in reverse topological order.
  void backward() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// Graph-building helper shared by all ops: output requires grad iff any parent
// does, and the tape entry is only recorded in that case.
Tensor make_op(std::vector<std::size_t> shape, std::vector<double> data,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn);

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace csfiqa
