#include "csfiqa/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace csfiqa {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->data.assign(product(shape), 0.0);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  auto node = std::make_shared<TensorNode>();
  node->data.assign(product(shape), value);
  node->shape = std::move(shape);
  return Tensor(node);
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
  if (product(shape) != data.size())
    throw ShapeError("from_data: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  std::size_t n = data.size();
  return from_data({n}, std::move(data), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
  return from_data({rows, cols}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  if (ndim() == 1) return 1;
  if (ndim() == 2) return node_->shape[0];
  throw ShapeError("rows(): tensor is " + shape_str(node_->shape));
}

std::size_t Tensor::cols() const {
  if (ndim() == 1) return node_->shape[0];
  if (ndim() == 2) return node_->shape[1];
  throw ShapeError("cols(): tensor is " + shape_str(node_->shape));
}

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeError("item(): tensor has " + std::to_string(numel()) + " elements");
  return node_->data[0];
}

void Tensor::backward() const {
  if (numel() != 1) throw ShapeError("backward(): root must be a scalar");

  // Iterative post-order DFS for the topological order.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      TensorNode* child = node->parents[next_child++].get();
      if (child->requires_grad && visited.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) n->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

Tensor make_op(std::vector<std::size_t> shape, std::vector<double> data,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backward_fn) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(data));
  bool needs_grad = false;
  for (const Tensor& p : parents)
    if (p.requires_grad()) needs_grad = true;
  if (needs_grad) {
    out.node()->requires_grad = true;
    for (const Tensor& p : parents) out.node()->parents.push_back(p.node());
    out.node()->backward_fn = std::move(backward_fn);
  }
  return out;
}

}  // namespace csfiqa
