#include "xltrade/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace xltrade::numerics {
namespace {

thread_local bool g_grad_enabled = true;

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteError("tensor construction with non-finite value");
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double>& detail::Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  require_finite(values);
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({}, {value}, requires_grad); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return values().size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw DimensionError("axis out of range for shape " + shape_string(s));
  return s[axis];
}

std::span<const double> Tensor::values() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_) throw ContractError("use of undefined tensor");
  node_->grad.assign(node_->value.size(), 0.0);
}

std::span<double> Tensor::mutable_values() {
  if (!node_) throw ContractError("use of undefined tensor");
  if (!node_->is_leaf()) throw ContractError("in-place mutation of a recorded op result");
  return node_->value;
}

std::span<double> Tensor::mutable_grad() {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  return node_->grad;
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

void Tensor::backward() const {
  if (!node_) throw ContractError("backward on undefined tensor");
  if (node_->value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_string(node_->shape));
  }
  if (!std::isfinite(node_->value[0])) throw NonFiniteError("backward on non-finite loss");

  // Iterative post-order DFS; parents are visited in recorded order so the
  // traversal (and hence accumulation order) is deterministic.
  std::vector<detail::Node*> order;
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  if (!node_->requires_grad) return;
  if (node_->is_leaf()) {
    node_->grad_buffer()[0] += 1.0;
    return;
  }
  node_->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->is_leaf() && !n->grad.empty()) n->backward_fn(*n);
  }
  for (detail::Node* n : order) {
    if (n->is_leaf()) continue;
    n->grad.clear();
    n->grad.shrink_to_fit();
    n->parents.clear();
    n->backward_fn = nullptr;
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

}  // namespace xltrade::numerics
