#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xltrade/numerics/errors.hpp"

namespace xltrade::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's grad into its parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  std::vector<double>& grad_buffer();
};

}  // namespace detail

/// Handle to a node of the autodiff graph.
///
/// Tensors are cheap to copy (shared ownership of the node). Values of a
/// recorded op result are immutable; only leaves may be mutated in place, which
/// is what optimizers and checkpoint loading do between graph constructions.
/// Construction rejects NaN and infinity.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> values() const;
  double item() const;
  double operator[](std::size_t flat_index) const { return values()[flat_index]; }

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  /// Allocates (or resets) the gradient buffer to zeros.
  void zero_grad();

  std::span<double> mutable_values();
  std::span<double> mutable_grad();

  /// Reverse-mode pass from this scalar. Accumulates into leaf grads and frees
  /// the recorded graph afterwards.
  void backward() const;

  /// Constant copy of the values, cut from the graph.
  Tensor detach() const;

  const detail::Node* id() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedTensor>;

}  // namespace xltrade::numerics
