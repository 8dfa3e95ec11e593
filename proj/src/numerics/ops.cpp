#include "xltrade/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace xltrade::numerics {
namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor make_result(const char* op, Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward_fn) {
  for (double v : value) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string(op) + " produced a non-finite value");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool track =
      grad_enabled() && std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

const NodePtr& checked(const Tensor& t) {
  if (!t.defined()) throw ContractError("use of undefined tensor");
  return t.node();
}

template <typename F, typename D>
Tensor unary(const char* op, const Tensor& x, F f, D dfdx) {
  const auto& xn = checked(x);
  std::vector<double> y(xn->value.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xn->value[i]);
  return make_result(op, xn->shape, std::move(y), {xn}, [dfdx](Node& self) {
    Node& in = *self.parents[0];
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
  });
}

// Per-output-element offsets into each operand of a broadcast binary op.
struct Broadcast {
  Shape shape;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
  bool identity = false;  // both operands share the output shape
};

Broadcast plan_broadcast(const Shape& a, const Shape& b) {
  Broadcast plan;
  if (a == b) {
    plan.shape = a;
    plan.identity = true;
    return plan;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank), ea(rank, 1), eb(rank, 1);
  std::copy(a.begin(), a.end(), ea.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), eb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  for (std::size_t d = 0; d < rank; ++d) {
    if (ea[d] != eb[d] && ea[d] != 1 && eb[d] != 1) {
      throw DimensionError("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[d] = std::max(ea[d], eb[d]);
  }
  // Row-major strides, zeroed along stretched axes.
  std::vector<std::size_t> sa(rank), sb(rank);
  std::size_t stride_a = 1, stride_b = 1;
  for (std::size_t d = rank; d-- > 0;) {
    sa[d] = ea[d] == 1 ? 0 : stride_a;
    sb[d] = eb[d] == 1 ? 0 : stride_b;
    stride_a *= ea[d];
    stride_b *= eb[d];
  }
  const std::size_t n = shape_size(out);
  plan.a_index.resize(n);
  plan.b_index.resize(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plan.a_index[i] = oa;
    plan.b_index[i] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out[d]) {
        oa += sa[d];
        ob += sb[d];
        break;
      }
      oa -= sa[d] * (out[d] - 1);
      ob -= sb[d] * (out[d] - 1);
      idx[d] = 0;
    }
  }
  plan.shape = std::move(out);
  return plan;
}

// F: (a, b) -> y;  DA/DB: (a, b, y) -> partial derivative.
template <typename F, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA dfda, DB dfdb) {
  const auto& an = checked(a);
  const auto& bn = checked(b);
  auto plan = std::make_shared<Broadcast>(plan_broadcast(an->shape, bn->shape));
  const std::size_t n = shape_size(plan->shape);
  std::vector<double> y(n);
  if (plan->identity) {
    for (std::size_t i = 0; i < n; ++i) y[i] = f(an->value[i], bn->value[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = f(an->value[plan->a_index[i]], bn->value[plan->b_index[i]]);
  }
  return make_result(op, plan->shape, std::move(y), {an, bn}, [plan, dfda, dfdb](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const std::size_t n = self.value.size();
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ia = plan->identity ? i : plan->a_index[i];
        const std::size_t ib = plan->identity ? i : plan->b_index[i];
        g[ia] += self.grad[i] * dfda(pa.value[ia], pb.value[ib], self.value[i]);
      }
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ia = plan->identity ? i : plan->a_index[i];
        const std::size_t ib = plan->identity ? i : plan->b_index[i];
        g[ib] += self.grad[i] * dfdb(pa.value[ia], pb.value[ib], self.value[i]);
      }
    }
  });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor tanh(const Tensor& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor& x) {
  return unary(
      "gelu", x, [](double v) { return v * normal_cdf(v); },
      [](double v, double) { return normal_cdf(v) + v * normal_pdf(v); });
}

Tensor softplus(const Tensor& x) {
  return unary(
      "softplus", x, [](double v) { return std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0); },
      [](double v, double) { return stable_sigmoid(v); });
}

Tensor abs(const Tensor& x) {
  return unary("abs", x, [](double v) { return std::abs(v); }, [](double v, double) { return v < 0.0 ? -1.0 : 1.0; });
}

Tensor neg(const Tensor& x) {
  return unary("neg", x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("clamp bounds out of order");
  return unary(
      "clamp", x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double q) { return -q / y; });
}

Tensor max_with(const Tensor& a, const Tensor& b) {
  return binary(
      "max_with", a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Tensor min_with(const Tensor& a, const Tensor& b) {
  return binary(
      "min_with", a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Tensor add(const Tensor& a, double b) {
  return unary("add", a, [b](double v) { return v + b; }, [](double, double) { return 1.0; });
}

Tensor mul(const Tensor& a, double b) {
  return unary("mul", a, [b](double v) { return v * b; }, [b](double, double) { return b; });
}

Tensor max_with(const Tensor& a, double b) {
  return unary(
      "max_with", a, [b](double v) { return v >= b ? v : b; }, [b](double v, double) { return v >= b ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& an = checked(a);
  const auto& bn = checked(b);
  if (an->shape.size() != 2 || bn->shape.size() != 2 || an->shape[1] != bn->shape[0]) {
    throw DimensionError("matmul of " + shape_string(an->shape) + " and " + shape_string(bn->shape));
  }
  const std::size_t m = an->shape[0], k = an->shape[1], n = bn->shape[1];
  std::vector<double> y(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = an->value[i * k + p];
      for (std::size_t j = 0; j < n; ++j) y[i * n + j] += av * bn->value[p * n + j];
    }
  }
  return make_result("matmul", {m, n}, std::move(y), {an, bn}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j] * pb.value[p * n + j];
          g[i * k + p] += acc;
        }
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) g[p * n + j] += av * self.grad[i * n + j];
        }
    }
  });
}

Tensor outer(const Tensor& a, const Tensor& b) {
  const auto& an = checked(a);
  const auto& bn = checked(b);
  if (an->shape.size() != 1 || bn->shape.size() != 1) {
    throw DimensionError("outer of " + shape_string(an->shape) + " and " + shape_string(bn->shape));
  }
  return mul(reshape(a, {an->shape[0], 1}), reshape(b, {1, bn->shape[0]}));
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const auto& xn = checked(x);
  const auto& wn = checked(weight);
  if (wn->shape.size() != 2 || xn->shape.empty() || xn->shape.size() > 2 || xn->shape.back() != wn->shape[1]) {
    throw DimensionError("linear of " + shape_string(xn->shape) + " with weight " + shape_string(wn->shape));
  }
  const std::size_t out = wn->shape[0], in = wn->shape[1];
  const std::size_t rows = xn->shape.size() == 2 ? xn->shape[0] : 1;
  NodePtr bn;
  if (bias.defined()) {
    bn = bias.node();
    if (bn->shape != Shape{out}) throw DimensionError("linear bias shape " + shape_string(bn->shape));
  }
  std::vector<double> y(rows * out);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xn->value.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = wn->value.data() + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xr[i];
      y[r * out + o] = bn ? acc + bn->value[o] : acc;
    }
  }
  Shape shape = xn->shape.size() == 2 ? Shape{rows, out} : Shape{out};
  std::vector<NodePtr> parents{xn, wn};
  if (bn) parents.push_back(bn);
  return make_result("linear", std::move(shape), std::move(y), std::move(parents), [rows, out, in](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    if (px.requires_grad) {
      auto& g = px.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < out; ++o) {
          const double go = self.grad[r * out + o];
          const double* wo = pw.value.data() + o * in;
          double* gr = g.data() + r * in;
          for (std::size_t i = 0; i < in; ++i) gr[i] += go * wo[i];
        }
    }
    if (pw.requires_grad) {
      auto& g = pw.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < out; ++o) {
          const double go = self.grad[r * out + o];
          const double* xr = px.value.data() + r * in;
          double* go_row = g.data() + o * in;
          for (std::size_t i = 0; i < in; ++i) go_row[i] += go * xr[i];
        }
    }
    if (self.parents.size() == 3 && self.parents[2]->requires_grad) {
      auto& g = self.parents[2]->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < out; ++o) g[o] += self.grad[r * out + o];
    }
  });
}

Tensor sum(const Tensor& x) {
  const auto& xn = checked(x);
  double acc = 0.0;
  for (double v : xn->value) acc += v;
  return make_result("sum", {}, {acc}, {xn}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const auto n = checked(x)->value.size();
  if (n == 0) throw DomainError("mean of empty tensor");
  return mul(sum(x), 1.0 / static_cast<double>(n));
}

Tensor sum_last(const Tensor& x) {
  const auto& xn = checked(x);
  if (xn->shape.empty()) throw DimensionError("sum_last on a scalar");
  const std::size_t inner = xn->shape.back();
  const std::size_t outer = inner == 0 ? shape_size(Shape(xn->shape.begin(), xn->shape.end() - 1)) : xn->value.size() / inner;
  std::vector<double> y(outer, 0.0);
  for (std::size_t r = 0; r < outer; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < inner; ++i) acc += xn->value[r * inner + i];
    y[r] = acc;
  }
  Shape shape(xn->shape.begin(), xn->shape.end() - 1);
  return make_result("sum_last", std::move(shape), std::move(y), {xn}, [outer, inner](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < outer; ++r)
      for (std::size_t i = 0; i < inner; ++i) g[r * inner + i] += self.grad[r];
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = checked(parts[0])->shape;
  if (first.empty()) throw DimensionError("concat of scalars");
  const Shape lead(first.begin(), first.end() - 1);
  const std::size_t rows = shape_size(lead);
  std::vector<NodePtr> nodes;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto& n = checked(p);
    if (n->shape.size() != first.size() || !std::equal(lead.begin(), lead.end(), n->shape.begin())) {
      throw DimensionError("concat of " + shape_string(first) + " with " + shape_string(n->shape));
    }
    nodes.push_back(n);
    widths.push_back(n->shape.back());
    total += n->shape.back();
  }
  std::vector<double> y(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(nodes[k]->value.data() + r * widths[k], widths[k], y.data() + r * total + offset);
    offset += widths[k];
  }
  Shape shape = lead;
  shape.push_back(total);
  return make_result("concat", std::move(shape), std::move(y), std::move(nodes), [rows, total, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t i = 0; i < widths[k]; ++i) g[r * widths[k] + i] += self.grad[r * total + offset + i];
      }
      offset += widths[k];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  const auto& xn = checked(x);
  if (shape_size(shape) != xn->value.size()) {
    throw DimensionError("reshape " + shape_string(xn->shape) + " to " + shape_string(shape));
  }
  return make_result("reshape", std::move(shape), xn->value, {xn}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto& xn = checked(x);
  if (xn->shape.empty() || xn->shape.back() == 0) throw DomainError("layernorm over a zero-length axis");
  const std::size_t width = xn->shape.back();
  const std::size_t rows = xn->value.size() / width;
  NodePtr gn = gamma.defined() ? gamma.node() : nullptr;
  NodePtr bn = beta.defined() ? beta.node() : nullptr;
  if ((gn && gn->shape != Shape{width}) || (bn && bn->shape != Shape{width})) {
    throw DimensionError("layernorm affine parameters must have shape [" + std::to_string(width) + "]");
  }

  auto xhat = std::make_shared<std::vector<double>>(xn->value.size());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> y(xn->value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xn->value.data() + r * width;
    double mu = 0.0;
    for (std::size_t i = 0; i < width; ++i) mu += xr[i];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t i = 0; i < width; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(width);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t i = 0; i < width; ++i) {
      const double h = (xr[i] - mu) * rs;
      (*xhat)[r * width + i] = h;
      double v = gn ? h * gn->value[i] : h;
      y[r * width + i] = bn ? v + bn->value[i] : v;
    }
  }

  std::vector<NodePtr> parents{xn};
  if (gn) parents.push_back(gn);
  if (bn) parents.push_back(bn);
  const bool has_gamma = gn != nullptr;
  const bool has_beta = bn != nullptr;
  return make_result("layernorm", xn->shape, std::move(y), std::move(parents),
                     [rows, width, xhat, rstd, has_gamma, has_beta](Node& self) {
                       Node& px = *self.parents[0];
                       Node* pg = has_gamma ? self.parents[1].get() : nullptr;
                       Node* pb = has_beta ? self.parents[has_gamma ? 2 : 1].get() : nullptr;
                       std::vector<double> dy(width);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* gr = self.grad.data() + r * width;
                         const double* hr = xhat->data() + r * width;
                         if (px.requires_grad) {
                           double mean_dy = 0.0, mean_dyh = 0.0;
                           for (std::size_t i = 0; i < width; ++i) {
                             dy[i] = pg ? gr[i] * pg->value[i] : gr[i];
                             mean_dy += dy[i];
                             mean_dyh += dy[i] * hr[i];
                           }
                           mean_dy /= static_cast<double>(width);
                           mean_dyh /= static_cast<double>(width);
                           auto& g = px.grad_buffer();
                           for (std::size_t i = 0; i < width; ++i)
                             g[r * width + i] += (*rstd)[r] * (dy[i] - mean_dy - hr[i] * mean_dyh);
                         }
                         if (pg && pg->requires_grad) {
                           auto& g = pg->grad_buffer();
                           for (std::size_t i = 0; i < width; ++i) g[i] += gr[i] * hr[i];
                         }
                         if (pb && pb->requires_grad) {
                           auto& g = pb->grad_buffer();
                           for (std::size_t i = 0; i < width; ++i) g[i] += gr[i];
                         }
                       }
                     });
}

}  // namespace xltrade::numerics
