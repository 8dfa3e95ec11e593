#pragma once

#include <vector>

#include "xltrade/numerics/tensor.hpp"

namespace xltrade::numerics {

// Elementwise unary ops.
Tensor exp(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Exact GeLU, x * Phi(x) with Phi from the error function.
Tensor gelu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor neg(const Tensor& x);
/// Gradient passes where lo <= x <= hi; ties select x.
Tensor clamp(const Tensor& x, double lo, double hi);

// Binary ops broadcast numpy-style (right-aligned, extent 1 stretches).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
/// Elementwise maximum; on ties the gradient goes to `a`.
Tensor max_with(const Tensor& a, const Tensor& b);
/// Elementwise minimum; on ties the gradient goes to `a`.
Tensor min_with(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, double b);
Tensor mul(const Tensor& a, double b);
Tensor max_with(const Tensor& a, double b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator+(const Tensor& a, double b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, double b) { return add(a, -b); }
inline Tensor operator*(const Tensor& a, double b) { return mul(a, b); }
inline Tensor operator*(double a, const Tensor& b) { return mul(b, a); }

// Linear algebra and reductions.

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// [d] x [e] -> [d,e].
Tensor outer(const Tensor& a, const Tensor& b);
/// x W^T + b for x of shape [in] or [B,in], W of shape [out,in], b of shape
/// [out] (may be undefined).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sums over the last axis, dropping it.
Tensor sum_last(const Tensor& x);
/// Concatenates along the last axis; leading extents must agree.
Tensor concat(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& x, Shape shape);
/// Normalizes over the last axis, then applies gamma/beta (either may be
/// undefined). Throws DomainError on a zero-length axis.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

}  // namespace xltrade::numerics
