#include "xltrade/numerics/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace xltrade::numerics {
namespace {

void check_step(double h) {
  if (!(h > 0.0 && h <= 1e-3)) throw ContractError("finite-difference step must lie in (0, 1e-3]");
}

double scalar_of(const Tensor& t) {
  if (t.size() != 1) throw ContractError("gradient_check needs a scalar-valued function");
  return t.item();
}

}  // namespace

double gradient_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  check_step(h);
  Tensor leaf(x.shape(), std::vector<double>(x.values().begin(), x.values().end()), true);
  std::span<Tensor> one(&leaf, 1);
  return gradient_check([&] { return f(leaf); }, one, h);
}

double gradient_check(const std::function<Tensor()>& loss, std::span<Tensor> params, double h) {
  check_step(h);
  for (auto& p : params) p.zero_grad();
  Tensor out = loss();
  scalar_of(out);
  out.backward();

  double worst = 0.0;
  NoGradGuard no_grad;
  for (auto& p : params) {
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = scalar_of(loss());
      values[i] = saved - h;
      const double down = scalar_of(loss());
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
    }
  }
  return worst;
}

}  // namespace xltrade::numerics
