#include "code2seq/optimizer.hpp"

#include <cmath>

namespace code2seq {

void nesterov_update(Parameter& param, double lr, double mu) {
  auto theta = param.value.data();
  auto v = param.momentum.data();
  const auto g = param.gradient.data();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double step = lr * g[i];
    v[i] = mu * v[i] - step;
    theta[i] += mu * v[i] - step;
  }
}

void zero_gradients(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

double clip_gradients(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->gradient.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      for (double& g : p->gradient.data()) g *= s;
    }
  }
  return norm;
}

}  // namespace code2seq
