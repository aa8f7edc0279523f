// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#include "stbert/trainer/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace stbert::trainer {

using num::Tensor;

template <typename T>
AdamState<T> adam_init(const model::Params<T>& params) {
  return {model::zeros_like(params), model::zeros_like(params), 0};
}

template <typename T>
void adam_update(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v, std::uint64_t t, double lr,
                 const AdamHyper& h) {
  if (grad.shape() != param.shape() || m.shape() != param.shape() || v.shape() != param.shape()) {
    throw std::invalid_argument("adam: shape mismatch " + num::shape_str(param.shape()) + " vs gradient " +
                                num::shape_str(grad.shape()));
  }
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  auto p = param.values();
  auto g = grad.values();
  auto mm = m.values();
  auto vv = v.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = h.beta1 * static_cast<double>(mm[i]) + (1.0 - h.beta1) * gi;
    const double vi = h.beta2 * static_cast<double>(vv[i]) + (1.0 - h.beta2) * gi * gi;
    mm[i] = static_cast<T>(mi);
    vv[i] = static_cast<T>(vi);
    const double mhat = mi / c1;
    const double vhat = vi / c2;
    p[i] = static_cast<T>(static_cast<double>(p[i]) - lr * mhat / (std::sqrt(vhat) + h.eps));
  }
}

template <typename T>
void adam_step(model::Params<T>& params, const model::Params<T>& grads, AdamState<T>& state, double lr,
               const AdamHyper& hyper) {
  std::vector<const Tensor<T>*> g;
  std::vector<Tensor<T>*> m, v;
  grads.visit([&](const std::string&, const Tensor<T>& t) { g.push_back(&t); });
  state.m.visit([&](const std::string&, Tensor<T>& t) { m.push_back(&t); });
  state.v.visit([&](const std::string&, Tensor<T>& t) { v.push_back(&t); });
  std::size_t count = 0;
  params.visit([&](const std::string&, Tensor<T>&) { ++count; });
  if (g.size() != count || m.size() != count || v.size() != count) {
    throw std::invalid_argument("adam: parameter set layout mismatch");
  }
  const std::uint64_t t = state.step + 1;
  std::size_t i = 0;
  params.visit([&](const std::string&, Tensor<T>& p) {
    adam_update(p, *g[i], *m[i], *v[i], t, lr, hyper);
    ++i;
  });
  state.step = t;
}

template <typename T>
double clip_grad_norm(model::Params<T>& grads, double max_norm) {
  double sq = 0.0;
  grads.visit([&](const std::string&, const Tensor<T>& t) {
    for (T x : t.values()) sq += static_cast<double>(x) * static_cast<double>(x);
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto s = static_cast<T>(max_norm / norm);
    grads.visit([&](const std::string&, Tensor<T>& t) {
      for (T& x : t.values()) x *= s;
    });
  }
  return norm;
}

template AdamState<float> adam_init(const model::Params<float>&);
template AdamState<double> adam_init(const model::Params<double>&);
template void adam_update(Tensor<float>&, const Tensor<float>&, Tensor<float>&, Tensor<float>&, std::uint64_t, double,
                          const AdamHyper&);
template void adam_update(Tensor<double>&, const Tensor<double>&, Tensor<double>&, Tensor<double>&, std::uint64_t,
                          double, const AdamHyper&);
template void adam_step(model::Params<float>&, const model::Params<float>&, AdamState<float>&, double,
                        const AdamHyper&);
template void adam_step(model::Params<double>&, const model::Params<double>&, AdamState<double>&, double,
                        const AdamHyper&);
template double clip_grad_norm(model::Params<float>&, double);
template double clip_grad_norm(model::Params<double>&, double);

}  // namespace stbert::trainer
