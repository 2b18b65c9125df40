#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "zsmstm/nn/tensor.hpp"

namespace zsmstm::nn {

// Bias-corrected Adam over a fixed parameter group. Moments are keyed by
// position, so the group passed to each step must be the one used at init.
template <typename T>
struct AdamState {
  double beta1 = 0.95;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;

  void init(const std::vector<Param<T>*>& group) {
    m.clear();
    v.clear();
    for (const Param<T>* p : group) {
      m.emplace_back(p->value.rows, p->value.cols);
      v.emplace_back(p->value.rows, p->value.cols);
    }
  }
};

template <typename T>
void adam_step(const std::vector<Param<T>*>& group, AdamState<T>& state,
               double lr) {
  if (state.m.size() != group.size())
    throw_data("nn::ShapeMismatch", "optimizer state does not match group");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t pi = 0; pi < group.size(); ++pi) {
    Param<T>& p = *group[pi];
    if (state.m[pi].size() != p.value.size())
      throw_data("nn::ShapeMismatch", "optimizer moments mismatch: " + p.name);
    T* val = p.value.ptr();
    const T* grad = p.grad.ptr();
    T* mp = state.m[pi].ptr();
    T* vp = state.v[pi].ptr();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      if (!std::isfinite(g))
        throw_numeric("nn::NonFinite", "gradient of " + p.name);
      const double mn = state.beta1 * mp[i] + (1.0 - state.beta1) * g;
      const double vn = state.beta2 * vp[i] + (1.0 - state.beta2) * g * g;
      mp[i] = static_cast<T>(mn);
      vp[i] = static_cast<T>(vn);
      const double mhat = mn / bc1;
      const double vhat = vn / bc2;
      val[i] = static_cast<T>(val[i] - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

struct LrSchedule {
  double base_lr = 1e-5;
  int64_t warmup_steps = 20000;
};

inline double lr_at(int64_t step, const LrSchedule& sched) {
  if (sched.warmup_steps <= 0 || step >= sched.warmup_steps)
    return sched.base_lr;
  return sched.base_lr * static_cast<double>(step) /
         static_cast<double>(sched.warmup_steps);
}

// Euclidean norm over all gradients in the group, for logging.
template <typename T>
double grad_norm(const std::vector<Param<T>*>& group) {
  double sq = 0;
  for (const Param<T>* p : group)
    for (const T& g : p->grad.data) sq += static_cast<double>(g) * g;
  return std::sqrt(sq);
}

}  // namespace zsmstm::nn
