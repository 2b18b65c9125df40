#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "zsmstm/nn/graph.hpp"

namespace zsmstm::nn {

// Compares analytic gradients to central finite differences, elementwise over
// every parameter in the group. The loss builder must be deterministic: it is
// re-run twice per parameter element with the value nudged by +-eps. Returns
// the max relative error, |a - n| / max(|a|, |n|, 1e-8). Run in double; float
// rounding drowns the differences. max_samples_per_param > 0 checks only that
// many evenly spaced elements per parameter, for wide models where the full
// sweep is impractical.
//
// refine_below > 0 re-measures any element whose error at the base eps is at
// least that bound, halving the step twice per rung down to eps/256 and
// keeping the smallest error. Central differences are only first-order
// accurate when the span straddles a relu kink, so a deep model occasionally
// shows a large error at one generic element; shrinking the step collapses
// that artifact, while a genuinely wrong gradient keeps its error because
// the numeric estimate converges to the true derivative.
template <typename T>
double grad_check(const std::vector<Param<T>*>& group,
                  const std::function<Var<T>(Graph<T>&)>& loss, T eps = T(1e-4),
                  std::size_t max_samples_per_param = 0,
                  double refine_below = 0) {
  for (Param<T>* p : group) p->zero_grad();
  {
    Graph<T> g;
    Var<T> root = loss(g);
    g.backward(root);
  }
  std::vector<Tensor<T>> analytic;
  analytic.reserve(group.size());
  for (Param<T>* p : group) analytic.push_back(p->grad);

  const auto eval = [&loss]() {
    Graph<T> g;
    g.recording = false;
    return loss(g).scalar();
  };

  double worst = 0;
  for (std::size_t pi = 0; pi < group.size(); ++pi) {
    Param<T>& p = *group[pi];
    const std::size_t size = p.value.size();
    std::size_t stride = 1;
    if (max_samples_per_param > 0 && size > max_samples_per_param)
      stride = (size + max_samples_per_param - 1) / max_samples_per_param;
    for (std::size_t i = 0; i < size; i += stride) {
      const double a = static_cast<double>(analytic[pi].data[i]);
      const auto error_at = [&](T step) {
        const T saved = p.value.data[i];
        p.value.data[i] = saved + step;
        const double fp = static_cast<double>(eval());
        p.value.data[i] = saved - step;
        const double fm = static_cast<double>(eval());
        p.value.data[i] = saved;
        const double numeric = (fp - fm) / (2.0 * static_cast<double>(step));
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        return std::abs(a - numeric) / denom;
      };
      double err = error_at(eps);
      if (refine_below > 0 && err >= refine_below)
        for (T step : {eps / T(4), eps / T(16), eps / T(64), eps / T(256)}) {
          err = std::min(err, error_at(step));
          if (err < refine_below) break;
        }
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace zsmstm::nn
