#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "zsmstm/nn/graph.hpp"

namespace zsmstm::train {

using nn::Graph;
using nn::Tensor;
using nn::Var;

// Euclidean norm of each row, rows x 1.
template <typename T>
Var<T> row_norms(Graph<T>& g, Var<T> x) {
  return g.sqrt_(g.row_sum(g.square(x)));
}

// Reconstruction loss: per window, the Euclidean norm of the flattened
// difference between prediction and target; averaged over the batch.
// kind "mse" switches to the plain mean of squared errors.
template <typename T>
Var<T> loss_rec(Graph<T>& g, const std::vector<Var<T>>& preds,
                const std::vector<Tensor<T>>& targets,
                const std::string& kind = "norm") {
  if (preds.empty() || preds.size() != targets.size())
    throw_data("train::ShapeMismatch",
               "reconstruction loss needs matching prediction/target lists");
  std::vector<Var<T>> per_window;
  per_window.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Tensor<T>& t = targets[i];
    if (preds[i].rows() != t.rows || preds[i].cols() != t.cols)
      throw_data("train::ShapeMismatch",
                 "prediction " + std::to_string(preds[i].rows()) + "x" +
                     std::to_string(preds[i].cols()) + " vs target " +
                     std::to_string(t.rows) + "x" + std::to_string(t.cols));
    Var<T> diff = g.sub(preds[i], g.input(t));
    Var<T> sq = g.sum_all(g.square(diff));
    if (kind == "mse")
      per_window.push_back(g.scale(sq, T(1) / static_cast<T>(t.size())));
    else
      per_window.push_back(g.sqrt_(sq));
  }
  if (per_window.size() == 1) return per_window[0];
  return g.mean_all(g.concat_rows(per_window));
}

// Discriminator regression loss: mean over the batch of the Euclidean norm
// of (h_style - prediction). Callers pass detached embeddings so gradients
// reach only the discriminator.
template <typename T>
Var<T> loss_dis(Graph<T>& g, Var<T> h_style_rows, Var<T> pred_rows) {
  if (h_style_rows.rows() != pred_rows.rows() ||
      h_style_rows.cols() != pred_rows.cols())
    throw_data("train::ShapeMismatch",
               "style targets and predictions differ in shape");
  return g.mean_all(row_norms(g, g.sub(h_style_rows, pred_rows)));
}

// Maps per-sample style prediction errors into [0, 1] with running min/max
// statistics (exponential moving average once seeded by the first batch).
struct StyleErrorNormalizer {
  bool fitted = false;
  double lo = 0;
  double hi = 1;
  double momentum = 0.99;

  void update(const std::vector<double>& errors) {
    if (errors.empty()) return;
    const auto [mn, mx] = std::minmax_element(errors.begin(), errors.end());
    if (!fitted) {
      lo = *mn;
      hi = *mx;
      fitted = true;
    } else {
      lo = momentum * lo + (1 - momentum) * *mn;
      hi = momentum * hi + (1 - momentum) * *mx;
    }
    if (hi < lo) std::swap(hi, lo);
  }

  double span() const { return std::max(hi - lo, 1e-12); }
};

// x clipped to [0, 1] built from relus so the tape can differentiate it;
// the gradient is 1 inside the interval and 0 outside.
template <typename T>
Var<T> clamp01(Graph<T>& g, Var<T> x) {
  Tensor<T> ones(x.rows(), x.cols(), T(1));
  return g.sub(g.relu_(x), g.relu_(g.sub(x, g.input(ones))));
}

// Fader adversarial loss: normalized per-sample style errors should reach 1
// (discriminator maximally wrong), so the loss is mean |1 - normalized error|.
// Callers freeze discriminator leaves while building err_rows' graph.
template <typename T>
Var<T> loss_adv(Graph<T>& g, Var<T> err_rows,
                const StyleErrorNormalizer& normalizer) {
  if (!normalizer.fitted)
    throw_data("train::UnfittedNormalizer",
               "style error normalizer has not seen a batch");
  Tensor<T> lo(err_rows.rows(), err_rows.cols(),
               static_cast<T>(normalizer.lo));
  Var<T> scaled = g.scale(g.sub(err_rows, g.input(lo)),
                          static_cast<T>(1.0 / normalizer.span()));
  Var<T> e_tilde = clamp01(g, scaled);
  Tensor<T> ones(err_rows.rows(), err_rows.cols(), T(1));
  return g.mean_all(g.abs_(g.sub(g.input(ones), e_tilde)));
}

// L_total = L_rec + lambda * L_adv; at lambda = 0 it is L_rec itself.
template <typename T>
Var<T> loss_total(Graph<T>& g, Var<T> l_rec, Var<T> l_adv, double lambda) {
  if (lambda < 0)
    throw_data("train::ShapeMismatch", "lambda must be non-negative");
  if (lambda == 0) return l_rec;
  return g.add(l_rec, g.scale(l_adv, static_cast<T>(lambda)));
}

inline double lambda_at(int64_t step, double lambda_step, double lambda_cap) {
  return std::min(lambda_step * static_cast<double>(step), lambda_cap);
}

}  // namespace zsmstm::train
