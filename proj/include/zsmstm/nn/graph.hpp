#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "zsmstm/nn/kernels.hpp"
#include "zsmstm/nn/tensor.hpp"

namespace zsmstm::nn {

// Define-by-run reverse-mode tape. Every operation appends a node holding the
// result value and a closure that scatters the node's gradient back to its
// inputs. Nodes live in a deque so pointers stay stable while the tape grows.
// Gradients are allocated lazily the first time something flows into them;
// leaves bound to parameters accumulate straight into Param::grad.

template <typename T>
class Graph;

template <typename T>
struct Node {
  int rows = 0;
  int cols = 0;
  Tensor<T> val_store;
  const T* vptr = nullptr;
  Tensor<T> grad_store;
  T* gptr = nullptr;
  Param<T>* param = nullptr;
  bool requires_grad = false;
  bool grad_live = false;
  std::function<void()> backward;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  const T* val() const { return vptr; }
  T* grad() {
    if (!gptr) {
      if (param) {
        gptr = param->grad.ptr();
      } else {
        grad_store = Tensor<T>(rows, cols);
        gptr = grad_store.ptr();
      }
    }
    grad_live = true;
    return gptr;
  }
};

template <typename T>
struct Var {
  Node<T>* node = nullptr;

  int rows() const { return node->rows; }
  int cols() const { return node->cols; }
  const T* ptr() const { return node->val(); }
  T at(int i, int j) const {
    return node->val()[static_cast<std::size_t>(i) * node->cols + j];
  }
  T scalar() const { return node->val()[0]; }
  bool valid() const { return node != nullptr; }
};

template <typename T>
class Graph {
 public:
  // When false, ops still compute values but record no backward closures, so
  // the tape is usable for inference without gradient bookkeeping.
  bool recording = true;

  // When true, leaf() binds parameters as constants. Lets a sub-network run
  // inside a recorded graph without receiving gradients (fader adversary).
  bool freeze_leaves = false;

  void clear() { nodes_.clear(); }
  std::size_t node_count() const { return nodes_.size(); }

  // Clears gradient state so a second backward pass on the same tape starts
  // clean; closures of the earlier pass stay dormant because nothing marks
  // them live again.
  void reset_grads() {
    for (auto& n : nodes_) {
      if (!n.grad_live) continue;
      if (n.param)
        n.param->grad.zero();
      else
        n.grad_store.zero();
      n.grad_live = false;
    }
  }

  Var<T> leaf(Param<T>& p) {
    if (freeze_leaves) return frozen(p);
    Node<T>* n = make(p.value.rows, p.value.cols, recording);
    n->vptr = p.value.ptr();
    n->param = &p;
    return {n};
  }

  // Parameter applied as a constant: the value participates, no gradient.
  Var<T> frozen(Param<T>& p) {
    Node<T>* n = make(p.value.rows, p.value.cols, false);
    n->vptr = p.value.ptr();
    return {n};
  }

  Var<T> input(const Tensor<T>& t) {
    Node<T>* n = make(t.rows, t.cols, false);
    n->val_store = t;
    n->vptr = n->val_store.ptr();
    return {n};
  }

  Var<T> input(int rows, int cols, const T* data) {
    Node<T>* n = make(rows, cols, false);
    n->val_store = Tensor<T>(rows, cols);
    std::copy(data, data + n->size(), n->val_store.ptr());
    n->vptr = n->val_store.ptr();
    return {n};
  }

  Var<T> detach(Var<T> a) {
    Node<T>* n = make(a.rows(), a.cols(), false);
    n->vptr = a.node->val();  // alias, tape nodes are immutable once built
    return {n};
  }

  Var<T> matmul(Var<T> a, Var<T> b, bool trans_a = false,
                bool trans_b = false) {
    const int m = trans_a ? a.cols() : a.rows();
    const int k = trans_a ? a.rows() : a.cols();
    const int kb = trans_b ? b.cols() : b.rows();
    const int nn = trans_b ? b.rows() : b.cols();
    if (k != kb) throw_data("nn::ShapeMismatch", "matmul inner dims");
    Node<T>* n = alloc(m, nn, a, b);
    kernels::gemm(a.ptr(), trans_a, b.ptr(), trans_b, n->val_store.ptr(), m,
                  nn, k, false);
    if (n->requires_grad) {
      Node<T>* na = a.node;
      Node<T>* nb = b.node;
      n->backward = [n, na, nb, trans_a, trans_b, m, nn, k] {
        const T* dc = n->grad();
        if (na->requires_grad) {
          T* da = na->grad();
          if (!trans_a && !trans_b)
            kernels::gemm(dc, false, nb->val(), true, da, m, k, nn, true);
          else if (!trans_a && trans_b)
            kernels::gemm(dc, false, nb->val(), false, da, m, k, nn, true);
          else if (trans_a && !trans_b)
            kernels::gemm(nb->val(), false, dc, true, da, k, m, nn, true);
          else
            kernels::gemm(nb->val(), true, dc, true, da, k, m, nn, true);
        }
        if (nb->requires_grad) {
          T* db = nb->grad();
          if (!trans_a && !trans_b)
            kernels::gemm(na->val(), true, dc, false, db, k, nn, m, true);
          else if (!trans_a && trans_b)
            kernels::gemm(dc, true, na->val(), false, db, nn, k, m, true);
          else if (trans_a && !trans_b)
            kernels::gemm(na->val(), false, dc, false, db, k, nn, m, true);
          else
            kernels::gemm(dc, true, na->val(), true, db, nn, k, m, true);
        }
      };
    }
    return {n};
  }

  Var<T> add(Var<T> a, Var<T> b) { return ew2(a, b, Ew2::Add); }
  Var<T> sub(Var<T> a, Var<T> b) { return ew2(a, b, Ew2::Sub); }
  Var<T> mul(Var<T> a, Var<T> b) { return ew2(a, b, Ew2::Mul); }

  Var<T> scale(Var<T> a, T s) {
    Node<T>* n = alloc(a.rows(), a.cols(), a);
    const T* x = a.ptr();
    T* y = n->val_store.ptr();
    for (std::size_t i = 0; i < n->size(); ++i) y[i] = x[i] * s;
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na, s] {
        const T* dy = n->grad();
        T* dx = na->grad();
        for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i] * s;
      };
    }
    return {n};
  }

  // Adds a 1 x cols bias row to every row of a.
  Var<T> add_bias(Var<T> a, Var<T> bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols())
      throw_data("nn::ShapeMismatch", "add_bias");
    Node<T>* n = alloc(a.rows(), a.cols(), a, bias);
    const T* x = a.ptr();
    const T* bp = bias.ptr();
    T* y = n->val_store.ptr();
    for (int i = 0; i < n->rows; ++i)
      for (int j = 0; j < n->cols; ++j)
        y[static_cast<std::size_t>(i) * n->cols + j] =
            x[static_cast<std::size_t>(i) * n->cols + j] + bp[j];
    if (n->requires_grad) {
      Node<T>* na = a.node;
      Node<T>* nb = bias.node;
      n->backward = [n, na, nb] {
        const T* dy = n->grad();
        if (na->requires_grad) {
          T* dx = na->grad();
          for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i];
        }
        if (nb->requires_grad) {
          T* db = nb->grad();
          for (int i = 0; i < n->rows; ++i)
            for (int j = 0; j < n->cols; ++j)
              db[j] += dy[static_cast<std::size_t>(i) * n->cols + j];
        }
      };
    }
    return {n};
  }

  Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw_data("nn::ShapeMismatch", "concat_cols of none");
    const int rows = parts[0].rows();
    int cols = 0;
    for (const auto& p : parts) {
      if (p.rows() != rows) throw_data("nn::ShapeMismatch", "concat_cols rows");
      cols += p.cols();
    }
    bool rg = false;
    for (const auto& p : parts) rg = rg || p.node->requires_grad;
    Node<T>* n = make(rows, cols);
    n->requires_grad = recording && rg;
    n->val_store = Tensor<T>(rows, cols);
    n->vptr = n->val_store.ptr();
    T* y = n->val_store.ptr();
    int off = 0;
    for (const auto& p : parts) {
      const T* x = p.ptr();
      for (int i = 0; i < rows; ++i)
        std::copy(x + static_cast<std::size_t>(i) * p.cols(),
                  x + static_cast<std::size_t>(i + 1) * p.cols(),
                  y + static_cast<std::size_t>(i) * cols + off);
      off += p.cols();
    }
    if (n->requires_grad) {
      std::vector<Node<T>*> ins;
      for (const auto& p : parts) ins.push_back(p.node);
      n->backward = [n, ins] {
        const T* dy = n->grad();
        int off2 = 0;
        for (Node<T>* in : ins) {
          if (in->requires_grad) {
            T* dx = in->grad();
            for (int i = 0; i < n->rows; ++i)
              for (int j = 0; j < in->cols; ++j)
                dx[static_cast<std::size_t>(i) * in->cols + j] +=
                    dy[static_cast<std::size_t>(i) * n->cols + off2 + j];
          }
          off2 += in->cols;
        }
      };
    }
    return {n};
  }

  Var<T> concat_cols(Var<T> a, Var<T> b) {
    return concat_cols(std::vector<Var<T>>{a, b});
  }

  Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw_data("nn::ShapeMismatch", "concat_rows of none");
    const int cols = parts[0].cols();
    int rows = 0;
    for (const auto& p : parts) {
      if (p.cols() != cols) throw_data("nn::ShapeMismatch", "concat_rows cols");
      rows += p.rows();
    }
    bool rg = false;
    for (const auto& p : parts) rg = rg || p.node->requires_grad;
    Node<T>* n = make(rows, cols);
    n->requires_grad = recording && rg;
    n->val_store = Tensor<T>(rows, cols);
    n->vptr = n->val_store.ptr();
    T* y = n->val_store.ptr();
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.ptr(), p.ptr() + p.node->size(), y + off);
      off += p.node->size();
    }
    if (n->requires_grad) {
      std::vector<Node<T>*> ins;
      for (const auto& p : parts) ins.push_back(p.node);
      n->backward = [n, ins] {
        const T* dy = n->grad();
        std::size_t off2 = 0;
        for (Node<T>* in : ins) {
          if (in->requires_grad) {
            T* dx = in->grad();
            for (std::size_t i = 0; i < in->size(); ++i) dx[i] += dy[off2 + i];
          }
          off2 += in->size();
        }
      };
    }
    return {n};
  }

  Var<T> concat_rows(Var<T> a, Var<T> b) {
    return concat_rows(std::vector<Var<T>>{a, b});
  }

  Var<T> slice_rows(Var<T> a, int r0, int r1) {
    if (r0 < 0 || r1 > a.rows() || r0 >= r1)
      throw_data("nn::ShapeMismatch", "slice_rows range");
    Node<T>* n = alloc(r1 - r0, a.cols(), a);
    std::copy(a.ptr() + static_cast<std::size_t>(r0) * a.cols(),
              a.ptr() + static_cast<std::size_t>(r1) * a.cols(),
              n->val_store.ptr());
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na, r0] {
        const T* dy = n->grad();
        T* dx = na->grad() + static_cast<std::size_t>(r0) * na->cols;
        for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i];
      };
    }
    return {n};
  }

  Var<T> slice_cols(Var<T> a, int c0, int c1) {
    if (c0 < 0 || c1 > a.cols() || c0 >= c1)
      throw_data("nn::ShapeMismatch", "slice_cols range");
    Node<T>* n = alloc(a.rows(), c1 - c0, a);
    T* y = n->val_store.ptr();
    for (int i = 0; i < n->rows; ++i)
      std::copy(a.ptr() + static_cast<std::size_t>(i) * a.cols() + c0,
                a.ptr() + static_cast<std::size_t>(i) * a.cols() + c1,
                y + static_cast<std::size_t>(i) * n->cols);
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na, c0] {
        const T* dy = n->grad();
        T* dx = na->grad();
        for (int i = 0; i < n->rows; ++i)
          for (int j = 0; j < n->cols; ++j)
            dx[static_cast<std::size_t>(i) * na->cols + c0 + j] +=
                dy[static_cast<std::size_t>(i) * n->cols + j];
      };
    }
    return {n};
  }

  Var<T> reshape(Var<T> a, int rows, int cols) {
    if (static_cast<std::size_t>(rows) * cols != a.node->size())
      throw_data("nn::ShapeMismatch", "reshape element count");
    Node<T>* n = alloc(rows, cols, a);
    std::copy(a.ptr(), a.ptr() + a.node->size(), n->val_store.ptr());
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na] {
        const T* dy = n->grad();
        T* dx = na->grad();
        for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i];
      };
    }
    return {n};
  }

  Var<T> softmax_rows(Var<T> a, bool causal = false) {
    if (causal && a.rows() != a.cols())
      throw_data("nn::ShapeMismatch", "causal softmax needs a square matrix");
    Node<T>* n = alloc(a.rows(), a.cols(), a);
    kernels::softmax_rows(a.ptr(), n->val_store.ptr(), a.rows(), a.cols(),
                          causal);
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na] {
        const T* dy = n->grad();
        const T* y = n->val();
        T* dx = na->grad();
        for (int i = 0; i < n->rows; ++i) {
          const std::size_t o = static_cast<std::size_t>(i) * n->cols;
          T dot = T(0);
          for (int j = 0; j < n->cols; ++j) dot += dy[o + j] * y[o + j];
          for (int j = 0; j < n->cols; ++j)
            dx[o + j] += y[o + j] * (dy[o + j] - dot);
        }
      };
    }
    return {n};
  }

  Var<T> layer_norm_rows(Var<T> a, Var<T> gamma, Var<T> beta, T eps) {
    if (gamma.rows() != 1 || gamma.cols() != a.cols() || beta.rows() != 1 ||
        beta.cols() != a.cols())
      throw_data("nn::ShapeMismatch", "layer_norm affine shape");
    Node<T>* n = alloc(a.rows(), a.cols(), a, gamma.node, beta.node);
    auto mean = std::make_shared<std::vector<T>>(a.rows());
    auto rstd = std::make_shared<std::vector<T>>(a.rows());
    kernels::layer_norm_rows(a.ptr(), gamma.ptr(), beta.ptr(),
                             n->val_store.ptr(), mean->data(), rstd->data(),
                             a.rows(), a.cols(), eps);
    if (n->requires_grad) {
      Node<T>* na = a.node;
      Node<T>* ng = gamma.node;
      Node<T>* nb = beta.node;
      n->backward = [n, na, ng, nb, mean, rstd] {
        const T* dy = n->grad();
        const T* x = na->val();
        const T* g = ng->val();
        const int cols = n->cols;
        for (int i = 0; i < n->rows; ++i) {
          const std::size_t o = static_cast<std::size_t>(i) * cols;
          const T mu = (*mean)[i];
          const T rs = (*rstd)[i];
          if (na->requires_grad) {
            T sum_dg = T(0), sum_dgx = T(0);
            for (int j = 0; j < cols; ++j) {
              const T xh = (x[o + j] - mu) * rs;
              const T dg = dy[o + j] * g[j];
              sum_dg += dg;
              sum_dgx += dg * xh;
            }
            const T inv = T(1) / static_cast<T>(cols);
            T* dx = na->grad();
            for (int j = 0; j < cols; ++j) {
              const T xh = (x[o + j] - mu) * rs;
              const T dg = dy[o + j] * g[j];
              dx[o + j] += rs * (dg - inv * sum_dg - xh * inv * sum_dgx);
            }
          }
          if (ng->requires_grad) {
            T* dgm = ng->grad();
            for (int j = 0; j < cols; ++j)
              dgm[j] += dy[o + j] * (x[o + j] - mu) * rs;
          }
          if (nb->requires_grad) {
            T* dbt = nb->grad();
            for (int j = 0; j < cols; ++j) dbt[j] += dy[o + j];
          }
        }
      };
    }
    return {n};
  }

  Var<T> tanh_(Var<T> a) {
    return unary(a, [](T x) { return std::tanh(x); },
                 [](T, T y) { return T(1) - y * y; });
  }

  Var<T> sigmoid_(Var<T> a) {
    return unary(a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
                 [](T, T y) { return y * (T(1) - y); });
  }

  Var<T> relu_(Var<T> a) {
    return unary(a, [](T x) { return x > T(0) ? x : T(0); },
                 [](T x, T) { return x > T(0) ? T(1) : T(0); });
  }

  Var<T> square(Var<T> a) {
    return unary(a, [](T x) { return x * x; },
                 [](T x, T) { return T(2) * x; });
  }

  // Subgradient 0 at 0 so perfect fits do not blow up the backward pass.
  Var<T> sqrt_(Var<T> a) {
    return unary(a, [](T x) { return std::sqrt(x); },
                 [](T, T y) { return y > T(0) ? T(1) / (T(2) * y) : T(0); });
  }

  Var<T> abs_(Var<T> a) {
    return unary(a, [](T x) { return std::abs(x); }, [](T x, T) {
      return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0));
    });
  }

  // m x n -> m x 1, sum along each row.
  Var<T> row_sum(Var<T> a) {
    Node<T>* n = alloc(a.rows(), 1, a);
    const T* x = a.ptr();
    T* y = n->val_store.ptr();
    for (int i = 0; i < a.rows(); ++i) {
      T s = T(0);
      for (int j = 0; j < a.cols(); ++j)
        s += x[static_cast<std::size_t>(i) * a.cols() + j];
      y[i] = s;
    }
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na] {
        const T* dy = n->grad();
        T* dx = na->grad();
        for (int i = 0; i < na->rows; ++i)
          for (int j = 0; j < na->cols; ++j)
            dx[static_cast<std::size_t>(i) * na->cols + j] += dy[i];
      };
    }
    return {n};
  }

  // m x n -> 1 x n, average over rows.
  Var<T> mean_rows(Var<T> a) {
    Node<T>* n = alloc(1, a.cols(), a);
    const T* x = a.ptr();
    T* y = n->val_store.ptr();
    const T inv = T(1) / static_cast<T>(a.rows());
    for (int j = 0; j < a.cols(); ++j) {
      T s = T(0);
      for (int i = 0; i < a.rows(); ++i)
        s += x[static_cast<std::size_t>(i) * a.cols() + j];
      y[j] = s * inv;
    }
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na, inv] {
        const T* dy = n->grad();
        T* dx = na->grad();
        for (int i = 0; i < na->rows; ++i)
          for (int j = 0; j < na->cols; ++j)
            dx[static_cast<std::size_t>(i) * na->cols + j] += dy[j] * inv;
      };
    }
    return {n};
  }

  // 1 x n -> m x n broadcast copy.
  Var<T> repeat_rows(Var<T> a, int m) {
    if (a.rows() != 1) throw_data("nn::ShapeMismatch", "repeat_rows input");
    Node<T>* n = alloc(m, a.cols(), a);
    T* y = n->val_store.ptr();
    for (int i = 0; i < m; ++i)
      std::copy(a.ptr(), a.ptr() + a.cols(),
                y + static_cast<std::size_t>(i) * a.cols());
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na] {
        const T* dy = n->grad();
        T* dx = na->grad();
        for (int i = 0; i < n->rows; ++i)
          for (int j = 0; j < n->cols; ++j)
            dx[j] += dy[static_cast<std::size_t>(i) * n->cols + j];
      };
    }
    return {n};
  }

  Var<T> sum_all(Var<T> a) {
    Node<T>* n = alloc(1, 1, a);
    const T* x = a.ptr();
    T s = T(0);
    for (std::size_t i = 0; i < a.node->size(); ++i) s += x[i];
    n->val_store.ptr()[0] = s;
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na] {
        const T dy = n->grad()[0];
        T* dx = na->grad();
        for (std::size_t i = 0; i < na->size(); ++i) dx[i] += dy;
      };
    }
    return {n};
  }

  Var<T> mean_all(Var<T> a) {
    return scale(sum_all(a), T(1) / static_cast<T>(a.node->size()));
  }

  void backward(Var<T> root) {
    if (root.node->size() != 1)
      throw_data("nn::ShapeMismatch", "backward needs a scalar root");
    std::size_t root_idx = 0;
    bool found = false;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (&nodes_[i] == root.node) {
        root_idx = i;
        found = true;
        break;
      }
    }
    if (!found) throw_data("nn::ShapeMismatch", "root not on this tape");
    root.node->grad()[0] = T(1);
    for (std::size_t i = root_idx + 1; i-- > 0;) {
      Node<T>& n = nodes_[i];
      if (n.grad_live && n.backward) n.backward();
    }
  }

 private:
  enum class Ew2 { Add, Sub, Mul };

  std::deque<Node<T>> nodes_;

  Node<T>* make(int rows, int cols, bool rg = false) {
    nodes_.emplace_back();
    Node<T>* n = &nodes_.back();
    n->rows = rows;
    n->cols = cols;
    n->requires_grad = rg;
    return n;
  }

  Node<T>* alloc(int rows, int cols, Var<T> a, Node<T>* b = nullptr,
                 Node<T>* c = nullptr) {
    Node<T>* n = make(rows, cols);
    n->requires_grad =
        recording && (a.node->requires_grad || (b && b->requires_grad) ||
                      (c && c->requires_grad));
    n->val_store = Tensor<T>(rows, cols);
    n->vptr = n->val_store.ptr();
    return n;
  }

  Node<T>* alloc(int rows, int cols, Var<T> a, Var<T> b) {
    return alloc(rows, cols, a, b.node);
  }

  Var<T> ew2(Var<T> a, Var<T> b, Ew2 op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw_data("nn::ShapeMismatch", "elementwise operand shapes");
    Node<T>* n = alloc(a.rows(), a.cols(), a, b);
    const T* xa = a.ptr();
    const T* xb = b.ptr();
    T* y = n->val_store.ptr();
    switch (op) {
      case Ew2::Add:
        for (std::size_t i = 0; i < n->size(); ++i) y[i] = xa[i] + xb[i];
        break;
      case Ew2::Sub:
        for (std::size_t i = 0; i < n->size(); ++i) y[i] = xa[i] - xb[i];
        break;
      case Ew2::Mul:
        for (std::size_t i = 0; i < n->size(); ++i) y[i] = xa[i] * xb[i];
        break;
    }
    if (n->requires_grad) {
      Node<T>* na = a.node;
      Node<T>* nb = b.node;
      n->backward = [n, na, nb, op] {
        const T* dy = n->grad();
        if (na->requires_grad) {
          T* dx = na->grad();
          if (op == Ew2::Mul) {
            const T* vb = nb->val();
            for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i] * vb[i];
          } else {
            for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i];
          }
        }
        if (nb->requires_grad) {
          T* dx = nb->grad();
          switch (op) {
            case Ew2::Add:
              for (std::size_t i = 0; i < n->size(); ++i) dx[i] += dy[i];
              break;
            case Ew2::Sub:
              for (std::size_t i = 0; i < n->size(); ++i) dx[i] -= dy[i];
              break;
            case Ew2::Mul: {
              const T* va = na->val();
              for (std::size_t i = 0; i < n->size(); ++i)
                dx[i] += dy[i] * va[i];
              break;
            }
          }
        }
      };
    }
    return {n};
  }

  template <typename F, typename DF>
  Var<T> unary(Var<T> a, F f, DF df) {
    Node<T>* n = alloc(a.rows(), a.cols(), a);
    const T* x = a.ptr();
    T* y = n->val_store.ptr();
    for (std::size_t i = 0; i < n->size(); ++i) y[i] = f(x[i]);
    if (n->requires_grad) {
      Node<T>* na = a.node;
      n->backward = [n, na, df] {
        const T* dy = n->grad();
        const T* x2 = na->val();
        const T* y2 = n->val();
        T* dx = na->grad();
        for (std::size_t i = 0; i < n->size(); ++i)
          dx[i] += dy[i] * df(x2[i], y2[i]);
      };
    }
    return {n};
  }
};

}  // namespace zsmstm::nn
