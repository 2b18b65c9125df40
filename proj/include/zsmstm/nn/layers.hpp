#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "zsmstm/nn/graph.hpp"

namespace zsmstm::nn {

template <typename T>
void init_uniform(Param<T>& p, Rng& rng, double bound) {
  for (auto& v : p.value.data)
    v = static_cast<T>(rng.uniform(-bound, bound));
}

// Orthonormalizes each dim x dim column block of a dim x (k*dim) matrix from
// a seeded Gaussian draw (Gram-Schmidt stands in for a full QR).
template <typename T>
void init_orthogonal_blocks(Param<T>& p, Rng& rng) {
  const int dim = p.value.rows;
  const int blocks = p.value.cols / dim;
  std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
  for (int blk = 0; blk < blocks; ++blk) {
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) q[j][i] = rng.normal();
    for (int j = 0; j < dim; ++j) {
      for (int prev = 0; prev < j; ++prev) {
        double dot = 0;
        for (int i = 0; i < dim; ++i) dot += q[j][i] * q[prev][i];
        for (int i = 0; i < dim; ++i) q[j][i] -= dot * q[prev][i];
      }
      double norm = 0;
      for (int i = 0; i < dim; ++i) norm += q[j][i] * q[j][i];
      norm = std::sqrt(norm);
      if (norm < 1e-12) {
        for (int i = 0; i < dim; ++i) q[j][i] = i == j ? 1.0 : 0.0;
        norm = 1.0;
      }
      for (int i = 0; i < dim; ++i) q[j][i] /= norm;
    }
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        p.value.at(i, blk * dim + j) = static_cast<T>(q[j][i]);
  }
}

// Weights start uniform in +-1/sqrt(fan_in), biases at zero.
template <typename T>
struct Linear {
  Param<T>* w = nullptr;  // in x out
  Param<T>* b = nullptr;  // 1 x out, absent when bias = false

  Linear() = default;
  Linear(ParamStore<T>& ps, const std::string& name, int in, int out,
         Rng& rng, bool bias = true) {
    w = &ps.add(name + ".w", in, out);
    init_uniform(*w, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    if (bias) b = &ps.add(name + ".b", 1, out);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    Var<T> y = g.matmul(x, g.leaf(*w));
    if (b) y = g.add_bias(y, g.leaf(*b));
    return y;
  }
};

template <typename T>
struct LayerNorm {
  Param<T>* gamma = nullptr;
  Param<T>* beta = nullptr;
  T eps = T(1e-6);

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& ps, const std::string& name, int dim) {
    gamma = &ps.add(name + ".g", 1, dim);
    gamma->value.fill(T(1));
    beta = &ps.add(name + ".b", 1, dim);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    return g.layer_norm_rows(x, g.leaf(*gamma), g.leaf(*beta), eps);
  }
};

// Multi-head scaled dot-product attention over row-per-token matrices.
// Self-attention passes the same matrix for queries and memory; the causal
// flag restricts each query row to positions at or before it.
template <typename T>
struct MultiHeadAttention {
  int heads = 0;
  int d_head = 0;
  Linear<T> wq, wk, wv, wo;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore<T>& ps, const std::string& name, int d_model,
                     int n_heads, Rng& rng)
      : heads(n_heads), d_head(d_model / n_heads) {
    if (d_model % n_heads != 0)
      throw_data("nn::BadConfig", "attention width not divisible by heads: " +
                                      name);
    wq = Linear<T>(ps, name + ".q", d_model, d_model, rng);
    wk = Linear<T>(ps, name + ".k", d_model, d_model, rng);
    wv = Linear<T>(ps, name + ".v", d_model, d_model, rng);
    wo = Linear<T>(ps, name + ".o", d_model, d_model, rng);
  }

  Var<T> operator()(Graph<T>& g, Var<T> queries, Var<T> memory,
                    bool causal = false) const {
    Var<T> q = wq(g, queries);
    Var<T> k = wk(g, memory);
    Var<T> v = wv(g, memory);
    const T inv_scale = T(1) / std::sqrt(static_cast<T>(d_head));
    std::vector<Var<T>> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      Var<T> qh = g.slice_cols(q, h * d_head, (h + 1) * d_head);
      Var<T> kh = g.slice_cols(k, h * d_head, (h + 1) * d_head);
      Var<T> vh = g.slice_cols(v, h * d_head, (h + 1) * d_head);
      Var<T> scores = g.scale(g.matmul(qh, kh, false, true), inv_scale);
      Var<T> attn = g.softmax_rows(scores, causal);
      outs.push_back(g.matmul(attn, vh));
    }
    return wo(g, g.concat_cols(outs));
  }
};

template <typename T>
struct FeedForward {
  Linear<T> up, down;

  FeedForward() = default;
  FeedForward(ParamStore<T>& ps, const std::string& name, int d_model,
              int hidden, Rng& rng) {
    up = Linear<T>(ps, name + ".up", d_model, hidden, rng);
    down = Linear<T>(ps, name + ".down", hidden, d_model, rng);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    return down(g, g.relu_(up(g, x)));
  }
};

// Post-norm transformer encoder layer: residual attention, then residual
// feed-forward, each followed by layer normalization.
template <typename T>
struct EncoderLayer {
  MultiHeadAttention<T> attn;
  FeedForward<T> ffn;
  LayerNorm<T> ln1, ln2;

  EncoderLayer() = default;
  EncoderLayer(ParamStore<T>& ps, const std::string& name, int d_model,
               int heads, int ffn_hidden, Rng& rng) {
    attn = MultiHeadAttention<T>(ps, name + ".attn", d_model, heads, rng);
    ffn = FeedForward<T>(ps, name + ".ffn", d_model, ffn_hidden, rng);
    ln1 = LayerNorm<T>(ps, name + ".ln1", d_model);
    ln2 = LayerNorm<T>(ps, name + ".ln2", d_model);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    Var<T> a = ln1(g, g.add(x, attn(g, x, x)));
    return ln2(g, g.add(a, ffn(g, a)));
  }
};

// Post-norm transformer decoder layer: causal self-attention, cross-attention
// into the memory sequence, feed-forward.
template <typename T>
struct DecoderLayer {
  MultiHeadAttention<T> self_attn, cross_attn;
  FeedForward<T> ffn;
  LayerNorm<T> ln1, ln2, ln3;

  DecoderLayer() = default;
  DecoderLayer(ParamStore<T>& ps, const std::string& name, int d_model,
               int heads, int ffn_hidden, Rng& rng) {
    self_attn = MultiHeadAttention<T>(ps, name + ".self", d_model, heads, rng);
    cross_attn = MultiHeadAttention<T>(ps, name + ".cross", d_model, heads, rng);
    ffn = FeedForward<T>(ps, name + ".ffn", d_model, ffn_hidden, rng);
    ln1 = LayerNorm<T>(ps, name + ".ln1", d_model);
    ln2 = LayerNorm<T>(ps, name + ".ln2", d_model);
    ln3 = LayerNorm<T>(ps, name + ".ln3", d_model);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x, Var<T> memory) const {
    Var<T> a = ln1(g, g.add(x, self_attn(g, x, x, true)));
    Var<T> b = ln2(g, g.add(a, cross_attn(g, a, memory)));
    return ln3(g, g.add(b, ffn(g, b)));
  }
};

// Stacked unidirectional LSTM. Gate blocks are laid out [input, forget, cell,
// output] along the 4H axis of both weight matrices.
template <typename T>
struct LstmStack {
  int layers = 0;
  int hidden = 0;
  std::vector<Param<T>*> w_ih;  // in_l x 4H
  std::vector<Param<T>*> w_hh;  // H x 4H
  std::vector<Param<T>*> bias;  // 1 x 4H

  LstmStack() = default;
  LstmStack(ParamStore<T>& ps, const std::string& name, int input, int n_hidden,
            int n_layers, Rng& rng)
      : layers(n_layers), hidden(n_hidden) {
    for (int l = 0; l < n_layers; ++l) {
      const int in_l = l == 0 ? input : n_hidden;
      const std::string ln = name + ".l" + std::to_string(l);
      w_ih.push_back(&ps.add(ln + ".w_ih", in_l, 4 * n_hidden));
      w_hh.push_back(&ps.add(ln + ".w_hh", n_hidden, 4 * n_hidden));
      bias.push_back(&ps.add(ln + ".b", 1, 4 * n_hidden));
      init_uniform(*w_ih.back(), rng,
                   1.0 / std::sqrt(static_cast<double>(in_l)));
      init_orthogonal_blocks(*w_hh.back(), rng);
    }
  }

  // x: T x input. Returns the full top-layer output sequence, T x hidden.
  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    Var<T> seq = x;
    const int steps = x.rows();
    Tensor<T> zeros(1, hidden);
    for (int l = 0; l < layers; ++l) {
      Var<T> wi = g.leaf(*w_ih[l]);
      Var<T> wh = g.leaf(*w_hh[l]);
      Var<T> b = g.leaf(*bias[l]);
      Var<T> h = g.input(zeros);
      Var<T> c = g.input(zeros);
      std::vector<Var<T>> outs;
      outs.reserve(steps);
      for (int t = 0; t < steps; ++t) {
        Var<T> xt = g.slice_rows(seq, t, t + 1);
        Var<T> gates =
            g.add_bias(g.add(g.matmul(xt, wi), g.matmul(h, wh)), b);
        Var<T> gi = g.sigmoid_(g.slice_cols(gates, 0, hidden));
        Var<T> gf = g.sigmoid_(g.slice_cols(gates, hidden, 2 * hidden));
        Var<T> gc = g.tanh_(g.slice_cols(gates, 2 * hidden, 3 * hidden));
        Var<T> go = g.sigmoid_(g.slice_cols(gates, 3 * hidden, 4 * hidden));
        c = g.add(g.mul(gf, c), g.mul(gi, gc));
        h = g.mul(go, g.tanh_(c));
        outs.push_back(h);
      }
      seq = g.concat_rows(outs);
    }
    return seq;
  }
};

template <typename T>
Var<T> mse(Graph<T>& g, Var<T> a, Var<T> b) {
  return g.mean_all(g.square(g.sub(a, b)));
}

// Fixed sine/cosine position table, one row per position.
template <typename T>
Tensor<T> sinusoidal_positions(int len, int dim) {
  Tensor<T> pe(len, dim);
  for (int pos = 0; pos < len; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double angle =
          pos * std::exp(-std::log(10000.0) * static_cast<double>(i) / dim);
      pe.at(pos, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < dim) pe.at(pos, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

}  // namespace zsmstm::nn
