#include "zsmstm/nn/kernels.hpp"

#include <cmath>

#include "zsmstm/common.hpp"

namespace zsmstm::nn::kernels {

namespace {

// Work threshold below which threading overhead dominates.
constexpr std::size_t kParallelGrain = 1u << 15;

template <typename T>
inline void gemm_row(const T* a, bool trans_a, const T* b, bool trans_b, T* c,
                     int i, int n, int k, int m, bool accumulate) {
  T* crow = c + static_cast<std::size_t>(i) * n;
  if (!accumulate) {
    for (int j = 0; j < n; ++j) crow[j] = T(0);
  }
  for (int p = 0; p < k; ++p) {
    const T aip = trans_a ? a[static_cast<std::size_t>(p) * m + i]
                          : a[static_cast<std::size_t>(i) * k + p];
    if (!trans_b) {
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    } else {
      for (int j = 0; j < n; ++j)
        crow[j] += aip * b[static_cast<std::size_t>(j) * k + p];
    }
  }
}

template <typename T>
inline void softmax_row(const T* x, T* y, int i, int cols, bool causal) {
  const T* xr = x + static_cast<std::size_t>(i) * cols;
  T* yr = y + static_cast<std::size_t>(i) * cols;
  const int active = causal ? i + 1 : cols;
  T mx = xr[0];
  for (int j = 1; j < active; ++j) mx = xr[j] > mx ? xr[j] : mx;
  T sum = T(0);
  for (int j = 0; j < active; ++j) {
    yr[j] = std::exp(xr[j] - mx);
    sum += yr[j];
  }
  const T inv = T(1) / sum;
  for (int j = 0; j < active; ++j) yr[j] *= inv;
  for (int j = active; j < cols; ++j) yr[j] = T(0);
}

template <typename T>
inline void layer_norm_row(const T* x, const T* gamma, const T* beta, T* y,
                           T* mean, T* rstd, int i, int cols, T eps) {
  const T* xr = x + static_cast<std::size_t>(i) * cols;
  T* yr = y + static_cast<std::size_t>(i) * cols;
  T mu = T(0);
  for (int j = 0; j < cols; ++j) mu += xr[j];
  mu /= static_cast<T>(cols);
  T var = T(0);
  for (int j = 0; j < cols; ++j) {
    const T d = xr[j] - mu;
    var += d * d;
  }
  var /= static_cast<T>(cols);
  const T rs = T(1) / std::sqrt(var + eps);
  mean[i] = mu;
  rstd[i] = rs;
  for (int j = 0; j < cols; ++j) yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
}

}  // namespace

template <typename T>
void gemm_serial(const T* a, bool trans_a, const T* b, bool trans_b, T* c,
                 int m, int n, int k, bool accumulate) {
  for (int i = 0; i < m; ++i)
    gemm_row(a, trans_a, b, trans_b, c, i, n, k, m, accumulate);
}

template <typename T>
void gemm_parallel(const T* a, bool trans_a, const T* b, bool trans_b, T* c,
                   int m, int n, int k, bool accumulate, int threads) {
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int i = 0; i < m; ++i)
    gemm_row(a, trans_a, b, trans_b, c, i, n, k, m, accumulate);
}

template <typename T>
void gemm(const T* a, bool trans_a, const T* b, bool trans_b, T* c, int m,
          int n, int k, bool accumulate) {
  const int threads = max_threads();
  const std::size_t work = static_cast<std::size_t>(m) * n * k;
  if (threads > 1 && m > 1 && work >= kParallelGrain)
    gemm_parallel(a, trans_a, b, trans_b, c, m, n, k, accumulate, threads);
  else
    gemm_serial(a, trans_a, b, trans_b, c, m, n, k, accumulate);
}

template <typename T>
void softmax_rows_serial(const T* x, T* y, int rows, int cols, bool causal) {
  for (int i = 0; i < rows; ++i) softmax_row(x, y, i, cols, causal);
}

template <typename T>
void softmax_rows_parallel(const T* x, T* y, int rows, int cols, bool causal,
                           int threads) {
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int i = 0; i < rows; ++i) softmax_row(x, y, i, cols, causal);
}

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols, bool causal) {
  const int threads = max_threads();
  const std::size_t work = static_cast<std::size_t>(rows) * cols;
  if (threads > 1 && rows > 1 && work >= kParallelGrain)
    softmax_rows_parallel(x, y, rows, cols, causal, threads);
  else
    softmax_rows_serial(x, y, rows, cols, causal);
}

template <typename T>
void layer_norm_rows_serial(const T* x, const T* gamma, const T* beta, T* y,
                            T* mean, T* rstd, int rows, int cols, T eps) {
  for (int i = 0; i < rows; ++i)
    layer_norm_row(x, gamma, beta, y, mean, rstd, i, cols, eps);
}

template <typename T>
void layer_norm_rows_parallel(const T* x, const T* gamma, const T* beta, T* y,
                              T* mean, T* rstd, int rows, int cols, T eps,
                              int threads) {
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int i = 0; i < rows; ++i)
    layer_norm_row(x, gamma, beta, y, mean, rstd, i, cols, eps);
}

template <typename T>
void layer_norm_rows(const T* x, const T* gamma, const T* beta, T* y, T* mean,
                     T* rstd, int rows, int cols, T eps) {
  const int threads = max_threads();
  const std::size_t work = static_cast<std::size_t>(rows) * cols;
  if (threads > 1 && rows > 1 && work >= kParallelGrain)
    layer_norm_rows_parallel(x, gamma, beta, y, mean, rstd, rows, cols, eps,
                             threads);
  else
    layer_norm_rows_serial(x, gamma, beta, y, mean, rstd, rows, cols, eps);
}

#define ZSMSTM_INSTANTIATE_KERNELS(T)                                         \
  template void gemm_serial<T>(const T*, bool, const T*, bool, T*, int, int,  \
                               int, bool);                                    \
  template void gemm_parallel<T>(const T*, bool, const T*, bool, T*, int,     \
                                 int, int, bool, int);                        \
  template void gemm<T>(const T*, bool, const T*, bool, T*, int, int, int,    \
                        bool);                                                \
  template void softmax_rows_serial<T>(const T*, T*, int, int, bool);         \
  template void softmax_rows_parallel<T>(const T*, T*, int, int, bool, int);  \
  template void softmax_rows<T>(const T*, T*, int, int, bool);                \
  template void layer_norm_rows_serial<T>(const T*, const T*, const T*, T*,   \
                                          T*, T*, int, int, T);               \
  template void layer_norm_rows_parallel<T>(const T*, const T*, const T*,     \
                                            T*, T*, T*, int, int, T, int);    \
  template void layer_norm_rows<T>(const T*, const T*, const T*, T*, T*, T*,  \
                                   int, int, T);

ZSMSTM_INSTANTIATE_KERNELS(float)
ZSMSTM_INSTANTIATE_KERNELS(double)

#undef ZSMSTM_INSTANTIATE_KERNELS

}  // namespace zsmstm::nn::kernels
