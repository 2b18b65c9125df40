#pragma once

#include <cstddef>

// Dense compute kernels. Each kernel has a serial reference implementation
// and an OpenMP variant that parallelizes over output rows only; every output
// element is produced by exactly one thread with the same serial inner-loop
// order, so the two variants (and any thread count) agree bitwise. The
// dispatching entry points pick the OpenMP path when the thread cap and the
// problem size warrant it.

namespace zsmstm::nn::kernels {

// C[m x n] (+)= op(A) * op(B); op transposes when the flag is set.
// A is m x k (or k x m when trans_a), B is k x n (or n x k when trans_b).
template <typename T>
void gemm_serial(const T* a, bool trans_a, const T* b, bool trans_b, T* c,
                 int m, int n, int k, bool accumulate);

template <typename T>
void gemm_parallel(const T* a, bool trans_a, const T* b, bool trans_b, T* c,
                   int m, int n, int k, bool accumulate, int threads);

template <typename T>
void gemm(const T* a, bool trans_a, const T* b, bool trans_b, T* c, int m,
          int n, int k, bool accumulate = false);

// Row-wise numerically stable softmax. With causal = true the matrix must be
// square and row i uses only columns 0..i; masked columns are written as 0.
template <typename T>
void softmax_rows_serial(const T* x, T* y, int rows, int cols, bool causal);

template <typename T>
void softmax_rows_parallel(const T* x, T* y, int rows, int cols, bool causal,
                           int threads);

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols, bool causal = false);

// Row-wise layer normalization, pre-affine statistics returned for backward.
// y = (x - mean) * rstd * gamma + beta, rstd = 1/sqrt(var + eps).
template <typename T>
void layer_norm_rows_serial(const T* x, const T* gamma, const T* beta, T* y,
                            T* mean, T* rstd, int rows, int cols, T eps);

template <typename T>
void layer_norm_rows_parallel(const T* x, const T* gamma, const T* beta, T* y,
                              T* mean, T* rstd, int rows, int cols, T eps,
                              int threads);

template <typename T>
void layer_norm_rows(const T* x, const T* gamma, const T* beta, T* y, T* mean,
                     T* rstd, int rows, int cols, T eps);

}  // namespace zsmstm::nn::kernels
