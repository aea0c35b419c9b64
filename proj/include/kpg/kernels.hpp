#pragma once

#include <cstddef>

// Dense inner loops used by the network, optimizer and conjugate-gradient
// code. Each operation has a scalar reference implementation and an AVX2
// variant; the table returned by active() is chosen once at startup based on
// what the CPU supports. Set KPG_KERNELS=scalar (or =avx2) to override.
namespace kpg::kern {

struct Kernels {
  const char* name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // x[i] *= alpha
  void (*scal)(std::size_t n, double alpha, double* x);
  // y = W x + bias with W row-major (rows x cols); bias may be null.
  void (*matvec)(std::size_t rows, std::size_t cols, const double* w,
                 const double* x, const double* bias, double* y);
  // acc[c] += sum_r W[r][c] * g[r]
  void (*matvec_t_acc)(std::size_t rows, std::size_t cols, const double* w,
                       const double* g, double* acc);
  // W[r][c] += g[r] * x[c]
  void (*rank1_acc)(std::size_t rows, std::size_t cols, double* w,
                    const double* g, const double* x);
  // One ADAM update over n parameters. bc1 and bc2 are the precomputed
  // bias-correction factors 1/(1 - beta1^t) and 1/(1 - beta2^t).
  void (*adam)(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2);
};

const Kernels& scalar_kernels();

// Null when the CPU lacks AVX2 or FMA (or on non-x86 builds).
const Kernels* avx2_kernels();

// The table picked at startup: AVX2 when available, else scalar, subject to
// the KPG_KERNELS environment override. Throws if the override names a
// variant this machine cannot run.
const Kernels& active();

}  // namespace kpg::kern
