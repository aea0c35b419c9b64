#include <cmath>
#include <cstddef>

#include "kpg/kernels.hpp"

namespace kpg::kern {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(std::size_t n, double alpha, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void matvec_scalar(std::size_t rows, std::size_t cols, const double* w,
                   const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias ? bias[r] : 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t_acc_scalar(std::size_t rows, std::size_t cols, const double* w,
                         const double* g, double* acc) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc[c] += gr * row[c];
  }
}

void rank1_acc_scalar(std::size_t rows, std::size_t cols, double* w,
                      const double* g, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void adam_scalar(std::size_t n, double* p, double* m, double* v,
                 const double* g, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table{
      "scalar",          dot_scalar,       axpy_scalar, scal_scalar,
      matvec_scalar,     matvec_t_acc_scalar, rank1_acc_scalar,
      adam_scalar,
  };
  return table;
}

}  // namespace kpg::kern
