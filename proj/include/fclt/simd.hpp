#pragma once

#include <cstddef>

// Dense arithmetic kernels used by the hot loops (path algebra, weight-sum
// reductions, matrix-vector products for Gaussian sampling, moment
// accumulation). Scalar reference implementations always exist; AVX2 variants
// are selected once at startup based on runtime CPU detection. The dispatched
// entry points are the `vec::` functions; tests compare them against
// `vec::scalar::` on random data.

namespace fclt::vec {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double abs_cube_sum(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);
// out = a*x + b*y
void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n);
// y = A x for row-major A (rows x cols)
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double abs_cube_sum(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);
void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n);
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);
}  // namespace avx2
#endif

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
double abs_cube_sum(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);
void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n);
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);

// Name of the active backend ("scalar" or "avx2").
const char* active_backend();

}  // namespace fclt::vec
