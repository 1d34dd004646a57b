#pragma once

#include <cstddef>

// Arithmetic inner loops shared by the regression and scoring code. Every
// kernel has a scalar reference implementation and, on x86-64 with AVX2+FMA,
// a vectorized variant. The variant is picked once at startup from cpuid;
// set AAD_FORCE_SCALAR=1 (or call force_scalar) to pin the reference path.
// The two paths are equivalence-tested against each other.

namespace aad::kernels {

enum class Isa { scalar, avx2 };

Isa active();
void force_scalar(bool on);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// sum_i a[i]
double sum(const double* a, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// G += X^T X for row-major X (rows x cols); only the upper triangle of the
// row-major cols x cols matrix G is written. Mirror with symmetrize().
void gram_upper(const double* x, std::size_t rows, std::size_t cols, double* g);

// B += X^T Y for row-major X (rows x cols) and Y (rows x nrhs); B is cols x nrhs.
void xty(const double* x, const double* y, std::size_t rows, std::size_t cols,
         std::size_t nrhs, double* b);

// Copy the upper triangle of a row-major n x n matrix onto the lower one.
void symmetrize(double* g, std::size_t n);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
double sum_scalar(const double* a, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void gram_upper_scalar(const double* x, std::size_t rows, std::size_t cols, double* g);
void xty_scalar(const double* x, const double* y, std::size_t rows, std::size_t cols,
                std::size_t nrhs, double* b);
#if defined(AAD_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_avx2(const double* a, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void gram_upper_avx2(const double* x, std::size_t rows, std::size_t cols, double* g);
void xty_avx2(const double* x, const double* y, std::size_t rows, std::size_t cols,
              std::size_t nrhs, double* b);
#endif
} // namespace detail

} // namespace aad::kernels
