// AVX2+FMA variants of the arithmetic kernels. Built only on x86-64; callers
// go through the dispatch table in kernels.cpp.

#include "aad/kernels.hpp"

#if defined(AAD_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>

namespace aad::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

} // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    return hsum(acc0) + tail;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i];
    return hsum(_mm256_add_pd(acc0, acc1)) + tail;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4),
                                                    _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// Register-tiled rank-k update. Rows are processed in blocks so each 4x8
// tile of G is touched once per block instead of once per sample row; the
// tiles in the diagonal band spill partial sums below the diagonal, which
// symmetrize() later overwrites.
void gram_upper_avx2(const double* x, std::size_t rows, std::size_t cols, double* g) {
    constexpr std::size_t kRowBlock = 256;

    for (std::size_t r0 = 0; r0 < rows; r0 += kRowBlock) {
        const std::size_t r1 = std::min(r0 + kRowBlock, rows);

        for (std::size_t i0 = 0; i0 < cols; i0 += 4) {
            const std::size_t i_n = std::min<std::size_t>(4, cols - i0);
            for (std::size_t j0 = i0; j0 < cols; j0 += 8) {
                const std::size_t j_n = std::min<std::size_t>(8, cols - j0);

                if (i_n == 4 && j_n == 8) {
                    __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
                    __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
                    __m256d acc20 = _mm256_setzero_pd(), acc21 = _mm256_setzero_pd();
                    __m256d acc30 = _mm256_setzero_pd(), acc31 = _mm256_setzero_pd();
                    for (std::size_t r = r0; r < r1; ++r) {
                        const double* row = x + r * cols;
                        const __m256d b0 = _mm256_loadu_pd(row + j0);
                        const __m256d b1 = _mm256_loadu_pd(row + j0 + 4);
                        __m256d a;
                        a = _mm256_broadcast_sd(row + i0);
                        acc00 = _mm256_fmadd_pd(a, b0, acc00);
                        acc01 = _mm256_fmadd_pd(a, b1, acc01);
                        a = _mm256_broadcast_sd(row + i0 + 1);
                        acc10 = _mm256_fmadd_pd(a, b0, acc10);
                        acc11 = _mm256_fmadd_pd(a, b1, acc11);
                        a = _mm256_broadcast_sd(row + i0 + 2);
                        acc20 = _mm256_fmadd_pd(a, b0, acc20);
                        acc21 = _mm256_fmadd_pd(a, b1, acc21);
                        a = _mm256_broadcast_sd(row + i0 + 3);
                        acc30 = _mm256_fmadd_pd(a, b0, acc30);
                        acc31 = _mm256_fmadd_pd(a, b1, acc31);
                    }
                    double* g0 = g + i0 * cols + j0;
                    double* g1 = g0 + cols;
                    double* g2 = g1 + cols;
                    double* g3 = g2 + cols;
                    _mm256_storeu_pd(g0, _mm256_add_pd(_mm256_loadu_pd(g0), acc00));
                    _mm256_storeu_pd(g0 + 4, _mm256_add_pd(_mm256_loadu_pd(g0 + 4), acc01));
                    _mm256_storeu_pd(g1, _mm256_add_pd(_mm256_loadu_pd(g1), acc10));
                    _mm256_storeu_pd(g1 + 4, _mm256_add_pd(_mm256_loadu_pd(g1 + 4), acc11));
                    _mm256_storeu_pd(g2, _mm256_add_pd(_mm256_loadu_pd(g2), acc20));
                    _mm256_storeu_pd(g2 + 4, _mm256_add_pd(_mm256_loadu_pd(g2 + 4), acc21));
                    _mm256_storeu_pd(g3, _mm256_add_pd(_mm256_loadu_pd(g3), acc30));
                    _mm256_storeu_pd(g3 + 4, _mm256_add_pd(_mm256_loadu_pd(g3 + 4), acc31));
                } else {
                    for (std::size_t r = r0; r < r1; ++r) {
                        const double* row = x + r * cols;
                        for (std::size_t i = i0; i < i0 + i_n; ++i) {
                            const double xi = row[i];
                            if (xi == 0.0) continue;
                            double* grow = g + i * cols;
                            for (std::size_t j = std::max(j0, i); j < j0 + j_n; ++j)
                                grow[j] += xi * row[j];
                        }
                    }
                }
            }
        }
    }
}

void xty_avx2(const double* x, const double* y, std::size_t rows, std::size_t cols,
              std::size_t nrhs, double* b) {
    if (nrhs == 1) {
        for (std::size_t r = 0; r < rows; ++r) {
            const double yr = y[r];
            if (yr == 0.0) continue;
            axpy_avx2(yr, x + r * cols, b, cols);
        }
        return;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xrow = x + r * cols;
        const double* yrow = y + r * nrhs;
        for (std::size_t i = 0; i < cols; ++i) {
            const double xi = xrow[i];
            if (xi == 0.0) continue;
            axpy_avx2(xi, yrow, b + i * nrhs, nrhs);
        }
    }
}

} // namespace aad::kernels::detail

#endif // AAD_HAVE_AVX2
