#include "aad/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace aad::kernels {

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
    }
    if (i < n) acc0 += a[i] * b[i];
    return acc0 + acc1;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gram_upper_scalar(const double* x, std::size_t rows, std::size_t cols, double* g) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x + r * cols;
        for (std::size_t i = 0; i < cols; ++i) {
            const double xi = row[i];
            if (xi == 0.0) continue; // lag matrices are zero-padded at the edges
            double* grow = g + i * cols;
            for (std::size_t j = i; j < cols; ++j) grow[j] += xi * row[j];
        }
    }
}

void xty_scalar(const double* x, const double* y, std::size_t rows, std::size_t cols,
                std::size_t nrhs, double* b) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xrow = x + r * cols;
        const double* yrow = y + r * nrhs;
        for (std::size_t i = 0; i < cols; ++i) {
            const double xi = xrow[i];
            if (xi == 0.0) continue;
            double* brow = b + i * nrhs;
            for (std::size_t k = 0; k < nrhs; ++k) brow[k] += xi * yrow[k];
        }
    }
}

} // namespace detail

namespace {

struct Dispatch {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*gram_upper)(const double*, std::size_t, std::size_t, double*);
    void (*xty)(const double*, const double*, std::size_t, std::size_t, std::size_t, double*);
    Isa isa;
};

constexpr Dispatch kScalar{detail::dot_scalar,  detail::sum_scalar,
                           detail::axpy_scalar, detail::gram_upper_scalar,
                           detail::xty_scalar,  Isa::scalar};

#if defined(AAD_HAVE_AVX2)
constexpr Dispatch kAvx2{detail::dot_avx2,  detail::sum_avx2,  detail::axpy_avx2,
                         detail::gram_upper_avx2, detail::xty_avx2, Isa::avx2};
#endif

const Dispatch* detect() {
#if defined(AAD_HAVE_AVX2)
    if (const char* env = std::getenv("AAD_FORCE_SCALAR"); env && env[0] == '1')
        return &kScalar;
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const Dispatch*> g_active{nullptr};

const Dispatch* table() {
    const Dispatch* t = g_active.load(std::memory_order_acquire);
    if (!t) {
        t = detect();
        g_active.store(t, std::memory_order_release);
    }
    return t;
}

} // namespace

Isa active() { return table()->isa; }

void force_scalar(bool on) {
    g_active.store(on ? &kScalar : detect(), std::memory_order_release);
}

double dot(const double* a, const double* b, std::size_t n) { return table()->dot(a, b, n); }
double sum(const double* a, std::size_t n) { return table()->sum(a, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    table()->axpy(alpha, x, y, n);
}

void gram_upper(const double* x, std::size_t rows, std::size_t cols, double* g) {
    table()->gram_upper(x, rows, cols, g);
}

void xty(const double* x, const double* y, std::size_t rows, std::size_t cols,
         std::size_t nrhs, double* b) {
    table()->xty(x, y, rows, cols, nrhs, b);
}

void symmetrize(double* g, std::size_t n) {
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g[i * n + j] = g[j * n + i];
}

} // namespace aad::kernels
