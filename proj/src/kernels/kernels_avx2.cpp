// AVX2 kernel variants.  Compiled with -mavx2 -ffp-contract=off; only invoked
// after a runtime CPUID check, so building the TU on any x86-64 host is safe.
//
// Reductions keep one element stream per 256-bit lane, so lane j of the
// vector accumulator equals scalar accumulator j.  The horizontal combine
// spills the lanes and adds them in the same ((0+1)+(2+3)) tree as the
// reference; explicit mul+add keeps FMA out of the products.

#include "preimage/kernels.hpp"

#ifdef PREIMAGE_ARCH_X86

#include <immintrin.h>

namespace preimage::kern::detail::avx2 {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void copy(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_loadu_pd(x + i));
    for (; i < n; ++i) y[i] = x[i];
}

void relu(double* v, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(v + i, _mm256_max_pd(_mm256_loadu_pd(v + i), zero));
    for (; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(thresh);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d cmp = _mm256_cmp_pd(_mm256_loadu_pd(v + i), vt, _CMP_GE_OQ);
        int bits = _mm256_movemask_pd(cmp);
        mask[i + 0] = static_cast<std::uint8_t>(mask[i + 0] & ((bits >> 0) & 1));
        mask[i + 1] = static_cast<std::uint8_t>(mask[i + 1] & ((bits >> 1) & 1));
        mask[i + 2] = static_cast<std::uint8_t>(mask[i + 2] & ((bits >> 2) & 1));
        mask[i + 3] = static_cast<std::uint8_t>(mask[i + 3] & ((bits >> 3) & 1));
    }
    for (; i < n; ++i)
        mask[i] = static_cast<std::uint8_t>(mask[i] & (v[i] >= thresh ? 1u : 0u));
}

void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n) {
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vv = _mm256_loadu_pd(v + i);
        __m256d in = _mm256_and_pd(_mm256_cmp_pd(vlo, vv, _CMP_LE_OQ),
                                   _mm256_cmp_pd(vv, vhi, _CMP_LE_OQ));
        int bits = _mm256_movemask_pd(in);
        mask[i + 0] = static_cast<std::uint8_t>(mask[i + 0] & ((bits >> 0) & 1));
        mask[i + 1] = static_cast<std::uint8_t>(mask[i + 1] & ((bits >> 1) & 1));
        mask[i + 2] = static_cast<std::uint8_t>(mask[i + 2] & ((bits >> 2) & 1));
        mask[i + 3] = static_cast<std::uint8_t>(mask[i + 3] & ((bits >> 3) & 1));
    }
    for (; i < n; ++i)
        mask[i] = static_cast<std::uint8_t>(mask[i] & ((lo <= v[i] && v[i] <= hi) ? 1u : 0u));
}

std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t c = 0, i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i m = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + i));
        __m256i eq = _mm256_cmpeq_epi8(m, zero);
        unsigned zeros = static_cast<unsigned>(_mm256_movemask_epi8(eq));
        c += 32u - static_cast<unsigned>(__builtin_popcount(zeros));
    }
    for (; i < n; ++i) c += mask[i] != 0;
    return c;
}

static inline double hsum_tree(__m256d acc) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return hsum_tree(acc) + tail;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum_tree(acc) + tail;
}

}  // namespace preimage::kern::detail::avx2

#endif  // PREIMAGE_ARCH_X86
