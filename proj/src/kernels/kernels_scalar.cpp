// Scalar reference kernels.  These define the exact arithmetic the SIMD
// variants must reproduce: reductions run four independent accumulators over
// blocks of four elements (mirroring one 256-bit lane each), combine them as
// ((acc0+acc1)+(acc2+acc3)) and add the sequential tail last.

#include "preimage/kernels.hpp"

namespace preimage::kern::detail::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void copy(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i];
}

void relu(double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        mask[i] = static_cast<std::uint8_t>(mask[i] & (v[i] >= thresh ? 1u : 0u));
}

void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        mask[i] = static_cast<std::uint8_t>(mask[i] & ((lo <= v[i] && v[i] <= hi) ? 1u : 0u));
}

std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += mask[i] != 0;
    return c;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i + 0] * b[i + 0];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((acc0 + acc1) + (acc2 + acc3)) + tail;
}

double sum(const double* x, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += x[i + 0];
        acc1 += x[i + 1];
        acc2 += x[i + 2];
        acc3 += x[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((acc0 + acc1) + (acc2 + acc3)) + tail;
}

}  // namespace preimage::kern::detail::scalar
