// Backend detection and dispatch.

#include "preimage/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace preimage::kern {

Backend best_supported() {
#if defined(PREIMAGE_ARCH_X86)
    if (__builtin_cpu_supports("avx2")) return Backend::Avx2;
    return Backend::Scalar;
#elif defined(PREIMAGE_ARCH_ARM)
    return Backend::Neon;
#else
    return Backend::Scalar;
#endif
}

namespace {
std::atomic<Backend> g_active{best_supported()};

bool supported(Backend b) {
    switch (b) {
        case Backend::Scalar: return true;
        case Backend::Avx2:
#if defined(PREIMAGE_ARCH_X86)
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case Backend::Neon:
#if defined(PREIMAGE_ARCH_ARM)
            return true;
#else
            return false;
#endif
    }
    return false;
}
}  // namespace

Backend active() { return g_active.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!supported(b))
        throw std::runtime_error(std::string("kernel backend not supported on this CPU: ") +
                                 backend_name(b));
    g_active.store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

#if defined(PREIMAGE_ARCH_X86)
#define PREIMAGE_DISPATCH(fn, ...)                                   \
    switch (active()) {                                              \
        case Backend::Avx2: return detail::avx2::fn(__VA_ARGS__);    \
        default: return detail::scalar::fn(__VA_ARGS__);             \
    }
#elif defined(PREIMAGE_ARCH_ARM)
#define PREIMAGE_DISPATCH(fn, ...)                                   \
    switch (active()) {                                              \
        case Backend::Neon: return detail::neon::fn(__VA_ARGS__);    \
        default: return detail::scalar::fn(__VA_ARGS__);             \
    }
#else
#define PREIMAGE_DISPATCH(fn, ...) return detail::scalar::fn(__VA_ARGS__);
#endif

void axpy(double a, const double* x, double* y, std::size_t n) {
    PREIMAGE_DISPATCH(axpy, a, x, y, n)
}

void copy(const double* x, double* y, std::size_t n) {
    PREIMAGE_DISPATCH(copy, x, y, n)
}

void relu(double* v, std::size_t n) {
    PREIMAGE_DISPATCH(relu, v, n)
}

void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n) {
    PREIMAGE_DISPATCH(mask_ge, v, thresh, mask, n)
}

void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n) {
    PREIMAGE_DISPATCH(mask_range, v, lo, hi, mask, n)
}

std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n) {
    PREIMAGE_DISPATCH(count_nonzero, mask, n)
}

double dot(const double* a, const double* b, std::size_t n) {
    PREIMAGE_DISPATCH(dot, a, b, n)
}

double sum(const double* x, std::size_t n) {
    PREIMAGE_DISPATCH(sum, x, n)
}

void matvec_bias(const double* W, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot(W + r * cols, x, cols) + b[r];
}

}  // namespace preimage::kern
