#pragma once

// Vectorized primitives behind the sampling / bound-evaluation loops.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 or NEON variant.  The variants are required to be
// bit-identical to the reference: elementwise kernels are trivially so, and
// the reductions (dot, sum) use a fixed 4-lane blocked accumulation order
// in all backends, with FP contraction disabled in the kernel translation
// units so no implicit FMA sneaks in.

#include <cstddef>
#include <cstdint>

#if defined(__x86_64__) || defined(_M_X64)
#define PREIMAGE_ARCH_X86 1
#elif defined(__aarch64__) || defined(_M_ARM64)
#define PREIMAGE_ARCH_ARM 1
#endif

namespace preimage::kern {

enum class Backend { Scalar, Avx2, Neon };

// Best backend the running CPU supports (detected once).
Backend best_supported();
// Currently selected backend. Defaults to best_supported().
Backend active();
// Force a backend, e.g. to cross-check variants in tests.
// Throws std::runtime_error if the CPU cannot run it.
void set_backend(Backend b);
const char* backend_name(Backend b);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// y[i] = x[i]
void copy(const double* x, double* y, std::size_t n);

// v[i] = max(v[i], 0)
void relu(double* v, std::size_t n);

// mask[i] &= (v[i] >= thresh)
void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n);

// mask[i] &= (lo <= v[i] && v[i] <= hi)
void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n);

// number of nonzero bytes in mask
std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n);

// sum_i a[i]*b[i]  (fixed blocked order, see above)
double dot(const double* a, const double* b, std::size_t n);

// sum_i x[i]  (fixed blocked order)
double sum(const double* x, std::size_t n);

// Dense row-major mat-vec: y[r] = dot(W[r,:], x) + b[r].
void matvec_bias(const double* W, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols);

namespace detail {

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
void copy(const double* x, double* y, std::size_t n);
void relu(double* v, std::size_t n);
void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n);
void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n);
std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace scalar

#ifdef PREIMAGE_ARCH_X86
namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
void copy(const double* x, double* y, std::size_t n);
void relu(double* v, std::size_t n);
void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n);
void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n);
std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace avx2
#endif

#ifdef PREIMAGE_ARCH_ARM
namespace neon {
void axpy(double a, const double* x, double* y, std::size_t n);
void copy(const double* x, double* y, std::size_t n);
void relu(double* v, std::size_t n);
void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n);
void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n);
std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace detail
}  // namespace preimage::kern
