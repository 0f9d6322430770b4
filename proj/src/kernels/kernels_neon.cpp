// NEON kernel variants for aarch64.  float64x2 gives two lanes, so the
// reductions run two vector accumulators (lanes 0..1 and 2..3 of the
// reference's four-accumulator scheme) and combine in the same tree.
// relu/mask use explicit compare+select so NaN handling matches the scalar
// ternary exactly.

#include "preimage/kernels.hpp"

#ifdef PREIMAGE_ARCH_ARM

#include <arm_neon.h>

namespace preimage::kern::detail::neon {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vaddq_f64(vy, vmulq_f64(va, vld1q_f64(x + i)));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void copy(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vld1q_f64(x + i));
    for (; i < n; ++i) y[i] = x[i];
}

void relu(double* v, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vv = vld1q_f64(v + i);
        uint64x2_t pos = vcgtq_f64(vv, zero);
        vst1q_f64(v + i, vbslq_f64(pos, vv, zero));
    }
    for (; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

void mask_ge(const double* v, double thresh, std::uint8_t* mask, std::size_t n) {
    const float64x2_t vt = vdupq_n_f64(thresh);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        uint64x2_t ge = vcgeq_f64(vld1q_f64(v + i), vt);
        mask[i + 0] = static_cast<std::uint8_t>(mask[i + 0] & (vgetq_lane_u64(ge, 0) & 1u));
        mask[i + 1] = static_cast<std::uint8_t>(mask[i + 1] & (vgetq_lane_u64(ge, 1) & 1u));
    }
    for (; i < n; ++i)
        mask[i] = static_cast<std::uint8_t>(mask[i] & (v[i] >= thresh ? 1u : 0u));
}

void mask_range(const double* v, double lo, double hi, std::uint8_t* mask, std::size_t n) {
    const float64x2_t vlo = vdupq_n_f64(lo);
    const float64x2_t vhi = vdupq_n_f64(hi);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vv = vld1q_f64(v + i);
        uint64x2_t in = vandq_u64(vcleq_f64(vlo, vv), vcleq_f64(vv, vhi));
        mask[i + 0] = static_cast<std::uint8_t>(mask[i + 0] & (vgetq_lane_u64(in, 0) & 1u));
        mask[i + 1] = static_cast<std::uint8_t>(mask[i + 1] & (vgetq_lane_u64(in, 1) & 1u));
    }
    for (; i < n; ++i)
        mask[i] = static_cast<std::uint8_t>(mask[i] & ((lo <= v[i] && v[i] <= hi) ? 1u : 0u));
}

std::size_t count_nonzero(const std::uint8_t* mask, std::size_t n) {
    std::size_t c = 0, i = 0;
    for (; i + 16 <= n; i += 16) {
        uint8x16_t m = vld1q_u8(mask + i);
        uint8x16_t ones = vcgtq_u8(m, vdupq_n_u8(0));
        c += vaddvq_u8(vshrq_n_u8(ones, 7));
    }
    for (; i < n; ++i) c += mask[i] != 0;
    return c;
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t accA = vdupq_n_f64(0.0), accB = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        accA = vaddq_f64(accA, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        accB = vaddq_f64(accB, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((vgetq_lane_f64(accA, 0) + vgetq_lane_f64(accA, 1)) +
            (vgetq_lane_f64(accB, 0) + vgetq_lane_f64(accB, 1))) + tail;
}

double sum(const double* x, std::size_t n) {
    float64x2_t accA = vdupq_n_f64(0.0), accB = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        accA = vaddq_f64(accA, vld1q_f64(x + i));
        accB = vaddq_f64(accB, vld1q_f64(x + i + 2));
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((vgetq_lane_f64(accA, 0) + vgetq_lane_f64(accA, 1)) +
            (vgetq_lane_f64(accB, 0) + vgetq_lane_f64(accB, 1))) + tail;
}

}  // namespace preimage::kern::detail::neon

#endif  // PREIMAGE_ARCH_ARM
