#pragma once

#include <cstddef>
#include <vector>

namespace preimage {

// Row-major dense matrix. Desk-scale: layer widths and input dims here are
// tens, not thousands, so no blocking or aliasing tricks.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double* row(std::size_t r) { return a.data() + r * cols; }
    const double* row(std::size_t r) const { return a.data() + r * cols; }
    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

}  // namespace preimage
