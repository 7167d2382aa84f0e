#pragma once

#include <cstddef>
#include <vector>

namespace thermoeq {

/// Minimal dense row-major matrix; just enough for Hessians and tangent frames.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

} // namespace thermoeq
