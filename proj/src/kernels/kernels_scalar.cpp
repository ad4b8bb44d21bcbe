// SPDX-License-Identifier: Apache-2.0
#include "cfr/kernels.hpp"

namespace cfr::kernels::detail {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

}  // namespace

const KernelTable kScalarTable{dot_scalar, axpy_scalar, gemv_scalar};

}  // namespace cfr::kernels::detail
