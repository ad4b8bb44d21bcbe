// SPDX-License-Identifier: Apache-2.0
#include "cfr/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace cfr::kernels::detail {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(w + r * cols, x, cols);
}

const KernelTable kNeonTable{dot_neon, axpy_neon, gemv_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace cfr::kernels::detail

#else

namespace cfr::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace cfr::kernels::detail

#endif
