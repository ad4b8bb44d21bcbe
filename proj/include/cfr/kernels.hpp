// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision inner loops used by the reranker and trainer.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is chosen once at
// runtime from the CPU features, or forced with CFR_KERNELS=scalar|avx2|neon.
// Results of one backend are deterministic run to run; backends differ from
// each other only in floating-point summation order.

namespace cfr::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y = W x, W row-major rows x cols
    void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
};

std::string_view name(Backend b);

/// Whether this binary carries the backend and the CPU can run it.
bool available(Backend b);

const KernelTable& table(Backend b);

Backend active_backend();

/// Overrides the runtime choice. Throws InvalidArgument when unavailable.
void set_backend(Backend b);

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> w, std::size_t rows, std::span<const double> x,
          std::span<double> y);

namespace detail {
extern const KernelTable kScalarTable;
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace cfr::kernels
