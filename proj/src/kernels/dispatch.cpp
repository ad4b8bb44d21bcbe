// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "cfr/error.hpp"
#include "cfr/kernels.hpp"

namespace cfr::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect() {
    if (const char* env = std::getenv("CFR_KERNELS")) {
        const std::string v(env);
        for (auto b : {Backend::scalar, Backend::avx2, Backend::neon}) {
            if (v == name(b) && available(b)) return b;
        }
    }
    if (available(Backend::avx2)) return Backend::avx2;
    if (available(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> t{&table(detect())};
    return t;
}

std::atomic<Backend>& current_backend() {
    static std::atomic<Backend> b{detect()};
    return b;
}

}  // namespace

std::string_view name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "scalar";
}

bool available(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return detail::avx2_table() != nullptr && cpu_has_avx2_fma();
        case Backend::neon: return detail::neon_table() != nullptr;
    }
    return false;
}

const KernelTable& table(Backend b) {
    if (!available(b)) throw InvalidArgument("kernel backend '" + std::string(name(b)) + "' unavailable");
    switch (b) {
        case Backend::avx2: return *detail::avx2_table();
        case Backend::neon: return *detail::neon_table();
        case Backend::scalar: break;
    }
    return detail::kScalarTable;
}

Backend active_backend() {
    (void)current();
    return current_backend().load();
}

void set_backend(Backend b) {
    const KernelTable& t = table(b);
    current().store(&t);
    current_backend().store(b);
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("dot: length mismatch");
    return current().load()->dot(x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw InvalidArgument("axpy: length mismatch");
    current().load()->axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> w, std::size_t rows, std::span<const double> x,
          std::span<double> y) {
    if (rows * x.size() != w.size() || y.size() != rows) {
        throw InvalidArgument("gemv: shape mismatch");
    }
    current().load()->gemv(w.data(), rows, x.size(), x.data(), y.data());
}

}  // namespace cfr::kernels
