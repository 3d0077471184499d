#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference and, on x86-64,
// an AVX2+FMA variant; one table is picked at first use from the CPU's
// capabilities (overridable with LATGM_KERNELS=scalar|avx2).
namespace latgm::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
    Backend backend;
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // (x, y) <- (c*x - s*y, s*x + c*y)
    void (*rotate)(double* x, double* y, double c, double s, std::size_t n);
    // out_i = sign(in_i) * max(|in_i| - t, 0); out may alias in
    void (*soft_threshold)(const double* in, double* out, double t, std::size_t n);
    double (*sum_abs)(const double* x, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the variant is not compiled in or the CPU lacks support.
const KernelTable* avx2_table() noexcept;

const KernelTable& active() noexcept;
// Forces a backend; returns false (and leaves the selection alone) when it is
// unavailable. Not thread-safe against concurrent kernel calls.
bool select(Backend b) noexcept;
std::string_view name(Backend b) noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}
inline void rotate(std::span<double> x, std::span<double> y, double c, double s) {
    active().rotate(x.data(), y.data(), c, s, x.size());
}
inline void soft_threshold(std::span<const double> in, std::span<double> out, double t) {
    active().soft_threshold(in.data(), out.data(), t, in.size());
}
inline double sum_abs(std::span<const double> x) { return active().sum_abs(x.data(), x.size()); }
inline double max_abs(std::span<const double> x) { return active().max_abs(x.data(), x.size()); }

}  // namespace latgm::kernels
