#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace latgm::kernels {

namespace {

constexpr KernelTable kScalar{
    Backend::scalar,         detail::dot_scalar,     detail::axpy_scalar,    detail::rotate_scalar,
    detail::soft_threshold_scalar, detail::sum_abs_scalar, detail::max_abs_scalar,
};

#if defined(LATGM_HAVE_AVX2)
constexpr KernelTable kAvx2{
    Backend::avx2,         detail::dot_avx2,     detail::axpy_avx2,    detail::rotate_avx2,
    detail::soft_threshold_avx2, detail::sum_abs_avx2, detail::max_abs_avx2,
};

bool cpu_has_avx2() noexcept {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* initial_table() noexcept {
    const KernelTable* best = avx2_table();
    if (const char* env = std::getenv("LATGM_KERNELS")) {
        const std::string_view want(env);
        if (want == "scalar") return &kScalar;
        if (want == "avx2" && best) return best;
    }
    return best ? best : &kScalar;
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(LATGM_HAVE_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

bool select(Backend b) noexcept {
    const KernelTable* t = b == Backend::scalar ? &kScalar : avx2_table();
    if (!t) return false;
    current().store(t, std::memory_order_relaxed);
    return true;
}

std::string_view name(Backend b) noexcept {
    return b == Backend::scalar ? "scalar" : "avx2";
}

}  // namespace latgm::kernels
