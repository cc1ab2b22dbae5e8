#include <atomic>
#include <cstdlib>
#include <cstring>

#include "drpg/simd/kernels.hpp"

namespace drpg::simd {

#ifdef DRPG_HAVE_AVX2
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2()
{
#if defined(DRPG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* select_default()
{
    const char* forced = std::getenv("DRPG_SIMD");
    if (forced && std::strcmp(forced, "scalar") == 0)
        return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels())
        return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot()
{
    static std::atomic<const KernelTable*> slot{select_default()};
    return slot;
}

}  // namespace

const KernelTable* avx2_kernels()
{
#ifdef DRPG_HAVE_AVX2
    static const bool supported = cpu_has_avx2();
    return supported ? &avx2_kernel_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels()
{
    return *active_slot().load(std::memory_order_acquire);
}

void set_active_kernels(const KernelTable& table)
{
    active_slot().store(&table, std::memory_order_release);
}

}  // namespace drpg::simd
