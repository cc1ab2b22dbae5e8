#pragma once

// Data-parallel inner loops. Every entry has a scalar reference
// implementation and, where the target supports it, an AVX2 variant. The
// variants are bit-identical to the reference: integer kernels trivially, and
// floating-point kernels because they keep the per-element operation order
// (no FMA contraction, fixed 8-lane reduction tree for dot products).

#include <cstddef>
#include <cstdint>

namespace drpg::simd {

struct KernelTable {
    const char* name;

    /// Sum of absolute differences over a w×h block.
    std::uint32_t (*sad_u8)(const std::uint8_t* a, std::ptrdiff_t stride_a,
                            const std::uint8_t* b, std::ptrdiff_t stride_b, int w, int h);

    /// dst[x] = sum_k taps[k] * src[x + k*step], k = 0..7, for x in [0, n).
    void (*fir8_i32)(const std::int32_t* src, std::ptrdiff_t step, const std::int16_t* taps,
                     std::int32_t* dst, int n);

    /// y[i] += alpha * x[i]
    void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);

    /// Dot product with the 8-lane reduction order documented in dot_f64_reference.
    double (*dot_f64)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variants were not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table used by the library. Picks AVX2 when available unless the
/// DRPG_SIMD environment variable is set to "scalar".
const KernelTable& active_kernels();

/// Overrides the active table (tests and benchmarks).
void set_active_kernels(const KernelTable& table);

}  // namespace drpg::simd
