// Compiled with -mavx2. Only reached through the dispatch table after a
// runtime CPU check, so nothing here may be inlined into generic code.

#include <immintrin.h>

#include <cstdlib>

#include "drpg/simd/kernels.hpp"

namespace drpg::simd {
namespace {

std::uint32_t sad_u8_avx2(const std::uint8_t* a, std::ptrdiff_t stride_a, const std::uint8_t* b,
                          std::ptrdiff_t stride_b, int w, int h)
{
    __m256i acc = _mm256_setzero_si256();
    std::uint32_t tail = 0;
    for (int y = 0; y < h; ++y) {
        int x = 0;
        for (; x + 32 <= w; x += 32) {
            __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + x));
            __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + x));
            acc = _mm256_add_epi64(acc, _mm256_sad_epu8(va, vb));
        }
        for (; x + 16 <= w; x += 16) {
            __m128i va = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + x));
            __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + x));
            acc = _mm256_add_epi64(acc, _mm256_zextsi128_si256(_mm_sad_epu8(va, vb)));
        }
        for (; x < w; ++x)
            tail += static_cast<std::uint32_t>(std::abs(int(a[x]) - int(b[x])));
        a += stride_a;
        b += stride_b;
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    return static_cast<std::uint32_t>(lanes[0] + lanes[1] + lanes[2] + lanes[3]) + tail;
}

void fir8_i32_avx2(const std::int32_t* src, std::ptrdiff_t step, const std::int16_t* taps, std::int32_t* dst,
                   int n)
{
    __m256i t[8];
    for (int k = 0; k < 8; ++k)
        t[k] = _mm256_set1_epi32(taps[k]);
    int x = 0;
    for (; x + 8 <= n; x += 8) {
        __m256i acc = _mm256_setzero_si256();
        for (int k = 0; k < 8; ++k) {
            __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + x + k * step));
            acc = _mm256_add_epi32(acc, _mm256_mullo_epi32(v, t[k]));
        }
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + x), acc);
    }
    for (; x < n; ++x) {
        std::int32_t acc = 0;
        for (int k = 0; k < 8; ++k)
            acc += taps[k] * src[x + k * step];
        dst[x] = acc;
    }
}

void axpy_f64_avx2(double alpha, const double* x, double* y, std::size_t n)
{
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

double dot_f64_avx2(const double* x, const double* y, std::size_t n)
{
    __m256d lo = _mm256_setzero_pd();
    __m256d hi = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        lo = _mm256_add_pd(lo, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        hi = _mm256_add_pd(hi, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    alignas(32) double lane[8];
    _mm256_store_pd(lane, lo);
    _mm256_store_pd(lane + 4, hi);
    for (; i < n; ++i)
        lane[i % 8] += x[i] * y[i];
    return ((lane[0] + lane[4]) + (lane[2] + lane[6])) + ((lane[1] + lane[5]) + (lane[3] + lane[7]));
}

}  // namespace

// Defined here, declared in dispatch.cpp.
const KernelTable& avx2_kernel_table()
{
    static const KernelTable table{"avx2", sad_u8_avx2, fir8_i32_avx2, axpy_f64_avx2, dot_f64_avx2};
    return table;
}

}  // namespace drpg::simd
