#include <cstdlib>

#include "drpg/simd/kernels.hpp"

namespace drpg::simd {
namespace {

std::uint32_t sad_u8_scalar(const std::uint8_t* a, std::ptrdiff_t stride_a, const std::uint8_t* b,
                            std::ptrdiff_t stride_b, int w, int h)
{
    std::uint32_t sum = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            sum += static_cast<std::uint32_t>(std::abs(int(a[x]) - int(b[x])));
        a += stride_a;
        b += stride_b;
    }
    return sum;
}

void fir8_i32_scalar(const std::int32_t* src, std::ptrdiff_t step, const std::int16_t* taps, std::int32_t* dst,
                     int n)
{
    for (int x = 0; x < n; ++x) {
        std::int32_t acc = 0;
        for (int k = 0; k < 8; ++k)
            acc += taps[k] * src[x + k * step];
        dst[x] = acc;
    }
}

void axpy_f64_scalar(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

// Lane i of 8 accumulates elements with index % 8 == i; lanes are combined as
// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7)).
double dot_f64_scalar(const double* x, const double* y, std::size_t n)
{
    double lane[8] = {};
    for (std::size_t i = 0; i < n; ++i)
        lane[i % 8] += x[i] * y[i];
    return ((lane[0] + lane[4]) + (lane[2] + lane[6])) + ((lane[1] + lane[5]) + (lane[3] + lane[7]));
}

}  // namespace

const KernelTable& scalar_kernels()
{
    static const KernelTable table{"scalar", sad_u8_scalar, fir8_i32_scalar, axpy_f64_scalar, dot_f64_scalar};
    return table;
}

}  // namespace drpg::simd
