#include "drpg/interp.hpp"

#include <algorithm>

#include "drpg/error.hpp"
#include "drpg/simd/kernels.hpp"

namespace drpg {

const InterpFilterSet& InterpFilterSet::standard()
{
    static const InterpFilterSet set{
        {-1, 4, -10, 58, 17, -5, 1, 0},
        {-1, 4, -11, 40, 40, -11, 4, -1},
        {0, 1, -5, 17, 58, -10, 4, -1},
        6,
    };
    return set;
}

const std::array<std::int16_t, 8>& InterpFilterSet::phase(int frac) const
{
    switch (frac) {
    case 1: return quarter;
    case 2: return half;
    case 3: return three_quarter;
    default: throw Error(ErrorKind::InvalidArgument, "filter phase must be 1, 2 or 3");
    }
}

PaddedPlane::PaddedPlane(const Plane& src, int margin)
    : width_(src.width()), height_(src.height()), margin_(margin), stride_(src.width() + 2 * margin)
{
    if (src.empty())
        throw Error(ErrorKind::InvalidArgument, "cannot pad an empty plane");
    data_.resize(static_cast<std::size_t>(stride_) * (height_ + 2 * margin_));
    for (int y = -margin_; y < height_ + margin_; ++y) {
        std::uint8_t* dst = data_.data() + static_cast<std::ptrdiff_t>(y + margin_) * stride_;
        const std::uint8_t* row = src.row(std::clamp(y, 0, height_ - 1));
        std::fill(dst, dst + margin_, row[0]);
        std::copy(row, row + width_, dst + margin_);
        std::fill(dst + margin_ + width_, dst + stride_, row[width_ - 1]);
    }
}

namespace {

constexpr int kTapsBefore = 3;
constexpr int kTapsAfter = 4;

void check_block(int frame_w, int frame_h, Point origin, int w, int h)
{
    if (w < 1 || h < 1 || origin.x < 0 || origin.y < 0 || origin.x + w > frame_w || origin.y + h > frame_h)
        throw Error(ErrorKind::OutOfBounds, "interpolate_block: block (" + std::to_string(origin.x) + "," +
                                                std::to_string(origin.y) + ") " + std::to_string(w) + "x" +
                                                std::to_string(h) + " is outside the " + std::to_string(frame_w) +
                                                "x" + std::to_string(frame_h) + " picture");
}

std::uint8_t clip_u8(std::int32_t v)
{
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

// `window` points at the reference sample (ix-3, iy-3) where (ix, iy) is the
// integer part of the displaced block origin; it must be readable for
// (w+7)×(h+7) samples.
Plane filter_block(const std::uint8_t* window, std::ptrdiff_t stride, int w, int h, int fx, int fy)
{
    Plane out(w, h);
    if (fx == 0 && fy == 0) {
        for (int y = 0; y < h; ++y)
            std::copy_n(window + (y + kTapsBefore) * stride + kTapsBefore, w, out.row(y));
        return out;
    }

    const auto& filters = InterpFilterSet::standard();
    const auto& kern = simd::active_kernels();
    const int ww = w + kTapsBefore + kTapsAfter;
    const int wh = h + kTapsBefore + kTapsAfter;
    std::vector<std::int32_t> src(static_cast<std::size_t>(ww) * wh);
    for (int y = 0; y < wh; ++y)
        for (int x = 0; x < ww; ++x)
            src[static_cast<std::size_t>(y) * ww + x] = window[y * stride + x];

    std::vector<std::int32_t> acc(static_cast<std::size_t>(w));
    const int shift1d = filters.norm_shift;
    const std::int32_t round1d = 1 << (shift1d - 1);

    if (fy == 0) {
        const auto& taps = filters.phase(fx);
        for (int y = 0; y < h; ++y) {
            kern.fir8_i32(src.data() + static_cast<std::size_t>(y + kTapsBefore) * ww, 1, taps.data(), acc.data(), w);
            for (int x = 0; x < w; ++x)
                out.at(x, y) = clip_u8((acc[x] + round1d) >> shift1d);
        }
        return out;
    }
    if (fx == 0) {
        const auto& taps = filters.phase(fy);
        for (int y = 0; y < h; ++y) {
            kern.fir8_i32(src.data() + static_cast<std::size_t>(y) * ww + kTapsBefore, ww, taps.data(), acc.data(), w);
            for (int x = 0; x < w; ++x)
                out.at(x, y) = clip_u8((acc[x] + round1d) >> shift1d);
        }
        return out;
    }

    // Two-dimensional phase: unrounded horizontal pass, then vertical pass
    // normalized by 2^12.
    const auto& hx = filters.phase(fx);
    const auto& vy = filters.phase(fy);
    std::vector<std::int32_t> rows(static_cast<std::size_t>(w) * wh);
    for (int y = 0; y < wh; ++y)
        kern.fir8_i32(src.data() + static_cast<std::size_t>(y) * ww, 1, hx.data(),
                      rows.data() + static_cast<std::size_t>(y) * w, w);
    const int shift2d = 2 * shift1d;
    const std::int32_t round2d = 1 << (shift2d - 1);
    for (int y = 0; y < h; ++y) {
        kern.fir8_i32(rows.data() + static_cast<std::size_t>(y) * w, w, vy.data(), acc.data(), w);
        for (int x = 0; x < w; ++x)
            out.at(x, y) = clip_u8((acc[x] + round2d) >> shift2d);
    }
    return out;
}

}  // namespace

Plane interpolate_block(const Plane& ref, Point origin, int w, int h, MotionVectorQ mv)
{
    check_block(ref.width(), ref.height(), origin, w, h);
    const int ix = origin.x + (mv.x4 >> 2) - kTapsBefore;
    const int iy = origin.y + (mv.y4 >> 2) - kTapsBefore;
    const int ww = w + kTapsBefore + kTapsAfter;
    const int wh = h + kTapsBefore + kTapsAfter;
    std::vector<std::uint8_t> window(static_cast<std::size_t>(ww) * wh);
    for (int y = 0; y < wh; ++y)
        for (int x = 0; x < ww; ++x)
            window[static_cast<std::size_t>(y) * ww + x] = ref.clamped(ix + x, iy + y);
    return filter_block(window.data(), ww, w, h, mv.x4 & 3, mv.y4 & 3);
}

Plane interpolate_block(const PaddedPlane& ref, Point origin, int w, int h, MotionVectorQ mv)
{
    check_block(ref.width(), ref.height(), origin, w, h);
    const int ix = origin.x + (mv.x4 >> 2) - kTapsBefore;
    const int iy = origin.y + (mv.y4 >> 2) - kTapsBefore;
    const int m = ref.margin();
    if (ix < -m || iy < -m || ix + w + kTapsBefore + kTapsAfter > ref.width() + m ||
        iy + h + kTapsBefore + kTapsAfter > ref.height() + m)
        throw Error(ErrorKind::OutOfBounds, "interpolate_block: motion vector (" + std::to_string(mv.x4) + "," +
                                                std::to_string(mv.y4) + ") reaches beyond the padded margin of " +
                                                std::to_string(m));
    return filter_block(ref.ptr(ix, iy), ref.stride(), w, h, mv.x4 & 3, mv.y4 & 3);
}

}  // namespace drpg
