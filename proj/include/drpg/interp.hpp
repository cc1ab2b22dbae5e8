#pragma once

// Quarter-sample luma interpolation with the 8-tap half-sample and 7-tap
// quarter-sample integer filters, plus an edge-replicated padded picture used
// by motion search.

#include <array>
#include <cstdint>
#include <vector>

#include "drpg/flow.hpp"
#include "drpg/plane.hpp"

namespace drpg {

/// Motion vector in quarter-sample units: pred(p) = ref(p + mv/4).
struct MotionVectorQ {
    int x4 = 0;
    int y4 = 0;

    int l1() const noexcept { return (x4 < 0 ? -x4 : x4) + (y4 < 0 ? -y4 : y4); }
    friend bool operator==(const MotionVectorQ&, const MotionVectorQ&) = default;
};

/// Taps are stored over sample offsets -3..+4; the 7-tap filters carry a
/// zero in the unused slot.
struct InterpFilterSet {
    std::array<std::int16_t, 8> quarter;
    std::array<std::int16_t, 8> half;
    std::array<std::int16_t, 8> three_quarter;
    int norm_shift = 6;

    static const InterpFilterSet& standard();

    /// Taps for fractional phase 1, 2 or 3.
    const std::array<std::int16_t, 8>& phase(int frac) const;
};

/// Copy of a picture with `margin` replicated samples on every side.
class PaddedPlane {
public:
    PaddedPlane(const Plane& src, int margin);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int margin() const noexcept { return margin_; }
    std::ptrdiff_t stride() const noexcept { return stride_; }

    /// Pointer to sample (x, y); valid for x, y in [-margin, size + margin).
    const std::uint8_t* ptr(int x, int y) const
    {
        return data_.data() + static_cast<std::ptrdiff_t>(y + margin_) * stride_ + (x + margin_);
    }

private:
    int width_;
    int height_;
    int margin_;
    std::ptrdiff_t stride_;
    std::vector<std::uint8_t> data_;
};

/// Motion-compensated w×h block for the block at `origin`. Reference samples
/// outside the picture are replicated. Throws when the block itself is not
/// inside the picture.
Plane interpolate_block(const Plane& ref, Point origin, int w, int h, MotionVectorQ mv);

/// Same result using a padded reference; the filter support must lie inside
/// the padded area.
Plane interpolate_block(const PaddedPlane& ref, Point origin, int w, int h, MotionVectorQ mv);

}  // namespace drpg
