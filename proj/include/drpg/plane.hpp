#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace drpg {

/// A single 8-bit luma picture, row-major with stride == width.
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, std::uint8_t fill = 0);
    Plane(int width, int height, std::vector<std::uint8_t> samples);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return samples_.empty(); }

    std::uint8_t at(int x, int y) const { return samples_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return samples_[index(x, y)]; }

    // Sample replication outside the picture.
    std::uint8_t clamped(int x, int y) const;

    const std::uint8_t* row(int y) const { return samples_.data() + static_cast<std::size_t>(y) * width_; }
    std::uint8_t* row(int y) { return samples_.data() + static_cast<std::size_t>(y) * width_; }

    std::span<const std::uint8_t> samples() const noexcept { return samples_; }
    std::span<std::uint8_t> samples() noexcept { return samples_; }

    /// Copies the w×h window at (x, y); the window must lie inside the picture.
    Plane crop(int x, int y, int w, int h) const;

    bool same_size(const Plane& other) const noexcept
    {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> samples_;
};

}  // namespace drpg
