#include "drpg/plane.hpp"

#include <algorithm>
#include <string>

#include "drpg/error.hpp"

namespace drpg {

Plane::Plane(int width, int height, std::uint8_t fill)
    : width_(width), height_(height)
{
    if (width < 0 || height < 0)
        throw Error(ErrorKind::InvalidArgument, "plane dimensions must be non-negative");
    samples_.assign(static_cast<std::size_t>(width) * height, fill);
}

Plane::Plane(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples))
{
    if (width < 0 || height < 0)
        throw Error(ErrorKind::InvalidArgument, "plane dimensions must be non-negative");
    if (samples_.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorKind::ShapeMismatch,
                    "plane sample count " + std::to_string(samples_.size()) + " does not match " +
                        std::to_string(width) + "x" + std::to_string(height));
}

std::uint8_t Plane::clamped(int x, int y) const
{
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return samples_[index(x, y)];
}

Plane Plane::crop(int x, int y, int w, int h) const
{
    if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > width_ || y + h > height_)
        throw Error(ErrorKind::OutOfBounds, "crop window (" + std::to_string(x) + "," + std::to_string(y) + ") " +
                                                std::to_string(w) + "x" + std::to_string(h) + " exceeds " +
                                                std::to_string(width_) + "x" + std::to_string(height_));
    Plane out(w, h);
    for (int r = 0; r < h; ++r)
        std::copy_n(row(y + r) + x, w, out.row(r));
    return out;
}

}  // namespace drpg
