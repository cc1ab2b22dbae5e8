#pragma once

#include <array>
#include <span>

#include "drpg/plane.hpp"

namespace drpg {

/// 10*log10(255^2 / MSE). Identical planes give +infinity.
double psnr(const Plane& a, const Plane& b);
double mse(const Plane& a, const Plane& b);

/// Mean local SSIM over all fully covered 11x11 Gaussian windows (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, L = 255. Both planes must be at least 11x11.
double ssim(const Plane& a, const Plane& b);

struct RDPoint {
    double bits = 0.0;  // per frame
    double psnr = 0.0;  // dB
};

/// Four rate-distortion points, stored sorted by rate. Construction checks
/// that rate and quality both increase strictly.
class RDCurve {
public:
    explicit RDCurve(std::span<const RDPoint> points);

    const std::array<RDPoint, 4>& points() const noexcept { return points_; }

private:
    std::array<RDPoint, 4> points_;
};

/// Bjontegaard delta rate in percent of `test` against `anchor`: cubic
/// interpolation of log10(rate) as a function of PSNR, integrated over the
/// overlapping PSNR interval. Negative means the test curve needs fewer bits.
double bd_rate(const RDCurve& anchor, const RDCurve& test);

}  // namespace drpg
