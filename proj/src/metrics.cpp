#include "drpg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "drpg/error.hpp"

namespace drpg {

namespace {

void require_same_size(const Plane& a, const Plane& b, const char* op)
{
    if (!a.same_size(b))
        throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": " + std::to_string(a.width()) + "x" +
                                                  std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                                  "x" + std::to_string(b.height()));
    if (a.empty())
        throw Error(ErrorKind::InvalidArgument, std::string(op) + ": empty planes");
}

}  // namespace

double mse(const Plane& a, const Plane& b)
{
    require_same_size(a, b, "mse");
    auto sa = a.samples();
    auto sb = b.samples();
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const int d = int(sa[i]) - int(sb[i]);
        sum += static_cast<std::uint64_t>(d * d);
    }
    return static_cast<double>(sum) / static_cast<double>(sa.size());
}

double psnr(const Plane& a, const Plane& b)
{
    require_same_size(a, b, "psnr");
    const double e = mse(a, b);
    if (e == 0.0)
        return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / e);
}

double ssim(const Plane& a, const Plane& b)
{
    require_same_size(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    if (a.width() < kWin || a.height() < kWin)
        throw Error(ErrorKind::InvalidArgument, "ssim: planes must be at least 11x11, got " +
                                                    std::to_string(a.width()) + "x" + std::to_string(a.height()));
    constexpr double C1 = (0.01 * 255) * (0.01 * 255);
    constexpr double C2 = (0.03 * 255) * (0.03 * 255);

    std::array<double, kWin> g{};
    double gsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - kWin / 2;
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        gsum += g[i];
    }
    for (double& v : g)
        v /= gsum;

    const int W = a.width();
    const int H = a.height();
    const int ow = W - kWin + 1;
    // Separable filtering of x, y, x^2, y^2, xy: horizontal pass first.
    std::array<std::vector<double>, 5> hpass;
    for (auto& v : hpass)
        v.assign(static_cast<std::size_t>(ow) * H, 0.0);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s[5] = {};
            for (int k = 0; k < kWin; ++k) {
                const double pa = a.at(x + k, y);
                const double pb = b.at(x + k, y);
                s[0] += g[k] * pa;
                s[1] += g[k] * pb;
                s[2] += g[k] * (pa * pa);
                s[3] += g[k] * (pb * pb);
                s[4] += g[k] * (pa * pb);
            }
            for (int c = 0; c < 5; ++c)
                hpass[c][static_cast<std::size_t>(y) * ow + x] = s[c];
        }
    }
    const int oh = H - kWin + 1;
    double total = 0.0;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s[5] = {};
            for (int k = 0; k < kWin; ++k)
                for (int c = 0; c < 5; ++c)
                    s[c] += g[k] * hpass[c][static_cast<std::size_t>(y + k) * ow + x];
            const double mu_a = s[0], mu_b = s[1];
            const double var_a = s[2] - mu_a * mu_a;
            const double var_b = s[3] - mu_b * mu_b;
            const double cov = s[4] - mu_a * mu_b;
            // Symmetric in (a, b) term by term.
            const double num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2);
            const double den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2);
            total += num / den;
        }
    }
    return total / (static_cast<double>(ow) * oh);
}

RDCurve::RDCurve(std::span<const RDPoint> points)
{
    if (points.size() != 4)
        throw Error(ErrorKind::InvalidArgument, "an RD curve needs exactly 4 points, got " + std::to_string(points.size()));
    std::copy(points.begin(), points.end(), points_.begin());
    std::sort(points_.begin(), points_.end(), [](const RDPoint& l, const RDPoint& r) { return l.bits < r.bits; });
    for (std::size_t i = 0; i < 4; ++i) {
        if (!std::isfinite(points_[i].bits) || !std::isfinite(points_[i].psnr) || points_[i].bits <= 0.0)
            throw Error(ErrorKind::InvalidArgument, "RD point rates must be positive and PSNRs finite");
        if (i > 0 && (points_[i].bits <= points_[i - 1].bits || points_[i].psnr <= points_[i - 1].psnr))
            throw Error(ErrorKind::InvalidArgument,
                        "RD curve is not strictly increasing in both rate and PSNR");
    }
}

namespace {

// Power-basis coefficients c0..c3 of the cubic through (t_i, v_i), with
// t = psnr - centre for conditioning.
std::array<double, 4> interpolating_cubic(const std::array<double, 4>& t, const std::array<double, 4>& v)
{
    // Newton divided differences, then expand the nested form.
    std::array<double, 4> dd = v;
    for (int level = 1; level < 4; ++level)
        for (int i = 3; i >= level; --i)
            dd[i] = (dd[i] - dd[i - 1]) / (t[i] - t[i - level]);

    // Expand p(t) = dd0 + (t-t0)(dd1 + (t-t1)(dd2 + (t-t2) dd3)) from the inside out.
    std::array<double, 4> poly{dd[3], 0.0, 0.0, 0.0};
    for (int i = 2, degree = 0; i >= 0; --i, ++degree) {
        std::array<double, 4> next{};
        for (int j = 0; j <= degree; ++j) {
            next[j + 1] += poly[j];
            next[j] -= t[i] * poly[j];
        }
        next[0] += dd[i];
        poly = next;
    }
    return poly;
}

double integrate_cubic(const std::array<double, 4>& c, double lo, double hi)
{
    auto antideriv = [&](double t) { return t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0))); };
    return antideriv(hi) - antideriv(lo);
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test)
{
    const auto& pa = anchor.points();
    const auto& pt = test.points();
    const double lo = std::max(pa.front().psnr, pt.front().psnr);
    const double hi = std::min(pa.back().psnr, pt.back().psnr);
    if (!(hi > lo))
        throw Error(ErrorKind::InvalidArgument, "bd_rate: the PSNR ranges of the two curves do not overlap");

    const double centre = 0.5 * (lo + hi);
    auto fit = [&](const std::array<RDPoint, 4>& pts) {
        std::array<double, 4> t{}, v{};
        for (std::size_t i = 0; i < 4; ++i) {
            t[i] = pts[i].psnr - centre;
            v[i] = std::log10(pts[i].bits);
        }
        return interpolating_cubic(t, v);
    };
    const double ia = integrate_cubic(fit(pa), lo - centre, hi - centre);
    const double it = integrate_cubic(fit(pt), lo - centre, hi - centre);
    const double delta = (it - ia) / (hi - lo);
    return (std::pow(10.0, delta) - 1.0) * 100.0;
}

}  // namespace drpg
