#include "drpg/flow.hpp"

#include <algorithm>
#include <cmath>

#include "binary.hpp"
#include "drpg/error.hpp"
#include "drpg/io.hpp"

namespace drpg {

void ExtractionConfig::validate() const
{
    if (block_size < 8)
        throw Error(ErrorKind::InvalidArgument, "block_size must be >= 8, got " + std::to_string(block_size));
    if (stride < 1)
        throw Error(ErrorKind::InvalidArgument, "stride must be >= 1");
    if (lk_iterations < 1)
        throw Error(ErrorKind::InvalidArgument, "lk_iterations must be >= 1");
    if (!(lk_eps > 0.0) || !(mv_clamp > 0.0) || !(degeneracy_threshold >= 0.0) || !(mv_step >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "lk_eps and mv_clamp must be positive, degeneracy_threshold and mv_step non-negative");
}

double sample_bilinear(const Plane& p, double x, double y)
{
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    const double ax = x - fx0;
    const double ay = y - fy0;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double top = (1.0 - ax) * p.clamped(x0, y0) + ax * p.clamped(x0 + 1, y0);
    const double bottom = (1.0 - ax) * p.clamped(x0, y0 + 1) + ax * p.clamped(x0 + 1, y0 + 1);
    return (1.0 - ay) * top + ay * bottom;
}

namespace {

struct NormalEquations {
    double gxx = 0, gxy = 0, gyy = 0;
    double bx = 0, by = 0;

    double min_eigenvalue() const
    {
        const double mean = 0.5 * (gxx + gyy);
        const double half_diff = 0.5 * (gxx - gyy);
        return mean - std::sqrt(half_diff * half_diff + gxy * gxy);
    }
};

NormalEquations accumulate(const Plane& ref, const Plane& cur, Point origin, int size, Vec2d v)
{
    NormalEquations eq;
    for (int y = origin.y; y < origin.y + size; ++y) {
        for (int x = origin.x; x < origin.x + size; ++x) {
            const double rx = x + v.x;
            const double ry = y + v.y;
            const double warped = sample_bilinear(ref, rx, ry);
            const double gx = 0.5 * (sample_bilinear(ref, rx + 1.0, ry) - sample_bilinear(ref, rx - 1.0, ry));
            const double gy = 0.5 * (sample_bilinear(ref, rx, ry + 1.0) - sample_bilinear(ref, rx, ry - 1.0));
            const double it = cur.at(x, y) - warped;
            eq.gxx += gx * gx;
            eq.gxy += gx * gy;
            eq.gyy += gy * gy;
            eq.bx += gx * it;
            eq.by += gy * it;
        }
    }
    return eq;
}

}  // namespace

FlowResult lucas_kanade_mv(const Plane& ref, const Plane& cur, Point origin, int size, const ExtractionConfig& cfg)
{
    if (!ref.same_size(cur))
        throw Error(ErrorKind::ShapeMismatch, "lucas_kanade_mv: reference and current frames differ in size");
    if (size < 1 || origin.x < 0 || origin.y < 0 || origin.x + size > cur.width() || origin.y + size > cur.height())
        throw Error(ErrorKind::OutOfBounds, "lucas_kanade_mv: block (" + std::to_string(origin.x) + "," +
                                                std::to_string(origin.y) + ") size " + std::to_string(size) +
                                                " is outside the " + std::to_string(cur.width()) + "x" +
                                                std::to_string(cur.height()) + " frame");

    FlowResult result;
    Vec2d v;
    const double area = static_cast<double>(size) * size;
    for (int it = 0; it < cfg.lk_iterations; ++it) {
        const NormalEquations eq = accumulate(ref, cur, origin, size, v);
        if (it == 0 && eq.min_eigenvalue() < cfg.degeneracy_threshold * area) {
            result.degenerate = true;
            return result;
        }
        const double det = eq.gxx * eq.gyy - eq.gxy * eq.gxy;
        if (!(std::abs(det) > 0.0))
            break;
        // Minimizes sum (ref(p+v) + grad . d - cur(p))^2 over d.
        const Vec2d step{(eq.gyy * eq.bx - eq.gxy * eq.by) / det, (eq.gxx * eq.by - eq.gxy * eq.bx) / det};
        v.x = std::clamp(v.x + step.x, -cfg.mv_clamp, cfg.mv_clamp);
        v.y = std::clamp(v.y + step.y, -cfg.mv_clamp, cfg.mv_clamp);
        if (std::hypot(step.x, step.y) < cfg.lk_eps)
            break;
    }
    result.mv = v;
    return result;
}

Point round_mv_topleft(Vec2d mv)
{
    return {static_cast<int>(std::floor(mv.x)), static_cast<int>(std::floor(mv.y))};
}

std::vector<SamplePair> extract_pairs(const Plane& ref, const Plane& cur, const ExtractionConfig& cfg)
{
    cfg.validate();
    if (!ref.same_size(cur))
        throw Error(ErrorKind::ShapeMismatch, "extract_pairs: reference is " + std::to_string(ref.width()) + "x" +
                                                  std::to_string(ref.height()) + ", current is " +
                                                  std::to_string(cur.width()) + "x" + std::to_string(cur.height()));
    const int bs = cfg.block_size;
    std::vector<SamplePair> pairs;
    for (int by = 0; by + bs <= cur.height(); by += cfg.stride) {
        for (int bx = 0; bx + bs <= cur.width(); bx += cfg.stride) {
            const Point origin{bx, by};
            const FlowResult flow = lucas_kanade_mv(ref, cur, origin, bs, cfg);
            if (flow.degenerate && cfg.drop_degenerate)
                continue;
            Vec2d mv = flow.degenerate ? Vec2d{} : flow.mv;
            if (cfg.mv_step > 0.0)
                mv = {std::round(mv.x / cfg.mv_step) * cfg.mv_step, std::round(mv.y / cfg.mv_step) * cfg.mv_step};
            const Point offset = round_mv_topleft(mv);
            const int rx = bx + offset.x;
            const int ry = by + offset.y;
            if (rx < 0 || ry < 0 || rx + bs > ref.width() || ry + bs > ref.height())
                continue;
            SamplePair pair;
            pair.x_block = ref.crop(rx, ry, bs, bs);
            pair.y_block = cur.crop(bx, by, bs, bs);
            pair.origin = origin;
            pair.mv = {static_cast<float>(mv.x), static_cast<float>(mv.y)};
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

namespace {
constexpr std::uint32_t kDatasetVersion = 1;
}

void write_dataset(const std::vector<SamplePair>& pairs, int block_size, const std::filesystem::path& path)
{
    if (block_size < 1)
        throw Error(ErrorKind::InvalidArgument, "write_dataset: block size must be positive");
    detail::ByteWriter w;
    w.raw("DRPD");
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(block_size));
    w.u64(pairs.size());
    for (const SamplePair& p : pairs) {
        if (p.x_block.width() != block_size || p.x_block.height() != block_size || !p.x_block.same_size(p.y_block))
            throw Error(ErrorKind::ShapeMismatch, "write_dataset: pair at (" + std::to_string(p.origin.x) + "," +
                                                      std::to_string(p.origin.y) + ") is not " +
                                                      std::to_string(block_size) + "x" + std::to_string(block_size));
        w.u32(static_cast<std::uint32_t>(p.origin.x));
        w.u32(static_cast<std::uint32_t>(p.origin.y));
        w.f32(p.mv.x);
        w.f32(p.mv.y);
        w.raw(p.x_block.samples());
        w.raw(p.y_block.samples());
    }
    write_file_atomic(path, w.bytes());
}

Dataset read_dataset(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    const std::string context = "dataset '" + path.string() + "'";
    detail::ByteReader r(bytes, context);
    if (r.string(4) != "DRPD")
        throw Error(ErrorKind::Format, context + ": bad magic (expected DRPD)");
    const std::uint32_t version = r.u32();
    if (version != kDatasetVersion)
        throw Error(ErrorKind::Format, context + ": unsupported version " + std::to_string(version));
    Dataset ds;
    ds.block_size = static_cast<int>(r.u32());
    const std::uint64_t count = r.u64();
    if (ds.block_size < 1)
        throw Error(ErrorKind::Format, context + ": block size must be positive");
    const std::size_t block_bytes = static_cast<std::size_t>(ds.block_size) * ds.block_size;
    const std::size_t record = 16 + 2 * block_bytes;
    if (count != r.remaining() / record || r.remaining() % record != 0)
        throw Error(ErrorKind::Format, context + ": pair count " + std::to_string(count) + " inconsistent with " +
                                           std::to_string(r.remaining()) + " payload bytes");
    ds.pairs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        SamplePair p;
        p.origin.x = static_cast<int>(r.u32());
        p.origin.y = static_cast<int>(r.u32());
        p.mv.x = r.f32();
        p.mv.y = r.f32();
        auto xb = r.raw(block_bytes);
        auto yb = r.raw(block_bytes);
        p.x_block = Plane(ds.block_size, ds.block_size, std::vector<std::uint8_t>(xb.begin(), xb.end()));
        p.y_block = Plane(ds.block_size, ds.block_size, std::vector<std::uint8_t>(yb.begin(), yb.end()));
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

}  // namespace drpg
