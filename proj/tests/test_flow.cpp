#include <doctest.h>

#include <cmath>

#include "drpg/error.hpp"
#include "drpg/flow.hpp"
#include "drpg/io.hpp"
#include "support/synth.hpp"

using namespace drpg;
using namespace drpg::test;

namespace {

Plane bilinear_shift(const Plane& ref, double sx, double sy)
{
    Plane out(ref.width(), ref.height());
    for (int y = 0; y < ref.height(); ++y)
        for (int x = 0; x < ref.width(); ++x)
            out.at(x, y) = to_u8(sample_bilinear(ref, x + sx, y + sy));
    return out;
}

const Texture& smooth_texture()
{
    static const Texture t = Texture::make(77, 10, 14.0, 40.0, 90.0);
    return t;
}

}  // namespace

TEST_CASE("top-left rounding is a componentwise floor")
{
    CHECK(round_mv_topleft({1.25, -0.5}) == Point{1, -1});
    CHECK(round_mv_topleft({3.0, 2.0}) == Point{3, 2});
    CHECK(round_mv_topleft({-0.25, 0.75}) == Point{-1, 0});
    for (double v = -3.0; v <= 3.0; v += 0.125) {
        const Point p = round_mv_topleft({v, -v});
        CHECK(v - p.x >= 0.0);
        CHECK(v - p.x < 1.0);
        CHECK(-v - p.y >= 0.0);
        CHECK(-v - p.y < 1.0);
    }
}

TEST_CASE("integer shifts up to 4 px are recovered within 0.1 px")
{
    const Texture& tex = smooth_texture();
    const Plane ref = render(tex, 64, 64, 0.0, 0.0);
    const ExtractionConfig cfg;
    for (int sy = -4; sy <= 4; sy += 2)
        for (int sx = -4; sx <= 4; ++sx) {
            const Plane cur = render(tex, 64, 64, sx, sy);
            const FlowResult r = lucas_kanade_mv(ref, cur, {16, 16}, 32, cfg);
            CAPTURE(sx);
            CAPTURE(sy);
            CHECK_FALSE(r.degenerate);
            CHECK(std::abs(r.mv.x - sx) < 0.1);
            CHECK(std::abs(r.mv.y - sy) < 0.1);
        }
}

TEST_CASE("quarter-sample shifts are recovered within 0.25 px")
{
    const Plane ref = render(smooth_texture(), 64, 64, 0.0, 0.0);
    for (double s : {-1.75, -0.75, -0.25, 0.25, 0.5, 1.25, 2.75}) {
        const Plane cur = bilinear_shift(ref, s, -s / 2);
        const FlowResult r = lucas_kanade_mv(ref, cur, {16, 16}, 32, ExtractionConfig{});
        CAPTURE(s);
        CHECK(std::abs(r.mv.x - s) < 0.25);
        CHECK(std::abs(r.mv.y + s / 2) < 0.25);
    }
}

TEST_CASE("flat blocks are degenerate with zero motion")
{
    const Plane flat(64, 64, 90);
    const FlowResult r = lucas_kanade_mv(flat, flat, {0, 0}, 32, ExtractionConfig{});
    CHECK(r.degenerate);
    CHECK(r.mv.x == 0.0);
    CHECK(r.mv.y == 0.0);
}

TEST_CASE("a block outside the frame is an error")
{
    const Plane p = noise_plane(32, 32, 1);
    CHECK_THROWS_AS(lucas_kanade_mv(p, p, {8, 8}, 32, ExtractionConfig{}), Error);
}

TEST_CASE("static scene gives X == Y for every tile")
{
    const Plane f = render(smooth_texture(), 96, 96, 3.0, 5.0);
    const auto pairs = extract_pairs(f, f, ExtractionConfig{});
    CHECK(pairs.size() == 9);
    for (const auto& p : pairs) {
        CHECK(p.x_block == p.y_block);
        CHECK(p.mv == Vec2f{0.0f, 0.0f});
    }
    CHECK(pairs[1].origin == Point{32, 0});
    CHECK(pairs[3].origin == Point{0, 32});
}

TEST_CASE("half-pel shift keeps X at the floor offset")
{
    const Plane ref = render(smooth_texture(), 96, 96, 0.0, 0.0);
    const Plane cur = bilinear_shift(ref, 0.5, 0.0);
    const auto pairs = extract_pairs(ref, cur, ExtractionConfig{});
    REQUIRE(pairs.size() >= 4);
    for (const auto& p : pairs) {
        if (p.origin.x + 32 >= 96)
            continue;  // right column sees the replicated edge
        CAPTURE(p.origin.x);
        CAPTURE(p.origin.y);
        CHECK(p.mv.y == 0.0f);
        CHECK(p.mv.x * 16.0f == std::round(p.mv.x * 16.0f));
        CHECK(p.mv.x > 0.25f);
        CHECK(p.mv.x < 0.75f);
        CHECK(p.x_block == ref.crop(p.origin.x, p.origin.y, 32, 32));
        CHECK_FALSE(p.x_block == p.y_block);
    }
}

TEST_CASE("raw vectors are kept when snapping is off")
{
    const Plane ref = render(smooth_texture(), 64, 64, 0.0, 0.0);
    const Plane cur = bilinear_shift(ref, 0.3, 0.2);
    ExtractionConfig cfg;
    cfg.mv_step = 0.0;
    const auto pairs = extract_pairs(ref, cur, cfg);
    const FlowResult r = lucas_kanade_mv(ref, cur, {0, 0}, 32, cfg);
    CHECK(pairs[0].mv == Vec2f{static_cast<float>(r.mv.x), static_cast<float>(r.mv.y)});
}

TEST_CASE("tiles whose input window leaves the frame are dropped")
{
    const Texture& tex = smooth_texture();
    const Plane ref = render(tex, 64, 64, 0.0, 0.0);
    const Plane cur = render(tex, 64, 64, -3.0, 0.0);
    const auto pairs = extract_pairs(ref, cur, ExtractionConfig{});
    // Left column points at x = -3 and is dropped.
    CHECK(pairs.size() == 2);
    for (const auto& p : pairs)
        CHECK(p.origin.x == 32);
}

TEST_CASE("extraction is deterministic and supports overlapping tiles")
{
    const Texture& tex = smooth_texture();
    const Plane ref = render(tex, 64, 64, 0.0, 0.0);
    const Plane cur = render(tex, 64, 64, 0.6, 0.3);
    ExtractionConfig cfg;
    cfg.block_size = 16;
    cfg.stride = 8;
    const auto a = extract_pairs(ref, cur, cfg);
    CHECK(a == extract_pairs(ref, cur, cfg));
    CHECK(a.size() == 49);
}

TEST_CASE("dataset files round-trip")
{
    TempDir dir("flow");
    const Texture& tex = smooth_texture();
    const auto pairs = extract_pairs(render(tex, 64, 64, 0, 0), render(tex, 64, 64, 0.4, 0.7), ExtractionConfig{});
    write_dataset(pairs, 32, dir / "d.drpd");
    const Dataset ds = read_dataset(dir / "d.drpd");
    CHECK(ds.block_size == 32);
    CHECK(ds.pairs == pairs);

    write_dataset({}, 16, dir / "e.drpd");
    const Dataset empty = read_dataset(dir / "e.drpd");
    CHECK(empty.pairs.empty());
    CHECK(empty.block_size == 16);
}

TEST_CASE("dataset count inconsistent with the payload is an error")
{
    TempDir dir("flow_bad");
    const Plane f = noise_plane(64, 32, 2);
    write_dataset(extract_pairs(f, f, ExtractionConfig{}), 32, dir / "d.drpd");
    auto bytes = read_file_bytes(dir / "d.drpd");
    bytes[12] = 3;  // pair count low byte
    write_file_atomic(dir / "c.drpd", std::span<const std::uint8_t>(bytes));
    CHECK_THROWS_AS(read_dataset(dir / "c.drpd"), Error);
    bytes.resize(bytes.size() - 1);
    bytes[12] = 2;
    write_file_atomic(dir / "t.drpd", std::span<const std::uint8_t>(bytes));
    CHECK_THROWS_AS(read_dataset(dir / "t.drpd"), Error);
}

TEST_CASE("frames of different size are rejected")
{
    CHECK_THROWS_AS(extract_pairs(Plane(64, 64), Plane(64, 32), ExtractionConfig{}), Error);
}
