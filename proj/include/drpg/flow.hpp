#pragma once

// Training-pair extraction: per-block Lucas-Kanade motion between two
// consecutive frames, then the input block is taken from the reference at
// the motion vector rounded towards the top-left integer position.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drpg/plane.hpp"

namespace drpg {

struct Vec2d {
    double x = 0.0;
    double y = 0.0;
};

struct Vec2f {
    float x = 0.0f;
    float y = 0.0f;
    friend bool operator==(const Vec2f&, const Vec2f&) = default;
};

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct ExtractionConfig {
    int block_size = 32;
    int stride = 32;
    int lk_iterations = 5;
    double lk_eps = 0.01;               // px
    double mv_clamp = 8.0;              // px
    double mv_step = 1.0 / 16.0;        // px grid the vector is snapped to before flooring; 0 keeps it raw
    double degeneracy_threshold = 1e-3; // per pixel, scaled by block area
    bool drop_degenerate = false;

    void validate() const;
};

struct FlowResult {
    Vec2d mv;  // cur(p) ~ ref(p + mv)
    bool degenerate = false;
};

/// Iterative Lucas-Kanade for the square block at `origin` with side `size`.
/// Gradients are central differences of the bilinearly warped reference;
/// samples outside the picture are replicated.
FlowResult lucas_kanade_mv(const Plane& ref, const Plane& cur, Point origin, int size, const ExtractionConfig& cfg);

/// Componentwise floor: the integer position up and to the left of `mv`.
Point round_mv_topleft(Vec2d mv);

struct SamplePair {
    Plane x_block;  // reference block at origin + round_mv_topleft(mv)
    Plane y_block;  // current block at origin
    Point origin;
    Vec2f mv;

    friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

/// Tiles `cur` on the configured grid in raster order and emits one pair per
/// tile whose input window fits inside `ref`.
std::vector<SamplePair> extract_pairs(const Plane& ref, const Plane& cur, const ExtractionConfig& cfg);

/// Dataset file: "DRPD", u32 version, u32 block size, u64 count, then per
/// pair origin (2 x u32), mv (2 x f32), X bytes, Y bytes. Little-endian.
void write_dataset(const std::vector<SamplePair>& pairs, int block_size, const std::filesystem::path& path);

struct Dataset {
    int block_size = 0;
    std::vector<SamplePair> pairs;
};

Dataset read_dataset(const std::filesystem::path& path);

/// Bilinear sample with edge replication.
double sample_bilinear(const Plane& p, double x, double y);

}  // namespace drpg
