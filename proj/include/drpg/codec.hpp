#pragma once

// Desk-scale P-frame codec proxy: quarter-sample block motion search over a
// reference picture list, scalar quantization of the spatial residual, and
// signed Exp-Golomb code lengths as the rate estimate. It ranks reference
// pictures; it is not a bit-accurate model of any standard encoder.

#include <cstdint>
#include <span>
#include <vector>

#include "drpg/interp.hpp"
#include "drpg/io.hpp"
#include "drpg/metrics.hpp"
#include "drpg/plane.hpp"

namespace drpg {

struct GeneratorNet;

struct SearchConfig {
    int search_range = 16;  // integer px
    double lambda_mv = 4.0; // SAD units per motion bit
    int block_size = 32;

    void validate() const;
};

/// Length of the signed Exp-Golomb code for v (0 -> 1 bit, 1 -> 3, -1 -> 3, ...).
int se_golomb_bits(int v);

/// Code length of both components, zero predictor.
int mv_bits(MotionVectorQ mv);

struct SearchResult {
    MotionVectorQ mv;
    double cost = 0.0;  // sad + lambda_mv * mv_bits
    std::uint32_t sad = 0;
};

/// Full integer search over +-search_range, then half-sample and
/// quarter-sample refinement over the 8 neighbours of the running best.
/// Ties go to the smaller |mv|_1, then to the earlier candidate in raster
/// order. The block is clipped to the picture at the right/bottom edges.
SearchResult motion_search(const Plane& ref, const Plane& cur, Point origin, const SearchConfig& cfg);
SearchResult motion_search(const PaddedPlane& ref, const Plane& cur, Point origin, const SearchConfig& cfg);

/// Margin a PaddedPlane needs for motion_search with this configuration.
int search_margin(const SearchConfig& cfg);

/// Ordered reference pictures sharing one size; never empty.
class ReferenceList {
public:
    explicit ReferenceList(std::vector<Plane> pictures);

    std::size_t size() const noexcept { return pictures_.size(); }
    const Plane& operator[](std::size_t i) const { return pictures_[i]; }
    const std::vector<Plane>& pictures() const noexcept { return pictures_; }

private:
    std::vector<Plane> pictures_;
};

/// Replaces the first reference with the generated picture.
ReferenceList substitute_reference(const ReferenceList& list, const Plane& generated);

struct BlockMotion {
    int block_x = 0;
    int block_y = 0;
    int ref_idx = 0;
    MotionVectorQ mv;
    std::uint32_t sad = 0;
};

struct FrameEncoding {
    double bits = 0.0;
    Plane recon;
    std::vector<BlockMotion> mv_field;
};

/// Quantizer index for one residual sample: round-half-away-from-zero of r/q.
int quantize_residual(int residual, int q);

/// Rate of a residual field under quantizer step q.
std::int64_t residual_bits(std::span<const int> residual, int q);

int reference_index_bits(std::size_t list_size);

FrameEncoding encode_frame_proxy(const ReferenceList& refs, const Plane& cur, const SearchConfig& cfg, int q);

/// Intra stand-in: every sample quantized directly.
FrameEncoding encode_intra_proxy(const Plane& frame, int q);

struct SweepConfig {
    SearchConfig search;
    int reference_count = 1;  // most recent reconstructions kept in the list
    double psnr_ceiling = 100.0;  // per-frame cap when averaging (lossless frames)
};

struct SequenceEncoding {
    std::vector<double> frame_bits;
    std::vector<double> frame_psnr;  // uncapped
    std::vector<std::vector<BlockMotion>> mv_fields;  // empty entry for the intra frame
    std::vector<Plane> recon;
    RDPoint summary;  // mean bits/frame, mean capped PSNR
};

/// Closed-loop coding of a whole sequence at one quantizer step.
SequenceEncoding encode_sequence(std::span<const Plane> sequence, const GeneratorNet* net, const SweepConfig& cfg,
                                 int q);

/// Codes the sequence once per quantizer step. Frame 0 is intra; frame t
/// predicts from the reconstructions before it, with the first reference
/// replaced by generate_reference(net, recon[t-1]) when `net` is given.
std::vector<RDPoint> rd_sweep(std::span<const Plane> sequence, const GeneratorNet* net, const SweepConfig& cfg,
                              std::span<const int> q_set);

CsvTable mv_field_csv(std::span<const BlockMotion> field);

}  // namespace drpg
