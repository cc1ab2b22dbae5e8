#include "drpg/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>

#include "drpg/error.hpp"
#include "drpg/model.hpp"
#include "drpg/simd/kernels.hpp"

namespace drpg {

void SearchConfig::validate() const
{
    if (search_range < 1)
        throw Error(ErrorKind::InvalidArgument, "search_range must be >= 1");
    if (!(lambda_mv >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "lambda_mv must be non-negative");
    if (block_size < 1)
        throw Error(ErrorKind::InvalidArgument, "block_size must be >= 1");
}

int se_golomb_bits(int v)
{
    const std::uint64_t code = v > 0 ? 2 * static_cast<std::uint64_t>(v) - 1 : 2 * static_cast<std::uint64_t>(-static_cast<std::int64_t>(v));
    return 2 * (std::bit_width(code + 1) - 1) + 1;
}

int mv_bits(MotionVectorQ mv)
{
    return se_golomb_bits(mv.x4) + se_golomb_bits(mv.y4);
}

int search_margin(const SearchConfig& cfg)
{
    return cfg.search_range + 8;
}

namespace {

struct Candidate {
    MotionVectorQ mv;
    double cost;
    std::uint32_t sad;
};

bool better(const Candidate& a, const Candidate& b)
{
    if (a.cost != b.cost)
        return a.cost < b.cost;
    return a.mv.l1() < b.mv.l1();
}

}  // namespace

SearchResult motion_search(const PaddedPlane& ref, const Plane& cur, Point origin, const SearchConfig& cfg)
{
    cfg.validate();
    if (ref.width() != cur.width() || ref.height() != cur.height())
        throw Error(ErrorKind::ShapeMismatch, "motion_search: reference and current frames differ in size");
    if (origin.x < 0 || origin.y < 0 || origin.x >= cur.width() || origin.y >= cur.height())
        throw Error(ErrorKind::OutOfBounds, "motion_search: block origin (" + std::to_string(origin.x) + "," +
                                                std::to_string(origin.y) + ") outside the current frame");
    if (ref.margin() < search_margin(cfg))
        throw Error(ErrorKind::InvalidArgument, "motion_search: padded reference margin too small for search range");

    const int bw = std::min(cfg.block_size, cur.width() - origin.x);
    const int bh = std::min(cfg.block_size, cur.height() - origin.y);
    const std::uint8_t* cur_ptr = cur.row(origin.y) + origin.x;
    const std::ptrdiff_t cur_stride = cur.width();
    const auto& kern = simd::active_kernels();
    const int range = cfg.search_range;

    auto evaluate = [&](MotionVectorQ mv) {
        std::uint32_t sad = 0;
        if ((mv.x4 & 3) == 0 && (mv.y4 & 3) == 0) {
            sad = kern.sad_u8(cur_ptr, cur_stride, ref.ptr(origin.x + mv.x4 / 4, origin.y + mv.y4 / 4), ref.stride(), bw, bh);
        } else {
            const Plane pred = interpolate_block(ref, origin, bw, bh, mv);
            sad = kern.sad_u8(cur_ptr, cur_stride, pred.row(0), bw, bw, bh);
        }
        return Candidate{mv, sad + cfg.lambda_mv * mv_bits(mv), sad};
    };

    Candidate best = evaluate({-4 * range, -4 * range});
    for (int dy = -range; dy <= range; ++dy) {
        for (int dx = -range; dx <= range; ++dx) {
            const Candidate c = evaluate({4 * dx, 4 * dy});
            if (better(c, best))
                best = c;
        }
    }

    for (int step : {2, 1}) {
        const MotionVectorQ centre = best.mv;
        Candidate round_best = best;
        bool any = false;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const MotionVectorQ mv{centre.x4 + step * dx, centre.y4 + step * dy};
                const Candidate c = (dx == 0 && dy == 0) ? best : evaluate(mv);
                if (!any || better(c, round_best))
                    round_best = c;
                any = true;
            }
        }
        best = round_best;
    }
    return {best.mv, best.cost, best.sad};
}

SearchResult motion_search(const Plane& ref, const Plane& cur, Point origin, const SearchConfig& cfg)
{
    cfg.validate();
    return motion_search(PaddedPlane(ref, search_margin(cfg)), cur, origin, cfg);
}

ReferenceList::ReferenceList(std::vector<Plane> pictures)
    : pictures_(std::move(pictures))
{
    if (pictures_.empty())
        throw Error(ErrorKind::InvalidArgument, "reference list must hold at least one picture");
    for (const Plane& p : pictures_)
        if (!p.same_size(pictures_.front()))
            throw Error(ErrorKind::ShapeMismatch, "reference pictures differ in size");
}

ReferenceList substitute_reference(const ReferenceList& list, const Plane& generated)
{
    if (!generated.same_size(list[0]))
        throw Error(ErrorKind::ShapeMismatch, "substitute_reference: generated picture is " +
                                                  std::to_string(generated.width()) + "x" +
                                                  std::to_string(generated.height()) + ", references are " +
                                                  std::to_string(list[0].width()) + "x" +
                                                  std::to_string(list[0].height()));
    std::vector<Plane> pics = list.pictures();
    pics[0] = generated;
    return ReferenceList(std::move(pics));
}

int quantize_residual(int residual, int q)
{
    return static_cast<int>(std::lround(static_cast<double>(residual) / q));
}

std::int64_t residual_bits(std::span<const int> residual, int q)
{
    if (q < 1)
        throw Error(ErrorKind::InvalidArgument, "quantizer step must be >= 1");
    std::int64_t bits = 0;
    for (int r : residual)
        bits += se_golomb_bits(quantize_residual(r, q));
    return bits;
}

int reference_index_bits(std::size_t list_size)
{
    return list_size <= 1 ? 0 : static_cast<int>(std::bit_width(list_size - 1));
}

FrameEncoding encode_frame_proxy(const ReferenceList& refs, const Plane& cur, const SearchConfig& cfg, int q)
{
    cfg.validate();
    if (q < 1)
        throw Error(ErrorKind::InvalidArgument, "quantizer step must be >= 1");
    if (!cur.same_size(refs[0]))
        throw Error(ErrorKind::ShapeMismatch, "encode_frame_proxy: current frame size differs from references");

    std::vector<PaddedPlane> padded;
    padded.reserve(refs.size());
    for (const Plane& p : refs.pictures())
        padded.emplace_back(p, search_margin(cfg));

    FrameEncoding enc;
    enc.recon = Plane(cur.width(), cur.height());
    const int idx_bits = reference_index_bits(refs.size());
    const int bs = cfg.block_size;
    std::vector<int> residual;

    for (int by = 0; by < cur.height(); by += bs) {
        for (int bx = 0; bx < cur.width(); bx += bs) {
            const Point origin{bx, by};
            const int bw = std::min(bs, cur.width() - bx);
            const int bh = std::min(bs, cur.height() - by);

            SearchResult best;
            int best_ref = 0;
            for (std::size_t r = 0; r < refs.size(); ++r) {
                const SearchResult s = motion_search(padded[r], cur, origin, cfg);
                if (r == 0 || s.cost < best.cost) {
                    best = s;
                    best_ref = static_cast<int>(r);
                }
            }

            const Plane pred = interpolate_block(padded[static_cast<std::size_t>(best_ref)], origin, bw, bh, best.mv);
            residual.clear();
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x)
                    residual.push_back(int(cur.at(bx + x, by + y)) - int(pred.at(x, y)));

            double bits = mv_bits(best.mv) + idx_bits;
            std::size_t i = 0;
            for (int y = 0; y < bh; ++y) {
                for (int x = 0; x < bw; ++x, ++i) {
                    const int level = quantize_residual(residual[i], q);
                    bits += se_golomb_bits(level);
                    enc.recon.at(bx + x, by + y) =
                        static_cast<std::uint8_t>(std::clamp(int(pred.at(x, y)) + level * q, 0, 255));
                }
            }
            enc.bits += bits;
            enc.mv_field.push_back({bx, by, best_ref, best.mv, best.sad});
        }
    }
    return enc;
}

FrameEncoding encode_intra_proxy(const Plane& frame, int q)
{
    if (q < 1)
        throw Error(ErrorKind::InvalidArgument, "quantizer step must be >= 1");
    FrameEncoding enc;
    enc.recon = Plane(frame.width(), frame.height());
    auto src = frame.samples();
    auto dst = enc.recon.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const int level = quantize_residual(src[i], q);
        enc.bits += se_golomb_bits(level);
        dst[i] = static_cast<std::uint8_t>(std::clamp(level * q, 0, 255));
    }
    return enc;
}

SequenceEncoding encode_sequence(std::span<const Plane> sequence, const GeneratorNet* net, const SweepConfig& cfg,
                                 int q)
{
    if (sequence.size() < 2)
        throw Error(ErrorKind::InvalidArgument, "sequence coding needs at least 2 frames");
    if (cfg.reference_count < 1)
        throw Error(ErrorKind::InvalidArgument, "reference_count must be >= 1");

    SequenceEncoding out;
    std::vector<Plane>& recons = out.recon;
    double psnr_sum = 0.0;
    auto account = [&](FrameEncoding enc, const Plane& src) {
        const double p = psnr(enc.recon, src);
        out.frame_bits.push_back(enc.bits);
        out.frame_psnr.push_back(p);
        out.mv_fields.push_back(std::move(enc.mv_field));
        psnr_sum += std::min(p, cfg.psnr_ceiling);
        recons.push_back(std::move(enc.recon));
    };

    account(encode_intra_proxy(sequence[0], q), sequence[0]);
    for (std::size_t t = 1; t < sequence.size(); ++t) {
        std::vector<Plane> list;
        const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.reference_count), recons.size());
        for (std::size_t i = 0; i < n; ++i)
            list.push_back(recons[recons.size() - 1 - i]);
        ReferenceList refs(std::move(list));
        if (net)
            refs = substitute_reference(refs, generate_reference(*net, recons.back()));
        account(encode_frame_proxy(refs, sequence[t], cfg.search, q), sequence[t]);
    }
    const double frames = static_cast<double>(sequence.size());
    double bits = 0.0;
    for (double b : out.frame_bits)
        bits += b;
    out.summary = {bits / frames, psnr_sum / frames};
    return out;
}

std::vector<RDPoint> rd_sweep(std::span<const Plane> sequence, const GeneratorNet* net, const SweepConfig& cfg,
                              std::span<const int> q_set)
{
    std::vector<RDPoint> points;
    for (int q : q_set)
        points.push_back(encode_sequence(sequence, net, cfg, q).summary);
    return points;
}

CsvTable mv_field_csv(std::span<const BlockMotion> field)
{
    CsvTable t;
    t.header = {"block_x", "block_y", "ref_idx", "mv_x_q4", "mv_y_q4", "sad"};
    for (const BlockMotion& b : field)
        t.rows.push_back({std::to_string(b.block_x), std::to_string(b.block_y), std::to_string(b.ref_idx),
                          std::to_string(b.mv.x4), std::to_string(b.mv.y4), std::to_string(b.sad)});
    return t;
}

}  // namespace drpg
