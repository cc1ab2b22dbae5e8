// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "drpg/codec.hpp"
#include "drpg/error.hpp"
#include "drpg/flow.hpp"
#include "drpg/interp.hpp"
#include "drpg/io.hpp"
#include "drpg/metrics.hpp"
#include "drpg/model.hpp"
#include "drpg/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/probes.hpp"
#include "support/synth.hpp"

using namespace drpg;
using namespace drpg::test;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
};

// 1 ---------------------------------------------------------------------------

Outcome gradients()
{
    Outcome o;
    double worst = 0.0;
    for (int d : {1, 2, 3, 5})
        for (int k : {1, 3}) {
            ConvParams p = random_conv(3, 2, k, d, 100 + 10 * d + k);
            Tensor x = random_tensor({2, 3, 9, 10}, 200 + d);
            const Tensor g = random_tensor({2, 2, 9, 10}, 300 + d);
            const ConvGrads an = conv2d_backward(x, p, g);
            const auto loss = [&] { return contract(g, conv2d_forward(x, p)); };
            for (double e : {relative_error(an.input.values(), numeric_gradient(x.values(), loss)),
                             relative_error(an.weights.values(), numeric_gradient(p.weights.values(), loss)),
                             relative_error(an.bias, numeric_gradient(p.bias, loss))})
                worst = std::max(worst, e);
        }
    {
        Tensor x = random_tensor({1, 3, 7, 7}, 7);
        for (double& v : x.values())
            if (std::abs(v) < 1e-3)
                v = 0.25;
        const Tensor g = random_tensor({1, 3, 7, 7}, 8);
        worst = std::max(worst, relative_error(relu_backward(x, g).values(),
                                               numeric_gradient(x.values(), [&] { return contract(g, relu(x)); })));
        Tensor p = random_tensor({2, 1, 5, 5}, 9);
        const Tensor t = random_tensor({2, 1, 5, 5}, 10);
        worst = std::max(worst, relative_error(mse_loss(p, t).grad.values(),
                                               numeric_gradient(p.values(), [&] { return mse_loss(p, t).loss; })));
    }
    o.require(worst < 1e-6, "layer error " + fmt("%.2e", worst) + " >= 1e-6");

    ModelConfig cfg = ModelConfig::tiny(3);
    cfg.seed = 5;
    GeneratorNet net = build_network(cfg);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> bias(0.01, 0.1);
    net.for_each_layer([&](const std::string&, ConvParams& p) {
        for (double& b : p.bias)
            b = bias(rng);
    });
    double net_worst = 0.0;
    std::string worst_layer;
    for (const LayerError& e : network_gradient_errors(net, random_tensor({1, 1, 10, 10}, 11, 0.0, 1.0),
                                                       random_tensor({1, 1, 10, 10}, 12))) {
        const double m = std::max(e.weights, e.bias);
        if (m >= net_worst) {
            net_worst = m;
            worst_layer = e.name;
        }
    }
    o.require(net_worst < 1e-5, "network error " + fmt("%.2e", net_worst) + " at " + worst_layer);
    o.note("max layer rel err " + fmt("%.2e", worst) + ", network " + fmt("%.2e", net_worst));
    return o;
}

// 2 ---------------------------------------------------------------------------

Outcome receptive_fields()
{
    Outcome o;
    GeneratorNet net = build_network(ModelConfig::tiny(2));
    std::string seen;
    const int expected[3] = {3, 9, 15};
    for (std::size_t b = 0; b < 3; ++b) {
        BranchSpec br = net.blocks[0].branches[b];
        for (ConvParams& p : br.layers)
            make_positive(p);
        const Footprint f = footprint(run_branch(br, impulse(2, 41)));
        o.require(f.width == expected[b] && f.height == expected[b],
                  "branch " + std::to_string(b) + " footprint " + std::to_string(f.width) + "x" + std::to_string(f.height));
        seen += (b ? "/" : "") + std::to_string(f.width);
    }
    DilatedInceptionBlock block = net.blocks[0];
    for (auto& br : block.branches)
        for (ConvParams& p : br.layers)
            make_positive(p);
    make_positive(block.fuse_concat);
    make_positive(block.fuse_skip);
    const Footprint f = footprint(block_forward(block, impulse(2, 41)));
    o.require(f.width <= 15 && f.height <= 15, "block support " + std::to_string(f.width));
    o.note("branches " + seen + ", block " + std::to_string(f.width) + "x" + std::to_string(f.height));
    return o;
}

// 3 ---------------------------------------------------------------------------

Outcome degeneracy()
{
    Outcome o;
    DilatedInceptionBlock block = build_network(ModelConfig::tiny(4)).blocks[1];
    block.k = 0.0;
    std::fill(block.fuse_skip.weights.values().begin(), block.fuse_skip.weights.values().end(), 0.0);
    std::fill(block.fuse_skip.bias.begin(), block.fuse_skip.bias.end(), 0.0);
    for (int c = 0; c < 4; ++c)
        block.fuse_skip.weights.at(c, c, 0, 0) = 1.0;
    const Tensor x = random_tensor({2, 4, 13, 11}, 3, 0.0, 5.0);
    o.require(block_forward(block, x) == x, "output differs from relu(input)");
    o.note("bit-exact on " + std::to_string(x.size()) + " samples");
    return o;
}

// 4 ---------------------------------------------------------------------------

Outcome interpolation()
{
    Outcome o;
    const InterpFilterSet& f = InterpFilterSet::standard();
    for (int frac = 1; frac <= 3; ++frac)
        o.require(std::accumulate(f.phase(frac).begin(), f.phase(frac).end(), 0) == 64, "taps of phase " + std::to_string(frac));

    const Plane ref = noise_plane(48, 48, 1);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            o.require(interpolate_block(ref, {16, 16}, 16, 16, {4 * dx, 4 * dy}) == ref.crop(16 + dx, 16 + dy, 16, 16),
                      "integer vector copy");

    int dc_ok = 0;
    for (int level : {0, 37, 128, 255})
        for (int fy = 0; fy < 4; ++fy)
            for (int fx = 0; fx < 4; ++fx) {
                const Plane flat(32, 32, static_cast<std::uint8_t>(level));
                const bool ok = interpolate_block(flat, {8, 8}, 16, 16, {fx, fy}) == Plane(16, 16, static_cast<std::uint8_t>(level));
                o.require(ok, "DC phase " + std::to_string(fx) + "," + std::to_string(fy));
                dc_ok += ok;
            }

    Plane ramp(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            ramp.at(x, y) = static_cast<std::uint8_t>(4 * x);
    const Plane h = interpolate_block(ramp, {8, 8}, 40, 40, {2, 0});
    bool ramp_ok = true;
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            ramp_ok = ramp_ok && h.at(x, y) == 4 * (8 + x) + 2;
    o.require(ramp_ok, "half-sample ramp");
    o.note(std::to_string(dc_ok) + "/64 DC cases, ramp exact");
    return o;
}

// 5 ---------------------------------------------------------------------------

Outcome flow()
{
    Outcome o;
    const Texture tex = Texture::make(77, 10, 14.0, 40.0, 90.0);
    const Plane ref = render(tex, 64, 64, 0.0, 0.0);
    const ExtractionConfig cfg;
    double worst_int = 0.0, worst_q = 0.0;
    for (int sy = -4; sy <= 4; ++sy)
        for (int sx = -4; sx <= 4; ++sx) {
            const FlowResult r = lucas_kanade_mv(ref, render(tex, 64, 64, sx, sy), {16, 16}, 32, cfg);
            worst_int = std::max({worst_int, std::abs(r.mv.x - sx), std::abs(r.mv.y - sy)});
        }
    for (int qy = -8; qy <= 8; qy += 3)
        for (int qx = -8; qx <= 8; qx += 3) {
            const double sx = qx / 4.0, sy = qy / 4.0;
            Plane cur(64, 64);
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x)
                    cur.at(x, y) = to_u8(sample_bilinear(ref, x + sx, y + sy));
            const FlowResult r = lucas_kanade_mv(ref, cur, {16, 16}, 32, cfg);
            worst_q = std::max({worst_q, std::abs(r.mv.x - sx), std::abs(r.mv.y - sy)});
        }
    const Plane flat(64, 64, 140);
    o.require(worst_int < 0.1, "integer shift error " + fmt("%.3f", worst_int));
    o.require(worst_q < 0.25, "quarter-sample shift error " + fmt("%.3f", worst_q));
    o.require(lucas_kanade_mv(flat, flat, {16, 16}, 32, cfg).degenerate, "flat block not degenerate");
    o.note("integer err " + fmt("%.4f", worst_int) + " px, quarter err " + fmt("%.4f", worst_q) + " px");
    return o;
}

// 6 ---------------------------------------------------------------------------

Outcome extraction()
{
    Outcome o;
    const Plane f = render(Texture::make(4), 96, 96, 2.0, 1.0);
    const auto pairs = extract_pairs(f, f, ExtractionConfig{});
    o.require(pairs.size() == 9, "tile count " + std::to_string(pairs.size()));
    for (const auto& p : pairs)
        o.require(p.x_block == p.y_block, "X != Y at static tile");
    o.require(round_mv_topleft({1.25, -0.5}) == Point{1, -1}, "(1.25,-0.5)");
    o.require(round_mv_topleft({3.0, 2.0}) == Point{3, 2}, "(3,2)");
    o.require(round_mv_topleft({-0.25, 0.75}) == Point{-1, 0}, "(-0.25,0.75)");
    o.note(std::to_string(pairs.size()) + " static tiles, 3 rounding examples");
    return o;
}

// 7 ---------------------------------------------------------------------------

std::vector<SamplePair> moving_texture_pairs(int frames, int block, int stride, std::uint64_t seed)
{
    const Texture tex = Texture::make(seed, 12, 8.0, 24.0);
    std::vector<Plane> seq;
    for (int t = 0; t < frames; ++t)
        seq.push_back(render(tex, 64, 64, 0.35 * t, 0.2 * t));
    ExtractionConfig ex;
    ex.block_size = block;
    ex.stride = stride;
    return extract_sequence_pairs(seq, seq.size(), ex);
}

Outcome training()
{
    Outcome o;
    // One 8x8 pair is the whole batch. With the loss averaged over pixels the
    // gradients sit near Adadelta's eps, so the overfit run needs a larger
    // scale than the default.
    TrainConfig cfg;
    cfg.lr0 = 5.0;
    cfg.decay_interval_epochs = 50;
    auto single_pair = moving_texture_pairs(2, 8, 8, 3);
    single_pair.resize(1);
    cfg.batch_size = 1;
    cfg.epochs = 200;
    const TrainResult single = train(build_network(ModelConfig::tiny(4)), single_pair, cfg);
    double best = 1e9;
    int reached = -1;
    for (const auto& e : single.report.epochs) {
        best = std::min(best, e.loss);
        if (reached < 0 && e.loss < 1e-3)
            reached = e.epoch;
    }
    o.require(reached >= 0, "single-batch loss only reached " + fmt("%.3e", best));

    cfg.lr0 = 1.0;
    cfg.decay_interval_epochs = 20;
    auto pairs = moving_texture_pairs(2, 16, 16, 3);
    pairs.resize(4);
    cfg.epochs = 3;
    cfg.batch_size = 3;
    const TrainResult a = train(build_network(ModelConfig::tiny(4)), pairs, cfg);
    const TrainResult b = train(build_network(ModelConfig::tiny(4)), pairs, cfg);
    bool same = a.net.tail.weights == b.net.tail.weights;
    for (std::size_t i = 0; i < a.report.epochs.size(); ++i)
        same = same && a.report.epochs[i].loss == b.report.epochs[i].loss;
    o.require(same, "fixed-seed runs differ");

    auto big = moving_texture_pairs(22, 16, 8, 5);
    big.resize(500);
    cfg.epochs = 20;
    cfg.batch_size = 32;
    const TrainResult r = train(build_network(ModelConfig::tiny(4)), big, cfg);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 10; ++i) {
        first += r.report.epochs[static_cast<std::size_t>(i)].loss / 10;
        last += r.report.epochs[r.report.epochs.size() - 1 - static_cast<std::size_t>(i)].loss / 10;
    }
    o.require(last < first, "last-10 mean " + fmt("%.3e", last) + " >= first-10 mean " + fmt("%.3e", first));
    o.note("overfit < 1e-3 at epoch " + std::to_string(reached) + ", reproducible, 500-pair loss " + fmt("%.3e", first) +
           " -> " + fmt("%.3e", last));
    return o;
}

// 8 ---------------------------------------------------------------------------

Outcome metrics()
{
    Outcome o;
    const std::vector<RDPoint> anchor{{1200, 31.2}, {2100, 34.0}, {3900, 36.9}, {7400, 39.5}};
    auto scale = [&](double f) {
        auto c = anchor;
        for (auto& p : c)
            p.bits *= f;
        return RDCurve(c);
    };
    const double same = bd_rate(RDCurve(anchor), RDCurve(anchor));
    const double up = bd_rate(RDCurve(anchor), scale(1.10));
    const double down = bd_rate(RDCurve(anchor), scale(0.90));
    o.require(std::abs(same) < 1e-12, "identical curves " + fmt("%.3e", same));
    o.require(std::abs(up - 10.0) < 1e-9, "1.10x gives " + fmt("%.12f", up));
    o.require(std::abs(down + 10.0) < 1e-9, "0.90x gives " + fmt("%.12f", down));

    const std::vector<RDPoint> other{{1000, 31.0}, {1900, 34.3}, {3700, 37.1}, {7600, 40.2}};
    const double ab = bd_rate(RDCurve(anchor), RDCurve(other)), ba = bd_rate(RDCurve(other), RDCurve(anchor));
    o.require(std::abs((1 + ab / 100) * (1 + ba / 100) - 1) < 1e-9, "antisymmetry");

    Plane a(16, 16, 50), b(16, 16, 50);
    for (std::size_t i = 0; i < b.samples().size(); ++i)
        b.samples()[i] = static_cast<std::uint8_t>(i % 2 ? 51 : 49);
    const double p = psnr(a, b);
    o.require(std::abs(p - 48.1308) < 5e-5, "psnr at MSE 1 is " + fmt("%.5f", p));
    const double s = ssim(Plane(32, 32, 100), Plane(32, 32, 110));
    o.require(std::abs(s - 0.99548) < 5e-6, "constant-plane ssim " + fmt("%.6f", s));
    o.note("+10%/-10% exact, psnr " + fmt("%.4f", p) + " dB, ssim " + fmt("%.5f", s));
    return o;
}

// 9 ---------------------------------------------------------------------------

// Panning and slowly zooming texture. The net is trained on consecutive
// reconstructed frames of the first 20, at every quantizer of the sweep.
Outcome directional()
{
    Outcome o;
    const Texture tex = Texture::make(11, 16, 6.0, 24.0, 90.0);
    std::vector<Plane> frames;
    double x = 10.0, y = 20.0, s = 1.0;
    for (int t = 0; t < 30; ++t) {
        frames.push_back(render(tex, 64, 64, x, y, s));
        x += 0.375 * s;
        y += 0.625 * s;
        s *= 1.002;
    }

    SweepConfig sweep;
    sweep.search.search_range = 8;
    sweep.reference_count = 2;
    const std::vector<int> qs{8, 16, 32, 64};
    const std::vector<Plane> head(frames.begin(), frames.begin() + 20);
    ExtractionConfig ex;
    ex.block_size = 32;
    ex.stride = 16;
    std::vector<SamplePair> pairs;
    for (int q : qs) {
        const SequenceEncoding coded = encode_sequence(head, nullptr, sweep, q);
        const auto part = extract_sequence_pairs(coded.recon, coded.recon.size(), ex);
        pairs.insert(pairs.end(), part.begin(), part.end());
    }

    TrainConfig tc;
    tc.lr0 = 2.0;
    tc.decay_interval_epochs = 8;
    tc.batch_size = 8;
    tc.epochs = 75;
    const TrainResult trained = train(build_network(ModelConfig::tiny(6)), pairs, tc);

    const SequenceEncoding full = encode_sequence(frames, nullptr, sweep, 8);
    int wins = 0;
    double gen_sum = 0.0, prev_sum = 0.0;
    for (std::size_t t = 20; t < 30; ++t) {
        const double g = psnr(generate_reference(trained.net, full.recon[t - 1]), frames[t]);
        const double p = psnr(full.recon[t - 1], frames[t]);
        wins += g > p;
        gen_sum += g / 10;
        prev_sum += p / 10;
    }
    o.require(wins >= 7, std::to_string(wins) + "/10 held-out frames improved");

    const std::vector<Plane> held(frames.begin() + 19, frames.end());
    const double bd = bd_rate(RDCurve(rd_sweep(held, nullptr, sweep, qs)), RDCurve(rd_sweep(held, &trained.net, sweep, qs)));
    o.require(bd < 0.0, "BD-rate " + fmt("%+.2f", bd) + " % is not negative");
    o.note(std::to_string(pairs.size()) + " pairs, loss " + fmt("%.3e", trained.report.epochs.back().loss) + ", " +
           std::to_string(wins) + "/10 wins, mean " + fmt("%.2f", gen_sum) + " vs " + fmt("%.2f", prev_sum) +
           " dB, BD " + fmt("%+.2f", bd) + " %");
    return o;
}

// 10 --------------------------------------------------------------------------

Outcome smoke_chain()
{
    Outcome o;
    TempDir dir("smoke");
    const Texture tex = Texture::make(21);
    FrameSequence seq{64, 64, {}};
    for (int t = 0; t < 10; ++t)
        seq.frames.push_back(render(tex, 64, 64, 0.4 * t, 0.3 * t, 1.0 + 0.002 * t));
    write_y4m(seq, dir / "seq.y4m");
    const std::string out = (dir / "out").string();
    const std::string cli = DRPG_CLI_PATH;
    const std::string common = " --input " + (dir / "seq.y4m").string() + " --out-dir " + out + " --seed 1";
    const std::string log = (dir / "log.txt").string();
    const std::vector<std::pair<std::string, std::string>> steps{
        {"extract", cli + " extract" + common},
        {"train", cli + " train --dataset " + out + "/dataset.drpd --out-dir " + out + " --epochs 2"},
        {"infer", cli + " infer --weights " + out + "/weights.drpg" + common},
        {"sweep", cli + " sweep --weights " + out + "/weights.drpg" + common},
        {"bdrate", cli + " bdrate --rd " + out + "/rd.csv"},
    };
    std::string bd;
    for (const auto& [name, cmd] : steps) {
        const int rc = std::system((cmd + " > " + log + " 2>&1").c_str());
        std::ifstream f(log);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        if (rc != 0) {
            o.require(false, name + " exited with " + std::to_string(rc) + ": " + text);
            return o;
        }
        if (name == "bdrate")
            bd = text.substr(0, text.find('\n'));
    }
    for (const char* artifact : {"dataset.drpd", "weights.drpg", "loss.csv", "rd.csv", "infer/metrics.csv"})
        o.require(std::filesystem::exists(std::filesystem::path(out) / artifact), std::string("missing ") + artifact);
    o.require(read_csv(std::filesystem::path(out) / "rd.csv").rows.size() == 8, "rd.csv row count");
    try {
        o.require(std::isfinite(parse_number(bd)), "bd-rate not finite: " + bd);
    } catch (const Error&) {
        o.require(false, "bd-rate output unparsable: " + bd);
    }
    o.note("all artifacts written, BD-rate " + bd + " %");
    return o;
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "gradient suite", 60, gradients},
        {2, "receptive fields", 10, receptive_fields},
        {3, "k=0 degeneracy", 0, degeneracy},
        {4, "interpolation suite", 10, interpolation},
        {5, "flow suite", 30, flow},
        {6, "extraction suite", 0, extraction},
        {7, "training suite", 300, training},
        {8, "metrics suite", 0, metrics},
        {9, "directional end-to-end", 600, directional},
        {10, "CLI smoke chain", 300, smoke_chain},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0 && secs >= c.budget_s)
            o.require(false, "runtime " + fmt("%.1f", secs) + " s over " + fmt("%.0f", c.budget_s) + " s");
        std::string timing = fmt("%.1f s", secs);
        if (c.budget_s > 0)
            timing += " < " + fmt("%.0f s", c.budget_s);
        std::printf("%s  criterion %2d  %-24s %s (%s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    timing.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
