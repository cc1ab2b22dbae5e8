#include <doctest.h>

#include <numeric>

#include "drpg/error.hpp"
#include "drpg/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/synth.hpp"

using namespace drpg;
using namespace drpg::test;

namespace {

std::vector<SamplePair> texture_pairs(int count, int bs, std::uint64_t seed)
{
    const Texture tex = Texture::make(seed);
    std::vector<SamplePair> out;
    for (int i = 0; i < count; ++i) {
        SamplePair p;
        p.x_block = render(tex, bs, bs, 7.0 * i, 3.0 * i);
        p.y_block = render(tex, bs, bs, 7.0 * i + 0.5, 3.0 * i + 0.25);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

TEST_CASE("mse loss value and gradient")
{
    const Tensor pred({2, 1, 2, 2}, std::vector<double>{1, 2, 3, 4, 0, 0, 0, 0});
    const Tensor target({2, 1, 2, 2}, std::vector<double>{1, 2, 3, 2, 1, 1, 1, 1});
    const MseResult r = mse_loss(pred, target);
    // Item means 1.0 and 1.0.
    CHECK(r.loss == doctest::Approx(1.0));
    CHECK(r.grad.at(0, 0, 1, 1) == doctest::Approx(2.0 * 2.0 / 8.0));

    Tensor p = random_tensor({3, 1, 4, 5}, 1);
    const Tensor t = random_tensor({3, 1, 4, 5}, 2);
    const auto num = numeric_gradient(p.values(), [&] { return mse_loss(p, t).loss; });
    CHECK(relative_error(mse_loss(p, t).grad.values(), num) < 1e-7);
    CHECK_THROWS_AS(mse_loss(p, Tensor({3, 1, 4, 4})), Error);
}

TEST_CASE("learning rate halves every interval")
{
    TrainConfig cfg;
    CHECK(lr_schedule(0, cfg) == 1e-4);
    CHECK(lr_schedule(19, cfg) == 1e-4);
    CHECK(lr_schedule(20, cfg) == 5e-5);
    CHECK(lr_schedule(79, cfg) == doctest::Approx(1.25e-5));
    cfg.lr0 = 1.0;
    cfg.decay_interval_epochs = 3;
    CHECK(lr_schedule(7, cfg) == 0.25);
}

TEST_CASE("invalid training settings are rejected")
{
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    const auto pairs = texture_pairs(2, 8, 1);
    CHECK_THROWS_AS(train(build_network(ModelConfig::tiny(2)), std::span<const SamplePair>{}, TrainConfig{}), Error);
}

TEST_CASE("packing normalizes samples into a batch")
{
    const auto pairs = texture_pairs(3, 8, 2);
    const std::vector<std::size_t> idx{2, 0};
    const Tensor x = pack_inputs(pairs, idx);
    const Tensor y = pack_targets(pairs, idx);
    CHECK(x.shape() == Shape4{2, 1, 8, 8});
    CHECK(x.at(0, 0, 3, 4) == pairs[2].x_block.at(4, 3) / 255.0);
    CHECK(y.at(1, 0, 7, 0) == pairs[0].y_block.at(0, 7) / 255.0);
}

TEST_CASE("batch gradient matches central differences of the loss")
{
    ModelConfig cfg = ModelConfig::tiny(2);
    GeneratorNet net = build_network(cfg);
    net.for_each_layer([](const std::string&, ConvParams& p) {
        for (double& b : p.bias)
            b = 0.05;
    });
    const auto pairs = texture_pairs(2, 8, 3);
    const std::vector<std::size_t> idx{0, 1};
    const Tensor x = pack_inputs(pairs, idx), y = pack_targets(pairs, idx);
    const BatchGradient bg = batch_gradient(net, x, y);
    const auto loss = [&] { return mse_loss(network_forward(net, x), y).loss; };
    CHECK(bg.loss == doctest::Approx(loss()).epsilon(1e-14));
    const auto num = numeric_gradient(net.tail.weights.values(), loss);
    CHECK(relative_error(bg.grads.layers.back().weights.values(), num) < 1e-6);
    const auto num0 = numeric_gradient(net.head[0].weights.values(), loss);
    CHECK(relative_error(bg.grads.layers.front().weights.values(), num0) < 1e-6);
}

TEST_CASE("training is reproducible for a fixed seed")
{
    const auto pairs = texture_pairs(7, 8, 4);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 3;  // last batch is partial
    cfg.lr0 = 1.0;
    const TrainResult a = train(build_network(ModelConfig::tiny(2)), pairs, cfg);
    const TrainResult b = train(build_network(ModelConfig::tiny(2)), pairs, cfg);
    REQUIRE(a.report.epochs.size() == 3);
    for (std::size_t e = 0; e < 3; ++e)
        CHECK(a.report.epochs[e].loss == b.report.epochs[e].loss);
    CHECK(a.net.tail.weights == b.net.tail.weights);
    CHECK(a.net.blocks[1].fuse_concat.weights == b.net.blocks[1].fuse_concat.weights);

    cfg.shuffle_seed = 9;
    const TrainResult c = train(build_network(ModelConfig::tiny(2)), pairs, cfg);
    CHECK_FALSE(c.net.tail.weights == a.net.tail.weights);
}

TEST_CASE("loss report and callback")
{
    const auto pairs = texture_pairs(4, 8, 5);
    TrainConfig cfg;
    cfg.epochs = 2;
    int calls = 0;
    const TrainResult r = train(build_network(ModelConfig::tiny(2)), pairs, cfg,
                                [&](const LossReport::Epoch& e) { CHECK(e.epoch == calls++); });
    CHECK(calls == 2);
    const CsvTable t = r.report.to_csv();
    CHECK(t.header == std::vector<std::string>{"epoch", "lr", "loss"});
    CHECK(t.rows.size() == 2);
}

TEST_CASE("a few Adadelta epochs lower the loss")
{
    const auto pairs = texture_pairs(8, 12, 6);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 8;
    cfg.lr0 = 1.0;
    const TrainResult r = train(build_network(ModelConfig::tiny(3)), pairs, cfg);
    CHECK(r.report.epochs.back().loss < 0.5 * r.report.epochs.front().loss);
}

TEST_CASE("block-size sweep produces one row per size")
{
    const Texture tex = Texture::make(7);
    std::vector<Plane> frames;
    for (int t = 0; t < 5; ++t)
        frames.push_back(render(tex, 48, 48, 0.5 * t, 0.25 * t));
    BlockSweepConfig cfg;
    cfg.model = ModelConfig::tiny(2);
    cfg.train.epochs = 1;
    cfg.holdout_frames = 2;
    const std::vector<int> sizes{16, 24};
    const auto rows = block_size_sweep(frames, "synthetic", sizes, cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].block_size == 16);
    CHECK(rows[1].sequence == "synthetic");
    CHECK(std::isfinite(rows[0].psnr_db));
    CHECK(block_sweep_csv(rows).header == std::vector<std::string>{"block_size", "sequence", "psnr_db"});
    const std::vector<int> too_big{64};
    CHECK_THROWS_AS(block_size_sweep(frames, "s", too_big, cfg), Error);
}
