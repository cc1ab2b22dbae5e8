#include "drpg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "drpg/error.hpp"
#include "drpg/metrics.hpp"

namespace drpg {

void TrainConfig::validate() const
{
    if (batch_size < 1)
        throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "decay_factor must lie in (0,1]");
    if (decay_interval_epochs < 1)
        throw Error(ErrorKind::InvalidArgument, "decay_interval_epochs must be >= 1");
    if (epochs < 0)
        throw Error(ErrorKind::InvalidArgument, "epochs must be non-negative");
    if (!(lr0 >= 0.0))
        throw Error(ErrorKind::InvalidArgument, "lr0 must be non-negative");
    if (!(rho > 0.0 && rho < 1.0) || !(eps > 0.0))
        throw Error(ErrorKind::InvalidArgument, "Adadelta rho must lie in (0,1) and eps be positive");
}

CsvTable LossReport::to_csv() const
{
    CsvTable t;
    t.header = {"epoch", "lr", "loss"};
    for (const Epoch& e : epochs) {
        char lr[32];
        std::snprintf(lr, sizeof lr, "%.9g", e.lr);
        char loss[32];
        std::snprintf(loss, sizeof loss, "%.9g", e.loss);
        t.rows.push_back({std::to_string(e.epoch), lr, loss});
    }
    return t;
}

MseResult mse_loss(const Tensor& pred, const Tensor& target)
{
    if (pred.shape() != target.shape())
        throw Error(ErrorKind::ShapeMismatch, "mse_loss: prediction " + pred.shape().str() + " vs target " +
                                                  target.shape().str());
    const Shape4& s = pred.shape();
    const double items = s.n;
    const double per_item = static_cast<double>(s.c) * s.h * s.w;
    MseResult r;
    r.grad = Tensor(s);
    auto p = pred.values();
    auto t = target.values();
    auto g = r.grad.values();
    const std::size_t item_len = static_cast<std::size_t>(per_item);
    double total = 0.0;
    for (int n = 0; n < s.n; ++n) {
        double item = 0.0;
        for (std::size_t i = n * item_len; i < (n + 1) * item_len; ++i) {
            const double d = p[i] - t[i];
            item += d * d;
            g[i] = 2.0 * d / (items * per_item);
        }
        total += item / per_item;
    }
    r.loss = total / items;
    return r;
}

double lr_schedule(int epoch, const TrainConfig& cfg)
{
    if (epoch < 0)
        throw Error(ErrorKind::InvalidArgument, "lr_schedule: negative epoch");
    return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_interval_epochs);
}

namespace {

Tensor pack(std::span<const SamplePair> pairs, std::span<const std::size_t> indices, bool inputs)
{
    if (indices.empty())
        throw Error(ErrorKind::InvalidArgument, "cannot pack an empty batch");
    const Plane& first = inputs ? pairs[indices[0]].x_block : pairs[indices[0]].y_block;
    Tensor t({static_cast<int>(indices.size()), 1, first.height(), first.width()});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const Plane& p = inputs ? pairs[indices[b]].x_block : pairs[indices[b]].y_block;
        if (!p.same_size(first))
            throw Error(ErrorKind::ShapeMismatch, "batch mixes block sizes");
        double* dst = t.plane(static_cast<int>(b), 0);
        auto src = p.samples();
        for (std::size_t i = 0; i < src.size(); ++i)
            dst[i] = normalize_sample(src[i]);
    }
    return t;
}

}  // namespace

Tensor pack_inputs(std::span<const SamplePair> pairs, std::span<const std::size_t> indices)
{
    return pack(pairs, indices, true);
}

Tensor pack_targets(std::span<const SamplePair> pairs, std::span<const std::size_t> indices)
{
    return pack(pairs, indices, false);
}

BatchGradient batch_gradient(const GeneratorNet& net, const Tensor& inputs, const Tensor& targets)
{
    NetworkTrace trace;
    const Tensor pred = network_forward(net, inputs, &trace);
    MseResult loss = mse_loss(pred, targets);
    return {loss.loss, network_backward(net, trace, loss.grad)};
}

OptimizerState make_optimizer(const GeneratorNet& net, const TrainConfig& cfg)
{
    OptimizerState st;
    net.for_each_layer([&](const std::string&, const ConvParams& p) {
        st.weights.emplace_back(p.weights.size(), cfg.rho, cfg.eps, cfg.lr0);
        st.bias.emplace_back(p.bias.size(), cfg.rho, cfg.eps, cfg.lr0);
    });
    return st;
}

void apply_gradients(GeneratorNet& net, const NetworkGradients& grads, OptimizerState& state, double lr)
{
    std::size_t i = 0;
    net.for_each_layer([&](const std::string& name, ConvParams& p) {
        if (i >= grads.layers.size())
            throw Error(ErrorKind::ShapeMismatch, "gradient list is shorter than the layer list at '" + name + "'");
        state.weights[i].lr = lr;
        state.bias[i].lr = lr;
        adadelta_step(p.weights.values(), grads.layers[i].weights.values(), state.weights[i]);
        adadelta_step(p.bias, grads.layers[i].bias, state.bias[i]);
        ++i;
    });
}

TrainResult train(GeneratorNet net, std::span<const SamplePair> dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch)
{
    cfg.validate();
    if (dataset.empty())
        throw Error(ErrorKind::InvalidArgument, "train: dataset is empty");

    OptimizerState opt = make_optimizer(net, cfg);
    std::mt19937_64 rng(cfg.shuffle_seed);
    std::vector<std::size_t> order(dataset.size());
    TrainResult result;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const double lr = lr_schedule(epoch, cfg);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> idx(order.data() + begin, end - begin);
            const BatchGradient bg = batch_gradient(net, pack_inputs(dataset, idx), pack_targets(dataset, idx));
            if (!std::isfinite(bg.loss))
                throw Error(ErrorKind::NonFinite, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                                      ", batch " + std::to_string(batches));
            apply_gradients(net, bg.grads, opt, lr);
            loss_sum += bg.loss;
            ++batches;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.report.epochs.push_back({epoch, lr, loss_sum / batches, secs});
        if (on_epoch)
            on_epoch(result.report.epochs.back());
    }
    result.net = std::move(net);
    return result;
}

std::vector<SamplePair> extract_sequence_pairs(std::span<const Plane> frames, std::size_t end,
                                               const ExtractionConfig& cfg)
{
    std::vector<SamplePair> pairs;
    end = std::min(end, frames.size());
    for (std::size_t t = 1; t < end; ++t) {
        auto p = extract_pairs(frames[t - 1], frames[t], cfg);
        std::move(p.begin(), p.end(), std::back_inserter(pairs));
    }
    return pairs;
}

std::vector<BlockSweepRow> block_size_sweep(std::span<const Plane> frames, const std::string& sequence_name,
                                            std::span<const int> sizes, const BlockSweepConfig& cfg)
{
    if (cfg.holdout_frames < 1 || frames.size() < static_cast<std::size_t>(cfg.holdout_frames) + 2)
        throw Error(ErrorKind::InvalidArgument, "block_size_sweep needs at least holdout_frames + 2 frames");
    const std::size_t train_end = frames.size() - static_cast<std::size_t>(cfg.holdout_frames);

    std::vector<BlockSweepRow> rows;
    for (int size : sizes) {
        ExtractionConfig ex = cfg.extraction;
        ex.block_size = size;
        ex.stride = size;
        const auto pairs = extract_sequence_pairs(frames, train_end, ex);
        if (pairs.empty())
            throw Error(ErrorKind::InvalidArgument, "block size " + std::to_string(size) + " yields no training pairs");
        TrainResult trained = train(build_network(cfg.model), pairs, cfg.train);

        double sum = 0.0;
        for (std::size_t t = train_end; t < frames.size(); ++t)
            sum += psnr(generate_reference(trained.net, frames[t - 1]), frames[t]);
        rows.push_back({size, sequence_name, sum / cfg.holdout_frames});
    }
    return rows;
}

CsvTable block_sweep_csv(std::span<const BlockSweepRow> rows)
{
    CsvTable t;
    t.header = {"block_size", "sequence", "psnr_db"};
    for (const auto& r : rows)
        t.rows.push_back({std::to_string(r.block_size), r.sequence, format_number(r.psnr_db, 4)});
    return t;
}

}  // namespace drpg
