#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drpg/flow.hpp"
#include "drpg/io.hpp"
#include "drpg/model.hpp"
#include "drpg/tensor.hpp"

namespace drpg {

struct TrainConfig {
    double lr0 = 1e-4;
    int decay_interval_epochs = 20;
    double decay_factor = 0.5;
    int batch_size = 32;
    int epochs = 80;
    std::uint64_t shuffle_seed = 1;
    double rho = 0.95;
    double eps = 1e-6;

    void validate() const;
};

struct LossReport {
    struct Epoch {
        int epoch = 0;
        double lr = 0.0;
        double loss = 0.0;  // mean over the epoch's batches
        double seconds = 0.0;
    };
    std::vector<Epoch> epochs;

    /// Rows `epoch,lr,loss`.
    CsvTable to_csv() const;
};

struct MseResult {
    double loss = 0.0;
    Tensor grad;
};

/// Mean over batch items of the per-item mean squared error, and its
/// gradient 2 (pred - target) / (M m n).
MseResult mse_loss(const Tensor& pred, const Tensor& target);

/// lr0 * decay_factor ^ floor(epoch / decay_interval_epochs).
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Normalized (B,1,bs,bs) tensors for a subset of the pairs.
Tensor pack_inputs(std::span<const SamplePair> pairs, std::span<const std::size_t> indices);
Tensor pack_targets(std::span<const SamplePair> pairs, std::span<const std::size_t> indices);

/// Loss and parameter gradients of one batch, per layer in for_each_layer order.
struct BatchGradient {
    double loss = 0.0;
    NetworkGradients grads;
};
BatchGradient batch_gradient(const GeneratorNet& net, const Tensor& inputs, const Tensor& targets);

/// One Adadelta state per layer (weights then bias).
struct OptimizerState {
    std::vector<AdadeltaState> weights;
    std::vector<AdadeltaState> bias;
};
OptimizerState make_optimizer(const GeneratorNet& net, const TrainConfig& cfg);
void apply_gradients(GeneratorNet& net, const NetworkGradients& grads, OptimizerState& state, double lr);

struct TrainResult {
    GeneratorNet net;
    LossReport report;
};

/// Called after every epoch; lets the CLI print progress.
using EpochCallback = std::function<void(const LossReport::Epoch&)>;

/// Mini-batch Adadelta over a seeded shuffle each epoch (last partial batch
/// kept). Deterministic for a given seed.
TrainResult train(GeneratorNet net, std::span<const SamplePair> dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct BlockSweepConfig {
    ExtractionConfig extraction;
    ModelConfig model;
    TrainConfig train;
    int holdout_frames = 2;  // evaluated, never trained on
};

struct BlockSweepRow {
    int block_size = 0;
    std::string sequence;
    double psnr_db = 0.0;
};

/// For each block size: extract pairs from the training frames, train a
/// fresh network from the same seed, and report the mean PSNR of
/// generate_reference(frame t-1) against frame t over the held-out frames.
std::vector<BlockSweepRow> block_size_sweep(std::span<const Plane> frames, const std::string& sequence_name,
                                            std::span<const int> sizes, const BlockSweepConfig& cfg);

/// Rows `block_size,sequence,psnr_db`.
CsvTable block_sweep_csv(std::span<const BlockSweepRow> rows);

/// Pairs from every consecutive frame pair (t-1, t) with t in [1, end).
std::vector<SamplePair> extract_sequence_pairs(std::span<const Plane> frames, std::size_t end,
                                               const ExtractionConfig& cfg);

}  // namespace drpg
