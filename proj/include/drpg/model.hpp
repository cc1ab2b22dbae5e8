#pragma once

// Deep reference picture generator: two 3x3 head convolutions, three
// dilated-inception blocks and a 3x3 tail, mapping the previous decoded luma
// picture to a prediction of the current one.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "drpg/plane.hpp"
#include "drpg/tensor.hpp"

namespace drpg {

struct ModelConfig {
    int head_channels = 64;
    int branch_reduce_channels = 32;
    int branch_out_channels = 32;
    int trunk_channels = 64;
    std::array<double, 3> k{0.5, 0.5, 0.5};  // per-block fusion weight, each in [0,1]
    std::uint64_t seed = 1;

    void validate() const;

    /// Small widths used by gradient checks and the desk-scale experiments.
    static ModelConfig tiny(int channels = 4);
};

/// One inception branch. Every conv is followed by ReLU.
struct BranchSpec {
    std::vector<ConvParams> layers;
    int declared_receptive_field = 0;

    /// 1 + sum over layers of dilation*(k-1).
    int receptive_field() const;
};

struct DilatedInceptionBlock {
    std::array<BranchSpec, 3> branches;
    ConvParams fuse_concat;  // 1x1 over the concatenated branches
    ConvParams fuse_skip;    // 1x1 over the block input (the identity branch)
    double k = 0.5;

    int channels() const noexcept { return fuse_skip.in_channels(); }
};

struct GeneratorNet {
    ModelConfig config;
    std::array<ConvParams, 2> head;
    std::array<DilatedInceptionBlock, 3> blocks;
    ConvParams tail;

    /// Visits every conv layer with its stable name, in a fixed order:
    /// head, blocks (branches, fuse_concat, fuse_skip), tail.
    template <class F>
    void for_each_layer(F&& fn)
    {
        visit_layers(*this, fn);
    }
    template <class F>
    void for_each_layer(F&& fn) const
    {
        visit_layers(*this, fn);
    }

    std::size_t parameter_count() const;

private:
    template <class Net, class F>
    static void visit_layers(Net& net, F& fn)
    {
        fn(std::string("head.0"), net.head[0]);
        fn(std::string("head.1"), net.head[1]);
        for (std::size_t b = 0; b < net.blocks.size(); ++b) {
            auto& block = net.blocks[b];
            const std::string prefix = "block." + std::to_string(b);
            for (std::size_t br = 0; br < block.branches.size(); ++br)
                for (std::size_t l = 0; l < block.branches[br].layers.size(); ++l)
                    fn(prefix + ".branch." + std::to_string(br) + ".conv." + std::to_string(l),
                       block.branches[br].layers[l]);
            fn(prefix + ".fuse_concat", block.fuse_concat);
            fn(prefix + ".fuse_skip", block.fuse_skip);
        }
        fn(std::string("tail"), net.tail);
    }
};

/// Builds the fixed topology and draws fan-in scaled normal weights from
/// config.seed. Branch layouts: [1x1, 3x3], [1x1, 3x3, 3x3 d3],
/// [1x1, 3x3, 3x3, 3x3 d5].
GeneratorNet build_network(const ModelConfig& config);

/// ReLU(k * fuse_concat(concat(branches)) + fuse_skip(x)).
Tensor block_forward(const DilatedInceptionBlock& block, const Tensor& x);

/// The argument of the outer ReLU in block_forward.
Tensor block_pre_activation(const DilatedInceptionBlock& block, const Tensor& x);

/// Activations kept by a forward pass for backpropagation.
struct BranchTrace {
    std::vector<Tensor> pre;   // conv outputs
    std::vector<Tensor> post;  // after ReLU
};

struct BlockTrace {
    Tensor input;
    std::array<BranchTrace, 3> branches;
    Tensor concat;
    Tensor pre;  // k*F1(concat) + F2(input)
    Tensor output;
};

struct NetworkTrace {
    Tensor input;
    std::array<Tensor, 2> head_pre;
    std::array<Tensor, 2> head_post;
    std::array<BlockTrace, 3> blocks;
    Tensor output;
};

/// Runs the network on an NCHW tensor with one channel. When `trace` is
/// non-null every intermediate activation is stored in it.
Tensor network_forward(const GeneratorNet& net, const Tensor& input, NetworkTrace* trace = nullptr);

/// Parameter gradients, one entry per layer in for_each_layer order. The
/// `input` member of each entry is left empty.
struct NetworkGradients {
    std::vector<ConvGrads> layers;
};

NetworkGradients network_backward(const GeneratorNet& net, const NetworkTrace& trace, const Tensor& grad_output);

inline double normalize_sample(std::uint8_t v)
{
    return static_cast<double>(v) / 255.0;
}
std::uint8_t denormalize_sample(double v);

/// Normalized single-channel tensor (1,1,H,W) from a plane.
Tensor plane_to_tensor(const Plane& plane);
Plane tensor_to_plane(const Tensor& t, int n = 0, int c = 0);

/// Whole-frame inference: normalize, forward, round and clamp to 8 bits.
Plane generate_reference(const GeneratorNet& net, const Plane& frame);

void save_weights(const GeneratorNet& net, const std::filesystem::path& path);

/// Reads a weight file; the layer widths are recovered from the stored shapes.
GeneratorNet load_weights(const std::filesystem::path& path);

/// As above, additionally requiring the file to match `expected` widths.
GeneratorNet load_weights(const std::filesystem::path& path, const ModelConfig& expected);

/// Valid selectors: head1, head2, block1, block2, block3.
std::vector<std::string> feature_selectors();

/// Each channel of the selected activation, min-max stretched to [0,255].
/// Constant channels map to 0.
std::vector<Plane> dump_feature_maps(const GeneratorNet& net, const Plane& frame, std::string_view selector);

}  // namespace drpg
