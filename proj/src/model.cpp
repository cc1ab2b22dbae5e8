#include "drpg/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "binary.hpp"
#include "drpg/error.hpp"
#include "drpg/io.hpp"

namespace drpg {

void ModelConfig::validate() const
{
    if (head_channels < 1 || branch_reduce_channels < 1 || branch_out_channels < 1 || trunk_channels < 1)
        throw Error(ErrorKind::InvalidArgument, "model channel counts must be >= 1");
    for (double kb : k)
        if (!(kb >= 0.0 && kb <= 1.0))
            throw Error(ErrorKind::InvalidArgument, "block fusion weight k must lie in [0,1]");
}

ModelConfig ModelConfig::tiny(int channels)
{
    ModelConfig c;
    c.head_channels = channels;
    c.branch_reduce_channels = channels;
    c.branch_out_channels = channels;
    c.trunk_channels = channels;
    return c;
}

int BranchSpec::receptive_field() const
{
    int rf = 1;
    for (const ConvParams& p : layers)
        rf += p.dilation * (p.kernel() - 1);
    return rf;
}

std::size_t GeneratorNet::parameter_count() const
{
    std::size_t n = 0;
    for_each_layer([&](const std::string&, const ConvParams& p) { n += p.weights.size() + p.bias.size(); });
    return n;
}

namespace {

BranchSpec make_branch(int trunk, int reduce, int out, int standard_3x3, int dilation, int declared_rf)
{
    BranchSpec b;
    b.declared_receptive_field = declared_rf;
    // 1x1 reduction, then standard 3x3 convs, the last one optionally dilated.
    const int convs = standard_3x3 + (dilation > 1 ? 1 : 0);
    b.layers.push_back(ConvParams::same(trunk, convs == 0 ? out : reduce, 1));
    for (int i = 0; i < convs; ++i) {
        const bool last = i == convs - 1;
        const bool dilated = last && dilation > 1;
        b.layers.push_back(ConvParams::same(reduce, last ? out : reduce, 3, dilated ? dilation : 1));
    }
    return b;
}

DilatedInceptionBlock make_block(const ModelConfig& c, double k)
{
    DilatedInceptionBlock block;
    const int trunk = c.trunk_channels;
    const int reduce = c.branch_reduce_channels;
    const int out = c.branch_out_channels;
    block.branches[0] = make_branch(trunk, reduce, out, 1, 1, 3);
    block.branches[1] = make_branch(trunk, reduce, out, 1, 3, 9);
    block.branches[2] = make_branch(trunk, reduce, out, 2, 5, 15);
    block.fuse_concat = ConvParams::same(3 * out, trunk, 1);
    block.fuse_skip = ConvParams::same(trunk, trunk, 1);
    block.k = k;
    return block;
}

GeneratorNet make_topology(const ModelConfig& config)
{
    config.validate();
    GeneratorNet net;
    net.config = config;
    net.head[0] = ConvParams::same(1, config.head_channels, 3);
    net.head[1] = ConvParams::same(config.head_channels, config.trunk_channels, 3);
    for (std::size_t b = 0; b < net.blocks.size(); ++b)
        net.blocks[b] = make_block(config, config.k[b]);
    net.tail = ConvParams::same(config.trunk_channels, 1, 3);
    return net;
}

}  // namespace

GeneratorNet build_network(const ModelConfig& config)
{
    GeneratorNet net = make_topology(config);
    std::mt19937_64 rng(config.seed);
    net.for_each_layer([&](const std::string&, ConvParams& p) {
        const Shape4& s = p.weights.shape();
        const double fan_in = static_cast<double>(s.c) * s.h * s.w;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (double& w : p.weights.values())
            w = dist(rng);
        std::fill(p.bias.begin(), p.bias.end(), 0.0);
    });
    return net;
}

namespace {

Tensor branch_forward(const BranchSpec& branch, const Tensor& x, BranchTrace* trace)
{
    Tensor cur = x;
    for (const ConvParams& layer : branch.layers) {
        Tensor pre = conv2d_forward(cur, layer);
        cur = relu(pre);
        if (trace) {
            trace->pre.push_back(std::move(pre));
            trace->post.push_back(cur);
        }
    }
    return cur;
}

Tensor block_forward_impl(const DilatedInceptionBlock& block, const Tensor& x, BlockTrace* trace)
{
    if (x.shape().c != block.channels())
        throw Error(ErrorKind::ShapeMismatch, "block_forward: input has " + std::to_string(x.shape().c) +
                                                  " channels, block expects " + std::to_string(block.channels()));
    std::array<Tensor, 3> outs;
    for (std::size_t b = 0; b < 3; ++b)
        outs[b] = branch_forward(block.branches[b], x, trace ? &trace->branches[b] : nullptr);
    Tensor phi = concat_channels(outs);
    Tensor pre = scaled_add(block.k, conv2d_forward(phi, block.fuse_concat), 1.0, conv2d_forward(x, block.fuse_skip));
    if (trace) {
        trace->input = x;
        trace->concat = std::move(phi);
        trace->output = relu(pre);
        trace->pre = std::move(pre);
        return trace->output;
    }
    return relu(pre);
}

}  // namespace

Tensor block_forward(const DilatedInceptionBlock& block, const Tensor& x)
{
    return block_forward_impl(block, x, nullptr);
}

Tensor block_pre_activation(const DilatedInceptionBlock& block, const Tensor& x)
{
    BlockTrace trace;
    block_forward_impl(block, x, &trace);
    return trace.pre;
}

Tensor network_forward(const GeneratorNet& net, const Tensor& input, NetworkTrace* trace)
{
    if (input.shape().c != 1)
        throw Error(ErrorKind::ShapeMismatch, "network_forward: expected a single-channel input, got " +
                                                  std::to_string(input.shape().c) + " channels");
    Tensor cur = input;
    if (trace)
        trace->input = input;
    for (std::size_t i = 0; i < 2; ++i) {
        Tensor pre = conv2d_forward(cur, net.head[i]);
        cur = relu(pre);
        if (trace) {
            trace->head_pre[i] = std::move(pre);
            trace->head_post[i] = cur;
        }
    }
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        if (trace)
            trace->blocks[b] = BlockTrace{};
        cur = block_forward_impl(net.blocks[b], cur, trace ? &trace->blocks[b] : nullptr);
    }
    Tensor out = conv2d_forward(cur, net.tail);
    if (trace)
        trace->output = out;
    return out;
}

NetworkGradients network_backward(const GeneratorNet& net, const NetworkTrace& trace, const Tensor& grad_output)
{
    // Gradients are produced back to front and stored by layer name order.
    std::vector<ConvGrads> head(2);
    std::array<std::vector<ConvGrads>, 3> blocks;

    auto keep_params = [](ConvGrads g) {
        g.input = Tensor();
        return g;
    };

    ConvGrads tail = conv2d_backward(trace.blocks.back().output, net.tail, grad_output);
    Tensor grad = std::move(tail.input);

    for (std::size_t bi = net.blocks.size(); bi-- > 0;) {
        const DilatedInceptionBlock& block = net.blocks[bi];
        const BlockTrace& bt = trace.blocks[bi];
        Tensor g_pre = relu_backward(bt.pre, grad);

        ConvGrads skip = conv2d_backward(bt.input, block.fuse_skip, g_pre);
        Tensor g_fc = scaled_add(block.k, g_pre, 0.0, g_pre);
        ConvGrads fuse = conv2d_backward(bt.concat, block.fuse_concat, g_fc);

        std::array<int, 3> widths{};
        for (std::size_t b = 0; b < 3; ++b)
            widths[b] = block.branches[b].layers.back().out_channels();
        std::vector<Tensor> g_parts = split_channels(fuse.input, widths);

        std::array<std::vector<ConvGrads>, 3> branch_grads;
        Tensor g_input = skip.input;
        for (std::size_t b = 0; b < 3; ++b) {
            const BranchSpec& branch = block.branches[b];
            const BranchTrace& tr = bt.branches[b];
            Tensor g = std::move(g_parts[b]);
            branch_grads[b].resize(branch.layers.size());
            for (std::size_t l = branch.layers.size(); l-- > 0;) {
                Tensor g_z = relu_backward(tr.pre[l], g);
                const Tensor& layer_in = l == 0 ? bt.input : tr.post[l - 1];
                ConvGrads lg = conv2d_backward(layer_in, branch.layers[l], g_z);
                g = std::move(lg.input);
                branch_grads[b][l] = keep_params(std::move(lg));
            }
            g_input = scaled_add(1.0, g_input, 1.0, g);
        }

        for (auto& bg : branch_grads)
            for (auto& g : bg)
                blocks[bi].push_back(std::move(g));
        blocks[bi].push_back(keep_params(std::move(fuse)));
        blocks[bi].push_back(keep_params(std::move(skip)));
        grad = std::move(g_input);
    }

    for (std::size_t i = 2; i-- > 0;) {
        Tensor g_z = relu_backward(trace.head_pre[i], grad);
        const Tensor& layer_in = i == 0 ? trace.input : trace.head_post[0];
        ConvGrads hg = conv2d_backward(layer_in, net.head[i], g_z);
        grad = std::move(hg.input);
        head[i] = keep_params(std::move(hg));
    }

    NetworkGradients out;
    for (auto& g : head)
        out.layers.push_back(std::move(g));
    for (auto& bg : blocks)
        for (auto& g : bg)
            out.layers.push_back(std::move(g));
    out.layers.push_back(keep_params(std::move(tail)));
    return out;
}

std::uint8_t denormalize_sample(double v)
{
    const double scaled = std::round(v * 255.0);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Tensor plane_to_tensor(const Plane& plane)
{
    Tensor t({1, 1, plane.height(), plane.width()});
    auto src = plane.samples();
    auto dst = t.values();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = normalize_sample(src[i]);
    return t;
}

Plane tensor_to_plane(const Tensor& t, int n, int c)
{
    const Shape4& s = t.shape();
    Plane out(s.w, s.h);
    const double* src = t.plane(n, c);
    auto dst = out.samples();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = denormalize_sample(src[i]);
    return out;
}

Plane generate_reference(const GeneratorNet& net, const Plane& frame)
{
    if (frame.empty())
        throw Error(ErrorKind::InvalidArgument, "generate_reference: empty frame");
    return tensor_to_plane(network_forward(net, plane_to_tensor(frame)));
}

// Weight file: "DRPG", u32 version, u32 tensor count, then per tensor
// u16 name length, name, u8 ndim, u32 dims, f32 values.

namespace {

constexpr std::uint32_t kWeightVersion = 1;

void put_tensor(detail::ByteWriter& w, const std::string& name, const std::vector<std::uint32_t>& dims,
                std::span<const double> values)
{
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    w.u8(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims)
        w.u32(d);
    for (double v : values)
        w.f32(static_cast<float>(v));
}

struct StoredTensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
};

std::string dims_str(const std::vector<std::uint32_t>& dims)
{
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i)
        s += (i ? "," : "") + std::to_string(dims[i]);
    return s + "]";
}

std::map<std::string, StoredTensor> read_weight_tensors(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    detail::ByteReader r(bytes, "weight file '" + path.string() + "'");
    if (r.string(4) != "DRPG")
        throw Error(ErrorKind::Format, "weight file '" + path.string() + "': bad magic (expected DRPG)");
    const std::uint32_t version = r.u32();
    if (version != kWeightVersion)
        throw Error(ErrorKind::Format, "weight file '" + path.string() + "': unsupported version " +
                                           std::to_string(version));
    const std::uint32_t count = r.u32();
    std::map<std::string, StoredTensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.string(r.u16());
        StoredTensor t;
        const int ndim = r.u8();
        std::size_t n = 1;
        for (int d = 0; d < ndim; ++d) {
            t.dims.push_back(r.u32());
            n *= t.dims.back();
        }
        if (n > r.remaining() / 4)
            throw Error(ErrorKind::Format, "weight file '" + path.string() + "': tensor '" + name +
                                               "' is truncated");
        t.values.resize(n);
        for (auto& v : t.values)
            v = r.f32();
        if (!tensors.emplace(name, std::move(t)).second)
            throw Error(ErrorKind::Format, "weight file '" + path.string() + "': duplicate tensor '" + name + "'");
    }
    if (r.remaining() != 0)
        throw Error(ErrorKind::Format, "weight file '" + path.string() + "': " + std::to_string(r.remaining()) +
                                           " trailing bytes");
    return tensors;
}

const StoredTensor& find_tensor(const std::map<std::string, StoredTensor>& tensors, const std::string& name)
{
    auto it = tensors.find(name);
    if (it == tensors.end())
        throw Error(ErrorKind::Format, "weight file is missing tensor '" + name + "'");
    return it->second;
}

int stored_dim(const std::map<std::string, StoredTensor>& tensors, const std::string& name, std::size_t axis)
{
    const StoredTensor& t = find_tensor(tensors, name);
    if (t.dims.size() <= axis)
        throw Error(ErrorKind::ShapeMismatch, "weight tensor '" + name + "' has shape " + dims_str(t.dims) +
                                                  ", expected at least " + std::to_string(axis + 1) + " dims");
    return static_cast<int>(t.dims[axis]);
}

}  // namespace

void save_weights(const GeneratorNet& net, const std::filesystem::path& path)
{
    detail::ByteWriter w;
    w.raw("DRPG");
    w.u32(kWeightVersion);
    std::uint32_t count = 0;
    net.for_each_layer([&](const std::string&, const ConvParams&) { count += 2; });
    count += static_cast<std::uint32_t>(net.blocks.size());
    w.u32(count);
    net.for_each_layer([&](const std::string& name, const ConvParams& p) {
        const Shape4& s = p.weights.shape();
        put_tensor(w, name + ".weight",
                   {std::uint32_t(s.n), std::uint32_t(s.c), std::uint32_t(s.h), std::uint32_t(s.w)},
                   p.weights.values());
        put_tensor(w, name + ".bias", {std::uint32_t(p.bias.size())}, p.bias);
    });
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const double k = net.blocks[b].k;
        put_tensor(w, "block." + std::to_string(b) + ".k", {1}, std::span(&k, 1));
    }
    write_file_atomic(path, w.bytes());
}

GeneratorNet load_weights(const std::filesystem::path& path)
{
    const auto tensors = read_weight_tensors(path);

    ModelConfig config;
    config.head_channels = stored_dim(tensors, "head.0.weight", 0);
    config.trunk_channels = stored_dim(tensors, "head.1.weight", 0);
    config.branch_reduce_channels = stored_dim(tensors, "block.0.branch.0.conv.0.weight", 0);
    config.branch_out_channels = stored_dim(tensors, "block.0.branch.0.conv.1.weight", 0);
    for (std::size_t b = 0; b < config.k.size(); ++b) {
        const StoredTensor& k = find_tensor(tensors, "block." + std::to_string(b) + ".k");
        if (k.values.size() != 1)
            throw Error(ErrorKind::ShapeMismatch, "weight tensor 'block." + std::to_string(b) + ".k' must hold one value");
        config.k[b] = k.values[0];
    }
    config.validate();

    GeneratorNet net = make_topology(config);
    std::size_t used = config.k.size();
    net.for_each_layer([&](const std::string& name, ConvParams& p) {
        const Shape4& s = p.weights.shape();
        const std::vector<std::uint32_t> want_w{std::uint32_t(s.n), std::uint32_t(s.c), std::uint32_t(s.h),
                                                std::uint32_t(s.w)};
        const StoredTensor& w = find_tensor(tensors, name + ".weight");
        if (w.dims != want_w)
            throw Error(ErrorKind::ShapeMismatch, "layer '" + name + "': stored weight shape " + dims_str(w.dims) +
                                                      " does not match expected " + dims_str(want_w));
        const StoredTensor& b = find_tensor(tensors, name + ".bias");
        if (b.dims != std::vector<std::uint32_t>{std::uint32_t(s.n)})
            throw Error(ErrorKind::ShapeMismatch, "layer '" + name + "': stored bias shape " + dims_str(b.dims) +
                                                      " does not match expected [" + std::to_string(s.n) + "]");
        std::copy(w.values.begin(), w.values.end(), p.weights.values().begin());
        p.bias = b.values;
        used += 2;
    });
    if (used != tensors.size())
        throw Error(ErrorKind::Format, "weight file '" + path.string() + "' holds " + std::to_string(tensors.size()) +
                                           " tensors, the network has " + std::to_string(used));
    return net;
}

GeneratorNet load_weights(const std::filesystem::path& path, const ModelConfig& expected)
{
    GeneratorNet net = load_weights(path);
    const ModelConfig& got = net.config;
    auto check = [&](const char* what, int have, int want) {
        if (have != want)
            throw Error(ErrorKind::ShapeMismatch, "weight file '" + path.string() + "': " + what + " is " +
                                                      std::to_string(have) + ", config expects " +
                                                      std::to_string(want));
    };
    check("head_channels", got.head_channels, expected.head_channels);
    check("trunk_channels", got.trunk_channels, expected.trunk_channels);
    check("branch_reduce_channels", got.branch_reduce_channels, expected.branch_reduce_channels);
    check("branch_out_channels", got.branch_out_channels, expected.branch_out_channels);
    net.config.seed = expected.seed;
    return net;
}

std::vector<std::string> feature_selectors()
{
    return {"head1", "head2", "block1", "block2", "block3"};
}

std::vector<Plane> dump_feature_maps(const GeneratorNet& net, const Plane& frame, std::string_view selector)
{
    const auto names = feature_selectors();
    const auto it = std::find(names.begin(), names.end(), selector);
    if (it == names.end())
        throw Error(ErrorKind::InvalidArgument, "unknown feature selector '" + std::string(selector) +
                                                    "' (expected head1, head2, block1, block2 or block3)");
    NetworkTrace trace;
    network_forward(net, plane_to_tensor(frame), &trace);
    const auto index = static_cast<std::size_t>(it - names.begin());
    const Tensor& act = index < 2 ? trace.head_post[index] : trace.blocks[index - 2].output;

    std::vector<Plane> maps;
    const std::size_t n = act.shape().plane_size();
    for (int c = 0; c < act.shape().c; ++c) {
        const double* src = act.plane(0, c);
        const auto [lo, hi] = std::minmax_element(src, src + n);
        Plane out(frame.width(), frame.height());
        auto dst = out.samples();
        const double range = *hi - *lo;
        if (range > 0.0)
            for (std::size_t i = 0; i < n; ++i)
                dst[i] = static_cast<std::uint8_t>(std::lround((src[i] - *lo) / range * 255.0));
        maps.push_back(std::move(out));
    }
    return maps;
}

}  // namespace drpg
