#include "drpg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "drpg/error.hpp"
#include "drpg/parallel.hpp"
#include "drpg/simd/kernels.hpp"

namespace drpg {

std::string Shape4::str() const
{
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape4 shape, double fill)
    : shape_(shape)
{
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
        throw Error(ErrorKind::InvalidArgument, "negative tensor dimension " + shape.str());
    data_.assign(shape.size(), fill);
}

Tensor::Tensor(Shape4 shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values))
{
    if (data_.size() != shape.size())
        throw Error(ErrorKind::ShapeMismatch, "tensor of shape " + shape.str() + " needs " +
                                                  std::to_string(shape.size()) + " values, got " +
                                                  std::to_string(data_.size()));
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ConvParams ConvParams::same(int in_channels, int out_channels, int kernel, int dilation)
{
    ConvParams p;
    p.weights = Tensor({out_channels, in_channels, kernel, kernel});
    p.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
    p.dilation = dilation;
    p.padding = dilation * (kernel - 1) / 2;
    p.validate();
    return p;
}

void ConvParams::validate() const
{
    const Shape4& s = weights.shape();
    if (s.h != s.w)
        throw Error(ErrorKind::ShapeMismatch, "conv kernel must be square, got " + s.str());
    if (s.h < 1 || s.h % 2 == 0)
        throw Error(ErrorKind::InvalidArgument, "conv kernel size must be odd, got " + std::to_string(s.h));
    if (dilation < 1)
        throw Error(ErrorKind::InvalidArgument, "dilation must be positive");
    if (padding != dilation * (s.h - 1) / 2)
        throw Error(ErrorKind::InvalidArgument, "padding " + std::to_string(padding) + " is not 'same' for kernel " +
                                                    std::to_string(s.h) + " dilation " + std::to_string(dilation));
    if (bias.size() != static_cast<std::size_t>(s.n))
        throw Error(ErrorKind::ShapeMismatch, "bias length " + std::to_string(bias.size()) +
                                                  " does not match out_ch " + std::to_string(s.n));
}

namespace {

void require_finite(const Tensor& t, const char* op, const char* what)
{
    if (!t.all_finite())
        throw Error(ErrorKind::NonFinite, std::string(op) + ": non-finite value in " + what);
}

// Valid output range [lo, hi) along one axis for tap offset `off`, so that
// lo + off and hi - 1 + off stay inside [0, len).
struct Span1 {
    int lo;
    int hi;
};

Span1 valid_range(int len, int off)
{
    return {std::max(0, -off), std::min(len, len - off)};
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const ConvParams& params)
{
    params.validate();
    const Shape4& in = input.shape();
    if (in.c != params.in_channels())
        throw Error(ErrorKind::ShapeMismatch, "conv2d_forward: channel axis mismatch (input has " +
                                                  std::to_string(in.c) + ", weights expect " +
                                                  std::to_string(params.in_channels()) + ")");
    require_finite(input, "conv2d_forward", "input");

    const int out_ch = params.out_channels();
    const int k = params.kernel();
    const int r = (k - 1) / 2;
    const int d = params.dilation;
    const int H = in.h, W = in.w;
    Tensor out({in.n, out_ch, H, W});
    const auto& kern = simd::active_kernels();

    parallel_for(in.n * out_ch, [&](int job) {
        const int n = job / out_ch;
        const int o = job % out_ch;
        double* dst = out.plane(n, o);
        std::fill(dst, dst + in.plane_size(), params.bias[o]);
        for (int c = 0; c < in.c; ++c) {
            const double* src = input.plane(n, c);
            for (int i = 0; i < k; ++i) {
                const int dy = d * (i - r);
                const Span1 ys = valid_range(H, dy);
                for (int j = 0; j < k; ++j) {
                    const int dx = d * (j - r);
                    const Span1 xs = valid_range(W, dx);
                    if (ys.lo >= ys.hi || xs.lo >= xs.hi)
                        continue;
                    const double w = params.weights.at(o, c, i, j);
                    if (dx == 0) {
                        kern.axpy_f64(w, src + static_cast<std::size_t>(ys.lo + dy) * W,
                                      dst + static_cast<std::size_t>(ys.lo) * W,
                                      static_cast<std::size_t>(ys.hi - ys.lo) * W);
                        continue;
                    }
                    for (int y = ys.lo; y < ys.hi; ++y)
                        kern.axpy_f64(w, src + static_cast<std::size_t>(y + dy) * W + xs.lo + dx,
                                      dst + static_cast<std::size_t>(y) * W + xs.lo,
                                      static_cast<std::size_t>(xs.hi - xs.lo));
                }
            }
        }
    });
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params, const Tensor& grad_out)
{
    params.validate();
    const Shape4& in = input.shape();
    if (in.c != params.in_channels())
        throw Error(ErrorKind::ShapeMismatch, "conv2d_backward: channel axis mismatch (input has " +
                                                  std::to_string(in.c) + ", weights expect " +
                                                  std::to_string(params.in_channels()) + ")");
    const Shape4 expected{in.n, params.out_channels(), in.h, in.w};
    if (grad_out.shape() != expected)
        throw Error(ErrorKind::ShapeMismatch,
                    "conv2d_backward: grad_out shape " + grad_out.shape().str() + " != output shape " + expected.str());

    const int out_ch = params.out_channels();
    const int k = params.kernel();
    const int r = (k - 1) / 2;
    const int d = params.dilation;
    const int H = in.h, W = in.w;
    const auto& kern = simd::active_kernels();

    ConvGrads g;
    g.input = Tensor(in);
    g.weights = Tensor(params.weights.shape());
    g.bias.assign(static_cast<std::size_t>(out_ch), 0.0);

    // d(loss)/d(input): scatter every tap back onto the input plane.
    parallel_for(in.n * in.c, [&](int job) {
        const int n = job / in.c;
        const int c = job % in.c;
        double* gin = g.input.plane(n, c);
        for (int o = 0; o < out_ch; ++o) {
            const double* gout = grad_out.plane(n, o);
            for (int i = 0; i < k; ++i) {
                const int dy = d * (i - r);
                const Span1 ys = valid_range(H, dy);
                for (int j = 0; j < k; ++j) {
                    const int dx = d * (j - r);
                    const Span1 xs = valid_range(W, dx);
                    if (ys.lo >= ys.hi || xs.lo >= xs.hi)
                        continue;
                    const double w = params.weights.at(o, c, i, j);
                    if (dx == 0) {
                        kern.axpy_f64(w, gout + static_cast<std::size_t>(ys.lo) * W,
                                      gin + static_cast<std::size_t>(ys.lo + dy) * W,
                                      static_cast<std::size_t>(ys.hi - ys.lo) * W);
                        continue;
                    }
                    for (int y = ys.lo; y < ys.hi; ++y)
                        kern.axpy_f64(w, gout + static_cast<std::size_t>(y) * W + xs.lo,
                                      gin + static_cast<std::size_t>(y + dy) * W + xs.lo + dx,
                                      static_cast<std::size_t>(xs.hi - xs.lo));
                }
            }
        }
    });

    // Weight and bias gradients: per output channel, batch items summed in order.
    parallel_for(out_ch, [&](int o) {
        for (int n = 0; n < in.n; ++n) {
            const double* gout = grad_out.plane(n, o);
            double bsum = 0.0;
            for (std::size_t p = 0; p < in.plane_size(); ++p)
                bsum += gout[p];
            g.bias[o] += bsum;
            for (int c = 0; c < in.c; ++c) {
                const double* src = input.plane(n, c);
                for (int i = 0; i < k; ++i) {
                    const int dy = d * (i - r);
                    const Span1 ys = valid_range(H, dy);
                    for (int j = 0; j < k; ++j) {
                        const int dx = d * (j - r);
                        const Span1 xs = valid_range(W, dx);
                        if (ys.lo >= ys.hi || xs.lo >= xs.hi)
                            continue;
                        double acc = 0.0;
                        if (dx == 0) {
                            acc = kern.dot_f64(gout + static_cast<std::size_t>(ys.lo) * W,
                                               src + static_cast<std::size_t>(ys.lo + dy) * W,
                                               static_cast<std::size_t>(ys.hi - ys.lo) * W);
                        } else {
                            for (int y = ys.lo; y < ys.hi; ++y)
                                acc += kern.dot_f64(gout + static_cast<std::size_t>(y) * W + xs.lo,
                                                    src + static_cast<std::size_t>(y + dy) * W + xs.lo + dx,
                                                    static_cast<std::size_t>(xs.hi - xs.lo));
                        }
                        g.weights.at(o, c, i, j) += acc;
                    }
                }
            }
        }
    });
    return g;
}

Tensor relu(const Tensor& input)
{
    Tensor out(input.shape());
    auto src = input.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out)
{
    if (input.shape() != grad_out.shape())
        throw Error(ErrorKind::ShapeMismatch,
                    "relu_backward: input " + input.shape().str() + " vs grad " + grad_out.shape().str());
    Tensor out(input.shape());
    auto src = input.values();
    auto g = grad_out.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] > 0.0 ? g[i] : 0.0;
    return out;
}

Tensor concat_channels(std::span<const Tensor> parts)
{
    if (parts.empty())
        throw Error(ErrorKind::InvalidArgument, "concat_channels: no parts");
    const Shape4& first = parts.front().shape();
    int channels = 0;
    for (const Tensor& t : parts) {
        const Shape4& s = t.shape();
        if (s.n != first.n || s.h != first.h || s.w != first.w)
            throw Error(ErrorKind::ShapeMismatch,
                        "concat_channels: part " + s.str() + " does not match " + first.str() + " outside the channel axis");
        channels += s.c;
    }
    Tensor out({first.n, channels, first.h, first.w});
    for (int n = 0; n < first.n; ++n) {
        int base = 0;
        for (const Tensor& t : parts) {
            for (int c = 0; c < t.shape().c; ++c)
                std::copy_n(t.plane(n, c), first.plane_size(), out.plane(n, base + c));
            base += t.shape().c;
        }
    }
    return out;
}

std::vector<Tensor> split_channels(const Tensor& joined, std::span<const int> channel_counts)
{
    const Shape4& s = joined.shape();
    int total = 0;
    for (int c : channel_counts)
        total += c;
    if (total != s.c)
        throw Error(ErrorKind::ShapeMismatch, "split_channels: counts sum to " + std::to_string(total) +
                                                  ", tensor has " + std::to_string(s.c) + " channels");
    std::vector<Tensor> parts;
    parts.reserve(channel_counts.size());
    int base = 0;
    for (int count : channel_counts) {
        Tensor part({s.n, count, s.h, s.w});
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < count; ++c)
                std::copy_n(joined.plane(n, base + c), s.plane_size(), part.plane(n, c));
        base += count;
        parts.push_back(std::move(part));
    }
    return parts;
}

Tensor scaled_add(double a, const Tensor& x, double b, const Tensor& y)
{
    if (x.shape() != y.shape())
        throw Error(ErrorKind::ShapeMismatch, "scaled_add: " + x.shape().str() + " vs " + y.shape().str());
    Tensor out(x.shape());
    auto xs = x.values();
    auto ys = y.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = a * xs[i] + b * ys[i];
    return out;
}

AdadeltaState::AdadeltaState(std::size_t parameter_count, double rho_, double eps_, double lr_)
    : sq_grad(parameter_count, 0.0), sq_delta(parameter_count, 0.0), rho(rho_), eps(eps_), lr(lr_)
{
}

void adadelta_step(std::span<double> param, std::span<const double> grad, AdadeltaState& state)
{
    if (param.size() != grad.size() || state.sq_grad.size() != param.size() || state.sq_delta.size() != param.size())
        throw Error(ErrorKind::ShapeMismatch, "adadelta_step: parameter/gradient/state sizes disagree (" +
                                                  std::to_string(param.size()) + ", " + std::to_string(grad.size()) +
                                                  ", " + std::to_string(state.sq_grad.size()) + ")");
    for (double g : grad)
        if (!std::isfinite(g))
            throw Error(ErrorKind::NonFinite, "adadelta_step: non-finite gradient, update aborted");

    const double rho = state.rho;
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        state.sq_grad[i] = rho * state.sq_grad[i] + (1.0 - rho) * g * g;
        const double delta = -std::sqrt((state.sq_delta[i] + state.eps) / (state.sq_grad[i] + state.eps)) * g;
        state.sq_delta[i] = rho * state.sq_delta[i] + (1.0 - rho) * delta * delta;
        param[i] += state.lr * delta;
    }
}

}  // namespace drpg
