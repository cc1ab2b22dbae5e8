#pragma once

// Minimal NCHW tensor engine: same-padded (optionally dilated) convolution,
// ReLU, channel concatenation and the Adadelta update, each with an explicit
// backward pass. Everything is computed in double precision.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace drpg {

struct Shape4 {
    int n = 0;  // batch
    int c = 0;  // channels
    int h = 0;
    int w = 0;

    std::size_t size() const noexcept
    {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(h) * w; }
    std::string str() const;

    friend bool operator==(const Shape4&, const Shape4&) = default;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape4 shape, double fill = 0.0);
    Tensor(Shape4 shape, std::vector<double> values);

    const Shape4& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

    double* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
    const double* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset(int n, int c, int y, int x) const noexcept
    {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }

    Shape4 shape_;
    std::vector<double> data_;
};

/// Square-kernel convolution with stride 1 and "same" zero padding:
/// padding == dilation * (kernel - 1) / 2.
struct ConvParams {
    Tensor weights;  // (out_ch, in_ch, k, k)
    std::vector<double> bias;
    int dilation = 1;
    int padding = 0;

    static ConvParams same(int in_channels, int out_channels, int kernel, int dilation = 1);

    int out_channels() const noexcept { return weights.shape().n; }
    int in_channels() const noexcept { return weights.shape().c; }
    int kernel() const noexcept { return weights.shape().h; }

    /// Span of input samples one output sample depends on: dilation*(k-1)+1.
    int extent() const noexcept { return dilation * (kernel() - 1) + 1; }

    void validate() const;
};

struct ConvGrads {
    Tensor input;
    Tensor weights;
    std::vector<double> bias;
};

Tensor conv2d_forward(const Tensor& input, const ConvParams& params);
ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params, const Tensor& grad_out);

Tensor relu(const Tensor& input);
// Subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

Tensor concat_channels(std::span<const Tensor> parts);
std::vector<Tensor> split_channels(const Tensor& joined, std::span<const int> channel_counts);

/// a*x + b*y elementwise.
Tensor scaled_add(double a, const Tensor& x, double b, const Tensor& y);

struct AdadeltaState {
    std::vector<double> sq_grad;   // E[g^2]
    std::vector<double> sq_delta;  // E[dx^2]
    double rho = 0.95;
    double eps = 1e-6;
    double lr = 1e-4;

    AdadeltaState() = default;
    explicit AdadeltaState(std::size_t parameter_count, double rho = 0.95, double eps = 1e-6, double lr = 1e-4);
};

/// One Adadelta update. Throws (leaving param and state untouched) when the
/// gradient holds a non-finite value or shapes disagree.
void adadelta_step(std::span<double> param, std::span<const double> grad, AdadeltaState& state);

}  // namespace drpg
