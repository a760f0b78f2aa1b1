#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace agbmap::nn {

/// Buffers are over-aligned so GEMM kernels take the same path on every run.
using Floats = std::vector<float, Eigen::aligned_allocator<float>>;

/// Dense float tensor in NCHW order.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    Floats v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {}

    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
    std::size_t sample_size() const noexcept { return plane() * c; }
    float* sample(int i) noexcept { return v.data() + sample_size() * i; }
    const float* sample(int i) const noexcept { return v.data() + sample_size() * i; }
};

/// A learnable array and its gradient.
struct Param {
    Floats value;
    Floats grad;

    explicit Param(std::size_t n = 0) : value(n, 0.0f), grad(n, 0.0f) {}
};

/// 'same'-padded k x k convolution (k = 1 or 3), optionally followed by ReLU.
class Conv2d {
public:
    Conv2d(int cin, int cout, int k, bool relu);
    void init(std::uint64_t seed, double std);
    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dy);
    std::vector<Param*> params() { return {&w_, &b_}; }
    int in_channels() const noexcept { return cin_; }
    int out_channels() const noexcept { return cout_; }
    Param& weight() noexcept { return w_; }
    Param& bias() noexcept { return b_; }

private:
    int cin_, cout_, k_;
    bool relu_;
    Param w_, b_;  // w_: cout x (cin * k * k)
    Tensor x_, y_;
};

/// 2x2 max pooling with stride 2.
class MaxPool2 {
public:
    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dy);

private:
    std::vector<std::uint8_t> arg_;
    int h_ = 0, w_ = 0;
};

/// 2x2 transposed convolution with stride 2 (exact 2x upsampling).
class UpConv2 {
public:
    UpConv2(int cin, int cout);
    void init(std::uint64_t seed, double std);
    Tensor forward(const Tensor& x, bool train);
    Tensor backward(const Tensor& dy);
    std::vector<Param*> params() { return {&w_, &b_}; }

private:
    int cin_, cout_;
    Param w_, b_;  // w_: (cout * 4) x cin
    Tensor x_;
};

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits a gradient over concatenated channels back into its two parts.
void split_channels(const Tensor& d, int c_first, Tensor& da, Tensor& db);

struct UNetConfig {
    int in_channels = 15;
    int depth = 4;
    int base_width = 32;

    friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

/// Encoder/decoder with skip concatenations and a linear 1x1 head. Output is
/// offset + scale * head, where offset/scale are fixed (not learned) and let
/// the head work in standardised units.
class UNet {
public:
    UNet(const UNetConfig& config, std::uint64_t seed);

    const UNetConfig& config() const noexcept { return config_; }
    /// Input sides must be divisible by 2^depth; throws ShapeMismatch otherwise.
    Tensor forward(const Tensor& x, bool train);
    /// Accumulates parameter gradients from d(loss)/d(output).
    void backward(const Tensor& dy);
    void zero_grad();

    std::vector<Param*> params();
    std::size_t parameter_count();
    std::vector<float> flat_weights();
    void set_flat_weights(std::span<const float> w);

    Conv2d& head() noexcept { return head_; }
    double out_offset = 0.0;
    double out_scale = 1.0;

private:
    struct Level {
        Conv2d a, b;
    };
    UNetConfig config_;
    std::vector<Level> enc_;
    std::vector<MaxPool2> pool_;
    Level bottom_;
    std::vector<UpConv2> up_;
    std::vector<Level> dec_;
    Conv2d head_;
    std::vector<int> skip_channels_;
};

/// Adam with the usual bias correction.
class Adam {
public:
    Adam(std::vector<Param*> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step();

private:
    std::vector<Param*> params_;
    std::vector<Floats> m_, v_;
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
};

}  // namespace agbmap::nn
