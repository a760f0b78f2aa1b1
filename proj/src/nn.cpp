#include "agbmap/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "agbmap/error.hpp"
#include "agbmap/rng.hpp"

namespace agbmap::nn {

namespace {

using MatR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::Map<MatR, 0, Eigen::OuterStride<>>;
using CStrided = Eigen::Map<const MatR, 0, Eigen::OuterStride<>>;

// Rows of output processed per GEMM, bounding the im2col buffer.
int chunk_rows(int w) { return std::max(1, 8192 / std::max(1, w)); }

void im2col(const float* x, int cin, int h, int w, int k, int y0, int y1, float* col) {
    const int pad = k / 2;
    const std::size_t span = static_cast<std::size_t>(y1 - y0) * w;
    for (int ci = 0; ci < cin; ++ci) {
        const float* xc = x + static_cast<std::size_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* out = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * span;
                for (int y = y0; y < y1; ++y) {
                    float* o = out + static_cast<std::size_t>(y - y0) * w;
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) {
                        std::fill(o, o + w, 0.0f);
                        continue;
                    }
                    const float* src = xc + static_cast<std::size_t>(sy) * w;
                    const int dx = kx - pad;
                    const int lo = std::max(0, -dx), hi = std::min(w, w - dx);
                    std::fill(o, o + lo, 0.0f);
                    std::copy(src + lo + dx, src + hi + dx, o + lo);
                    std::fill(o + hi, o + w, 0.0f);
                }
            }
        }
    }
}

void col2im_add(const float* col, int cin, int h, int w, int k, int y0, int y1, float* dx) {
    const int pad = k / 2;
    const std::size_t span = static_cast<std::size_t>(y1 - y0) * w;
    for (int ci = 0; ci < cin; ++ci) {
        float* dc = dx + static_cast<std::size_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* in = col + static_cast<std::size_t>((ci * k + ky) * k + kx) * span;
                for (int y = y0; y < y1; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    const float* c = in + static_cast<std::size_t>(y - y0) * w;
                    float* d = dc + static_cast<std::size_t>(sy) * w;
                    const int off = kx - pad;
                    const int lo = std::max(0, -off), hi = std::min(w, w - off);
                    for (int x = lo; x < hi; ++x) d[x + off] += c[x];
                }
            }
        }
    }
}

void normal_init(Param& p, std::uint64_t seed, double std) {
    Rng rng(seed);
    for (auto& v : p.value) v = static_cast<float>(rng.normal(0.0, std));
}

}  // namespace

Conv2d::Conv2d(int cin, int cout, int k, bool relu)
    : cin_(cin), cout_(cout), k_(k), relu_(relu),
      w_(static_cast<std::size_t>(cout) * cin * k * k), b_(static_cast<std::size_t>(cout)) {}

void Conv2d::init(std::uint64_t seed, double std) {
    normal_init(w_, seed, std);
    std::fill(b_.value.begin(), b_.value.end(), 0.0f);
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
    if (x.c != cin_) {
        throw Error(ErrorCode::ShapeMismatch,
                    "convolution expects " + std::to_string(cin_) + " channels, got " + std::to_string(x.c));
    }
    Tensor y(x.n, cout_, x.h, x.w);
    const int K = cin_ * k_ * k_;
    const int rows = chunk_rows(x.w);
    Floats col(static_cast<std::size_t>(K) * std::min(rows, x.h) * x.w);
    const Eigen::Map<const MatR> W(w_.value.data(), cout_, K);
    const Eigen::Map<const Eigen::VectorXf> b(b_.value.data(), cout_);
    const auto hw = static_cast<Eigen::Index>(x.plane());
    for (int n = 0; n < x.n; ++n) {
        for (int y0 = 0; y0 < x.h; y0 += rows) {
            const int y1 = std::min(x.h, y0 + rows);
            const Eigen::Index P = static_cast<Eigen::Index>(y1 - y0) * x.w;
            im2col(x.sample(n), cin_, x.h, x.w, k_, y0, y1, col.data());
            Strided Y(y.sample(n) + static_cast<std::size_t>(y0) * x.w, cout_, P, Eigen::OuterStride<>(hw));
            Y.noalias() = W * Eigen::Map<const MatR>(col.data(), K, P);
            Y.colwise() += b;
            if (relu_) Y = Y.cwiseMax(0.0f);
        }
    }
    if (train) {
        x_ = x;
        if (relu_) y_ = y;
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy_in) {
    Tensor dy = dy_in;
    if (relu_) {
        for (std::size_t i = 0; i < dy.v.size(); ++i)
            if (y_.v[i] <= 0.0f) dy.v[i] = 0.0f;
    }
    const Tensor& x = x_;
    Tensor dx(x.n, x.c, x.h, x.w);
    const int K = cin_ * k_ * k_;
    const int rows = chunk_rows(x.w);
    Floats col(static_cast<std::size_t>(K) * std::min(rows, x.h) * x.w);
    Floats dcol(col.size());
    const Eigen::Map<const MatR> W(w_.value.data(), cout_, K);
    Eigen::Map<MatR> gW(w_.grad.data(), cout_, K);
    Eigen::Map<Eigen::VectorXf> gb(b_.grad.data(), cout_);
    const auto hw = static_cast<Eigen::Index>(x.plane());
    for (int n = 0; n < x.n; ++n) {
        for (int y0 = 0; y0 < x.h; y0 += rows) {
            const int y1 = std::min(x.h, y0 + rows);
            const Eigen::Index P = static_cast<Eigen::Index>(y1 - y0) * x.w;
            im2col(x.sample(n), cin_, x.h, x.w, k_, y0, y1, col.data());
            const CStrided dY(dy.sample(n) + static_cast<std::size_t>(y0) * x.w, cout_, P, Eigen::OuterStride<>(hw));
            const Eigen::Map<const MatR> C(col.data(), K, P);
            gW.noalias() += dY * C.transpose();
            gb += dY.rowwise().sum();
            Eigen::Map<MatR> dC(dcol.data(), K, P);
            dC.noalias() = W.transpose() * dY;
            col2im_add(dcol.data(), cin_, x.h, x.w, k_, y0, y1, dx.sample(n));
        }
    }
    return dx;
}

Tensor MaxPool2::forward(const Tensor& x, bool train) {
    Tensor y(x.n, x.c, x.h / 2, x.w / 2);
    if (train) arg_.assign(y.v.size(), 0);
    h_ = x.h;
    w_ = x.w;
    std::size_t o = 0;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            const float* src = x.sample(n) + static_cast<std::size_t>(c) * x.plane();
            for (int i = 0; i < y.h; ++i) {
                for (int j = 0; j < y.w; ++j, ++o) {
                    const float* p = src + static_cast<std::size_t>(2 * i) * x.w + 2 * j;
                    const float v[4] = {p[0], p[1], p[x.w], p[x.w + 1]};
                    std::uint8_t best = 0;
                    for (std::uint8_t q = 1; q < 4; ++q)
                        if (v[q] > v[best]) best = q;
                    y.v[o] = v[best];
                    if (train) arg_[o] = best;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2::backward(const Tensor& dy) {
    Tensor dx(dy.n, dy.c, h_, w_);
    std::size_t o = 0;
    for (int n = 0; n < dy.n; ++n) {
        for (int c = 0; c < dy.c; ++c) {
            float* dst = dx.sample(n) + static_cast<std::size_t>(c) * dx.plane();
            for (int i = 0; i < dy.h; ++i) {
                for (int j = 0; j < dy.w; ++j, ++o) {
                    const int q = arg_[o];
                    dst[static_cast<std::size_t>(2 * i + q / 2) * w_ + 2 * j + q % 2] += dy.v[o];
                }
            }
        }
    }
    return dx;
}

UpConv2::UpConv2(int cin, int cout)
    : cin_(cin), cout_(cout), w_(static_cast<std::size_t>(cout) * 4 * cin), b_(static_cast<std::size_t>(cout)) {}

void UpConv2::init(std::uint64_t seed, double std) {
    normal_init(w_, seed, std);
    std::fill(b_.value.begin(), b_.value.end(), 0.0f);
}

Tensor UpConv2::forward(const Tensor& x, bool train) {
    Tensor y(x.n, cout_, 2 * x.h, 2 * x.w);
    const Eigen::Map<const MatR> W(w_.value.data(), 4 * cout_, cin_);
    const auto hw = static_cast<Eigen::Index>(x.plane());
    MatR tmp(4 * cout_, hw);
    for (int n = 0; n < x.n; ++n) {
        tmp.noalias() = W * Eigen::Map<const MatR>(x.sample(n), cin_, hw);
        for (int co = 0; co < cout_; ++co) {
            float* dst = y.sample(n) + static_cast<std::size_t>(co) * y.plane();
            const float bias = b_.value[co];
            for (int d = 0; d < 4; ++d) {
                const float* src = tmp.data() + static_cast<std::size_t>(co * 4 + d) * hw;
                for (int i = 0; i < x.h; ++i) {
                    float* row = dst + static_cast<std::size_t>(2 * i + d / 2) * y.w + d % 2;
                    for (int j = 0; j < x.w; ++j) row[2 * j] = src[static_cast<std::size_t>(i) * x.w + j] + bias;
                }
            }
        }
    }
    if (train) x_ = x;
    return y;
}

Tensor UpConv2::backward(const Tensor& dy) {
    const Tensor& x = x_;
    Tensor dx(x.n, x.c, x.h, x.w);
    const Eigen::Map<const MatR> W(w_.value.data(), 4 * cout_, cin_);
    Eigen::Map<MatR> gW(w_.grad.data(), 4 * cout_, cin_);
    const auto hw = static_cast<Eigen::Index>(x.plane());
    MatR dtmp(4 * cout_, hw);
    for (int n = 0; n < x.n; ++n) {
        for (int co = 0; co < cout_; ++co) {
            const float* src = dy.sample(n) + static_cast<std::size_t>(co) * dy.plane();
            double bsum = 0.0;
            for (int d = 0; d < 4; ++d) {
                float* dst = dtmp.data() + static_cast<std::size_t>(co * 4 + d) * hw;
                for (int i = 0; i < x.h; ++i) {
                    const float* row = src + static_cast<std::size_t>(2 * i + d / 2) * dy.w + d % 2;
                    for (int j = 0; j < x.w; ++j) {
                        dst[static_cast<std::size_t>(i) * x.w + j] = row[2 * j];
                        bsum += row[2 * j];
                    }
                }
            }
            b_.grad[co] += static_cast<float>(bsum);
        }
        const Eigen::Map<const MatR> X(x.sample(n), cin_, hw);
        gW.noalias() += dtmp * X.transpose();
        Eigen::Map<MatR>(dx.sample(n), cin_, hw).noalias() = W.transpose() * dtmp;
    }
    return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    Tensor out(a.n, a.c + b.c, a.h, a.w);
    for (int n = 0; n < a.n; ++n) {
        std::copy(a.sample(n), a.sample(n) + a.sample_size(), out.sample(n));
        std::copy(b.sample(n), b.sample(n) + b.sample_size(), out.sample(n) + a.sample_size());
    }
    return out;
}

void split_channels(const Tensor& d, int c_first, Tensor& da, Tensor& db) {
    da = Tensor(d.n, c_first, d.h, d.w);
    db = Tensor(d.n, d.c - c_first, d.h, d.w);
    for (int n = 0; n < d.n; ++n) {
        const float* src = d.sample(n);
        std::copy(src, src + da.sample_size(), da.sample(n));
        std::copy(src + da.sample_size(), src + d.sample_size(), db.sample(n));
    }
}

namespace {

double he_std(int fan_in) { return std::sqrt(2.0 / fan_in); }

}  // namespace

UNet::UNet(const UNetConfig& config, std::uint64_t seed)
    : config_(config),
      bottom_{Conv2d(1, 1, 3, true), Conv2d(1, 1, 3, true)},
      head_(std::max(1, config.base_width), 1, 1, false) {
    if (config.in_channels < 1 || config.depth < 1 || config.base_width < 1) {
        throw Error(ErrorCode::InvalidArgument, "UNet needs in_channels, depth and base_width >= 1");
    }
    std::uint64_t layer = 0;
    auto conv = [&](int cin, int cout) {
        Conv2d c(cin, cout, 3, true);
        c.init(derive_seed(seed, ++layer), he_std(cin * 9));
        return c;
    };
    int cin = config.in_channels;
    for (int l = 0; l < config.depth; ++l) {
        const int w = config.base_width << l;
        enc_.push_back({conv(cin, w), conv(w, w)});
        pool_.emplace_back();
        skip_channels_.push_back(w);
        cin = w;
    }
    const int wb = config.base_width << config.depth;
    bottom_ = {conv(cin, wb), conv(wb, wb)};
    cin = wb;
    for (int l = config.depth - 1; l >= 0; --l) {
        const int w = config.base_width << l;
        UpConv2 up(cin, w);
        up.init(derive_seed(seed, ++layer), he_std(cin));
        up_.push_back(std::move(up));
        dec_.push_back({conv(2 * w, w), conv(w, w)});
        cin = w;
    }
    head_.init(derive_seed(seed, ++layer), std::sqrt(1.0 / cin));
}

Tensor UNet::forward(const Tensor& x, bool train) {
    const int m = 1 << config_.depth;
    if (x.c != config_.in_channels || x.h % m != 0 || x.w % m != 0 || x.h == 0 || x.w == 0) {
        throw Error(ErrorCode::ShapeMismatch, "UNet input " + std::to_string(x.c) + "x" + std::to_string(x.h) + "x" +
                                                  std::to_string(x.w) + " needs " + std::to_string(config_.in_channels) +
                                                  " channels and sides divisible by " + std::to_string(m));
    }
    std::vector<Tensor> skips;
    Tensor t = x;
    for (int l = 0; l < config_.depth; ++l) {
        t = enc_[l].b.forward(enc_[l].a.forward(t, train), train);
        skips.push_back(t);
        t = pool_[l].forward(t, train);
    }
    t = bottom_.b.forward(bottom_.a.forward(t, train), train);
    for (int i = 0; i < config_.depth; ++i) {
        const int l = config_.depth - 1 - i;
        t = concat_channels(up_[i].forward(t, train), skips[l]);
        t = dec_[i].b.forward(dec_[i].a.forward(t, train), train);
    }
    t = head_.forward(t, train);
    const auto off = static_cast<float>(out_offset), sc = static_cast<float>(out_scale);
    for (auto& v : t.v) v = off + sc * v;
    return t;
}

void UNet::backward(const Tensor& dy) {
    Tensor d = dy;
    const auto sc = static_cast<float>(out_scale);
    for (auto& v : d.v) v *= sc;
    d = head_.backward(d);
    std::vector<Tensor> dskips(config_.depth);
    for (int i = config_.depth - 1; i >= 0; --i) {
        const int l = config_.depth - 1 - i;
        d = dec_[i].a.backward(dec_[i].b.backward(d));
        Tensor dup;
        split_channels(d, config_.base_width << l, dup, dskips[l]);
        d = up_[i].backward(dup);
    }
    d = bottom_.a.backward(bottom_.b.backward(d));
    for (int l = config_.depth - 1; l >= 0; --l) {
        d = pool_[l].backward(d);
        for (std::size_t k = 0; k < d.v.size(); ++k) d.v[k] += dskips[l].v[k];
        d = enc_[l].a.backward(enc_[l].b.backward(d));
    }
}

std::vector<Param*> UNet::params() {
    std::vector<Param*> out;
    auto add = [&](std::vector<Param*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
    for (auto& lv : enc_) {
        add(lv.a.params());
        add(lv.b.params());
    }
    add(bottom_.a.params());
    add(bottom_.b.params());
    for (std::size_t i = 0; i < up_.size(); ++i) {
        add(up_[i].params());
        add(dec_[i].a.params());
        add(dec_[i].b.params());
    }
    add(head_.params());
    return out;
}

void UNet::zero_grad() {
    for (auto* p : params()) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

std::size_t UNet::parameter_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->value.size();
    return n;
}

std::vector<float> UNet::flat_weights() {
    std::vector<float> out;
    out.reserve(parameter_count());
    for (auto* p : params()) out.insert(out.end(), p->value.begin(), p->value.end());
    return out;
}

void UNet::set_flat_weights(std::span<const float> w) {
    if (w.size() != parameter_count()) {
        throw Error(ErrorCode::ShapeMismatch, "weight blob holds " + std::to_string(w.size()) + " values, network needs " +
                                                  std::to_string(parameter_count()));
    }
    std::size_t o = 0;
    for (auto* p : params()) {
        std::copy(w.begin() + static_cast<std::ptrdiff_t>(o), w.begin() + static_cast<std::ptrdiff_t>(o + p->value.size()),
                  p->value.begin());
        o += p->value.size();
    }
}

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto* p : params_) {
        m_.emplace_back(p->value.size(), 0.0f);
        v_.emplace_back(p->value.size(), 0.0f);
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    const auto b1 = static_cast<float>(b1_), b2 = static_cast<float>(b2_);
    const auto step = static_cast<float>(lr_ / c1);
    const auto inv_c2 = static_cast<float>(1.0 / c2);
    const auto eps = static_cast<float>(eps_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const float g = p.grad[i];
            m[i] = b1 * m[i] + (1.0f - b1) * g;
            v[i] = b2 * v[i] + (1.0f - b2) * g * g;
            p.value[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
        }
    }
}

}  // namespace agbmap::nn
