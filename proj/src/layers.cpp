#include "polycl/layers.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace polycl {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;

namespace {

// He-style init scaled for leaky-ReLU fan-in.
void he_init(Tensor& t, int fan_in, float negative_slope, std::mt19937_64& rng) {
    const float gain = std::sqrt(2.f / (1.f + negative_slope * negative_slope));
    std::normal_distribution<float> dist(0.f, gain / std::sqrt(float(fan_in)));
    for (float& v : t.data) v = dist(rng);
}

void im2col(const float* x, int c, int h, int w, int k, int pad, std::vector<float>& cols) {
    const int hw = h * w;
    cols.assign(static_cast<size_t>(c) * k * k * hw, 0.f);
    size_t r = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx, ++r) {
                float* dst = cols.data() + r * hw;
                const float* src = x + static_cast<size_t>(ci) * hw;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    const int x0 = std::max(0, pad - kx);
                    const int x1 = std::min(w, w + pad - kx);
                    for (int xo = x0; xo < x1; ++xo)
                        dst[y * w + xo] = src[sy * w + xo + kx - pad];
                }
            }
}

void col2im_accum(const std::vector<float>& cols, int c, int h, int w, int k, int pad,
                  float* dx) {
    const int hw = h * w;
    size_t r = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx, ++r) {
                const float* src = cols.data() + r * hw;
                float* dst = dx + static_cast<size_t>(ci) * hw;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    const int x0 = std::max(0, pad - kx);
                    const int x1 = std::min(w, w + pad - kx);
                    for (int xo = x0; xo < x1; ++xo)
                        dst[sy * w + xo + kx - pad] += src[y * w + xo];
                }
            }
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_c, int out_c, int k, std::mt19937_64& rng,
               float negative_slope)
    : in_c_(in_c), out_c_(out_c), k_(k), pad_(k / 2) {
    weight.name = name + ".weight";
    weight.value = Tensor(out_c, in_c, k, k);
    weight.grad = Tensor(out_c, in_c, k, k);
    he_init(weight.value, in_c * k * k, negative_slope, rng);
    bias.name = name + ".bias";
    bias.value = Tensor(out_c, 1, 1, 1);
    bias.grad = Tensor(out_c, 1, 1, 1);
}

Tensor Conv2d::forward(const Tensor& x, Cache& cache) const {
    if (x.c != in_c_) throw ShapeMismatchError("Conv2d: channel mismatch " + x.shape_str());
    cache.input = x;
    Tensor y(x.n, out_c_, x.h, x.w);
    const int hw = x.plane();
    const int kdim = in_c_ * k_ * k_;
    std::vector<float> cols;
    MapConstMat wm(weight.value.data.data(), out_c_, kdim);
    for (int s = 0; s < x.n; ++s) {
        im2col(x.sample_ptr(s), in_c_, x.h, x.w, k_, pad_, cols);
        MapConstMat cm(cols.data(), kdim, hw);
        MapMat ym(y.sample_ptr(s), out_c_, hw);
        ym.noalias() = wm * cm;
        for (int oc = 0; oc < out_c_; ++oc) ym.row(oc).array() += bias.value.data[oc];
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy, const Cache& cache) {
    const Tensor& x = cache.input;
    Tensor dx(x.n, x.c, x.h, x.w);
    const int hw = x.plane();
    const int kdim = in_c_ * k_ * k_;
    std::vector<float> cols, dcols(static_cast<size_t>(kdim) * hw);
    MapConstMat wm(weight.value.data.data(), out_c_, kdim);
    MapMat dwm(weight.grad.data.data(), out_c_, kdim);
    for (int s = 0; s < x.n; ++s) {
        im2col(x.sample_ptr(s), in_c_, x.h, x.w, k_, pad_, cols);
        MapConstMat cm(cols.data(), kdim, hw);
        MapConstMat dym(dy.sample_ptr(s), out_c_, hw);
        dwm.noalias() += dym * cm.transpose();
        for (int oc = 0; oc < out_c_; ++oc) bias.grad.data[oc] += dym.row(oc).sum();
        MapMat dcm(dcols.data(), kdim, hw);
        dcm.noalias() = wm.transpose() * dym;
        col2im_accum(dcols, in_c_, x.h, x.w, k_, pad_, dx.sample_ptr(s));
    }
    return dx;
}

void Conv2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

InstanceNorm2d::InstanceNorm2d(std::string name, int channels) : channels_(channels) {
    gamma.name = name + ".gamma";
    gamma.value = Tensor(channels, 1, 1, 1, 1.f);
    gamma.grad = Tensor(channels, 1, 1, 1);
    beta.name = name + ".beta";
    beta.value = Tensor(channels, 1, 1, 1);
    beta.grad = Tensor(channels, 1, 1, 1);
}

Tensor InstanceNorm2d::forward(const Tensor& x, Cache& cache) const {
    if (x.c != channels_) throw ShapeMismatchError("InstanceNorm2d: channel mismatch");
    const int hw = x.plane();
    Tensor y(x.n, x.c, x.h, x.w);
    cache.xhat = Tensor(x.n, x.c, x.h, x.w);
    cache.inv_std.assign(static_cast<size_t>(x.n) * x.c, 0.f);
    for (int s = 0; s < x.n; ++s)
        for (int ci = 0; ci < x.c; ++ci) {
            const float* xp = x.data.data() + ((static_cast<size_t>(s) * x.c + ci) * hw);
            float* hp = cache.xhat.data.data() + ((static_cast<size_t>(s) * x.c + ci) * hw);
            float* yp = y.data.data() + ((static_cast<size_t>(s) * x.c + ci) * hw);
            double mean = 0.0;
            for (int i = 0; i < hw; ++i) mean += xp[i];
            mean /= hw;
            double var = 0.0;
            for (int i = 0; i < hw; ++i) var += (xp[i] - mean) * (xp[i] - mean);
            var /= hw;
            const float inv = 1.f / std::sqrt(float(var) + kEps);
            cache.inv_std[static_cast<size_t>(s) * x.c + ci] = inv;
            const float g = gamma.value.data[ci], b = beta.value.data[ci];
            for (int i = 0; i < hw; ++i) {
                hp[i] = (xp[i] - float(mean)) * inv;
                yp[i] = g * hp[i] + b;
            }
        }
    return y;
}

Tensor InstanceNorm2d::backward(const Tensor& dy, const Cache& cache) {
    const Tensor& xhat = cache.xhat;
    const int hw = dy.plane();
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    for (int s = 0; s < dy.n; ++s)
        for (int ci = 0; ci < dy.c; ++ci) {
            const size_t base = (static_cast<size_t>(s) * dy.c + ci) * hw;
            const float* dyp = dy.data.data() + base;
            const float* hp = xhat.data.data() + base;
            float* dxp = dx.data.data() + base;
            const float g = gamma.value.data[ci];
            const float inv = cache.inv_std[static_cast<size_t>(s) * dy.c + ci];
            double sum_dy = 0.0, sum_dyh = 0.0;
            for (int i = 0; i < hw; ++i) {
                sum_dy += dyp[i];
                sum_dyh += double(dyp[i]) * hp[i];
            }
            gamma.grad.data[ci] += float(sum_dyh);
            beta.grad.data[ci] += float(sum_dy);
            const float m_dy = float(sum_dy / hw), m_dyh = float(sum_dyh / hw);
            for (int i = 0; i < hw; ++i)
                dxp[i] = g * inv * (dyp[i] - m_dy - hp[i] * m_dyh);
        }
    return dx;
}

void InstanceNorm2d::collect_params(std::vector<Param*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

Tensor LeakyReLU::forward(const Tensor& x, Cache& cache) const {
    Tensor y = x;
    cache.positive.assign(x.size(), 0);
    for (size_t i = 0; i < x.size(); ++i) {
        if (x.data[i] >= 0.f)
            cache.positive[i] = 1;
        else
            y.data[i] = slope_ * x.data[i];
    }
    return y;
}

Tensor LeakyReLU::backward(const Tensor& dy, const Cache& cache) const {
    Tensor dx = dy;
    for (size_t i = 0; i < dy.size(); ++i)
        if (!cache.positive[i]) dx.data[i] *= slope_;
    return dx;
}

Tensor MaxPool2x2::forward(const Tensor& x, Cache& cache) const {
    if (x.h % 2 || x.w % 2) throw ShapeMismatchError("MaxPool2x2: odd spatial size " + x.shape_str());
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor y(x.n, x.c, oh, ow);
    cache.argmax.assign(y.size(), 0);
    cache.in_h = x.h;
    cache.in_w = x.w;
    size_t oi = 0;
    for (int s = 0; s < x.n; ++s)
        for (int ci = 0; ci < x.c; ++ci) {
            const float* xp = x.data.data() + (static_cast<size_t>(s) * x.c + ci) * x.plane();
            for (int y0 = 0; y0 < oh; ++y0)
                for (int x0 = 0; x0 < ow; ++x0, ++oi) {
                    int best_idx = (2 * y0) * x.w + 2 * x0;
                    float best = xp[best_idx];
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const int idx = (2 * y0 + dy) * x.w + 2 * x0 + dx;
                            if (xp[idx] > best) {
                                best = xp[idx];
                                best_idx = idx;
                            }
                        }
                    y.data[oi] = best;
                    cache.argmax[oi] = best_idx;
                }
        }
    return y;
}

Tensor MaxPool2x2::backward(const Tensor& dy, const Cache& cache) const {
    Tensor dx(dy.n, dy.c, cache.in_h, cache.in_w);
    const int in_plane = cache.in_h * cache.in_w;
    size_t oi = 0;
    for (int s = 0; s < dy.n; ++s)
        for (int ci = 0; ci < dy.c; ++ci) {
            float* dxp = dx.data.data() + (static_cast<size_t>(s) * dy.c + ci) * in_plane;
            for (int i = 0; i < dy.plane(); ++i, ++oi) dxp[cache.argmax[oi]] += dy.data[oi];
        }
    return dx;
}

Tensor UpsampleNearest2x::forward(const Tensor& x) const {
    Tensor y(x.n, x.c, x.h * 2, x.w * 2);
    for (int s = 0; s < x.n; ++s)
        for (int ci = 0; ci < x.c; ++ci)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx)
                    y.at(s, ci, yy, xx) = x.at(s, ci, yy / 2, xx / 2);
    return y;
}

Tensor UpsampleNearest2x::backward(const Tensor& dy) const {
    Tensor dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int s = 0; s < dy.n; ++s)
        for (int ci = 0; ci < dy.c; ++ci)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx)
                    dx.at(s, ci, yy / 2, xx / 2) += dy.at(s, ci, yy, xx);
    return dx;
}

Linear::Linear(std::string name, int in_features, int out_features, std::mt19937_64& rng)
    : in_f_(in_features), out_f_(out_features) {
    weight.name = name + ".weight";
    weight.value = Tensor(out_features, in_features, 1, 1);
    weight.grad = Tensor(out_features, in_features, 1, 1);
    he_init(weight.value, in_features, 1.f, rng);  // no nonlinearity after the head
    bias.name = name + ".bias";
    bias.value = Tensor(out_features, 1, 1, 1);
    bias.grad = Tensor(out_features, 1, 1, 1);
}

Tensor Linear::forward(const Tensor& x, Cache& cache) const {
    if (x.c != in_f_ || x.h != 1 || x.w != 1)
        throw ShapeMismatchError("Linear: expected [n," + std::to_string(in_f_) + ",1,1], got " +
                                 x.shape_str());
    cache.input = x;
    Tensor y(x.n, out_f_, 1, 1);
    MapConstMat wm(weight.value.data.data(), out_f_, in_f_);
    MapConstMat xm(x.data.data(), x.n, in_f_);
    MapMat ym(y.data.data(), x.n, out_f_);
    ym.noalias() = xm * wm.transpose();
    for (int s = 0; s < x.n; ++s)
        for (int o = 0; o < out_f_; ++o) y.data[static_cast<size_t>(s) * out_f_ + o] += bias.value.data[o];
    return y;
}

Tensor Linear::backward(const Tensor& dy, const Cache& cache) {
    const Tensor& x = cache.input;
    MapConstMat dym(dy.data.data(), dy.n, out_f_);
    MapConstMat xm(x.data.data(), x.n, in_f_);
    MapMat dwm(weight.grad.data.data(), out_f_, in_f_);
    dwm.noalias() += dym.transpose() * xm;
    for (int s = 0; s < dy.n; ++s)
        for (int o = 0; o < out_f_; ++o) bias.grad.data[o] += dy.data[static_cast<size_t>(s) * out_f_ + o];
    Tensor dx(x.n, in_f_, 1, 1);
    MapMat dxm(dx.data.data(), x.n, in_f_);
    MapConstMat wm(weight.value.data.data(), out_f_, in_f_);
    dxm.noalias() = dym * wm;
    return dx;
}

void Linear::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

Tensor GlobalAvgPool::forward(const Tensor& x, Cache& cache) const {
    cache.h = x.h;
    cache.w = x.w;
    Tensor y(x.n, x.c, 1, 1);
    const int hw = x.plane();
    for (int s = 0; s < x.n; ++s)
        for (int ci = 0; ci < x.c; ++ci) {
            const float* xp = x.data.data() + (static_cast<size_t>(s) * x.c + ci) * hw;
            double sum = 0.0;
            for (int i = 0; i < hw; ++i) sum += xp[i];
            y.data[static_cast<size_t>(s) * x.c + ci] = float(sum / hw);
        }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy, const Cache& cache) const {
    Tensor dx(dy.n, dy.c, cache.h, cache.w);
    const int hw = cache.h * cache.w;
    for (int s = 0; s < dy.n; ++s)
        for (int ci = 0; ci < dy.c; ++ci) {
            const float g = dy.data[static_cast<size_t>(s) * dy.c + ci] / float(hw);
            float* dxp = dx.data.data() + (static_cast<size_t>(s) * dy.c + ci) * hw;
            for (int i = 0; i < hw; ++i) dxp[i] = g;
        }
    return dx;
}

ConvBlock::ConvBlock(const std::string& name, int in_c, int out_c, bool residual,
                     float negative_slope, std::mt19937_64& rng)
    : conv1_(name + ".conv1", in_c, out_c, 3, rng, negative_slope),
      conv2_(name + ".conv2", out_c, out_c, 3, rng, negative_slope),
      norm1_(name + ".norm1", out_c),
      norm2_(name + ".norm2", out_c),
      act_(negative_slope),
      residual_(residual),
      projected_shortcut_(residual && in_c != out_c) {
    if (projected_shortcut_)
        shortcut_ = Conv2d(name + ".shortcut", in_c, out_c, 1, rng, negative_slope);
}

Tensor ConvBlock::forward(const Tensor& x, Cache& cache) const {
    Tensor t = act_.forward(norm1_.forward(conv1_.forward(x, cache.c1), cache.n1), cache.a1);
    t = norm2_.forward(conv2_.forward(t, cache.c2), cache.n2);
    if (residual_) {
        cache.shortcut_out = projected_shortcut_ ? shortcut_.forward(x, cache.sc) : x;
        for (size_t i = 0; i < t.size(); ++i) t.data[i] += cache.shortcut_out.data[i];
    }
    return act_.forward(t, cache.a2);
}

Tensor ConvBlock::backward(const Tensor& dy, const Cache& cache) {
    Tensor d = act_.backward(dy, cache.a2);
    Tensor d_short;
    if (residual_) d_short = d;  // addition splits the gradient
    d = norm2_.backward(d, cache.n2);
    d = conv2_.backward(d, cache.c2);
    d = act_.backward(d, cache.a1);
    d = norm1_.backward(d, cache.n1);
    d = conv1_.backward(d, cache.c1);
    if (residual_) {
        if (projected_shortcut_) d_short = shortcut_.backward(d_short, cache.sc);
        for (size_t i = 0; i < d.size(); ++i) d.data[i] += d_short.data[i];
    }
    return d;
}

void ConvBlock::collect_params(std::vector<Param*>& out) {
    conv1_.collect_params(out);
    norm1_.collect_params(out);
    conv2_.collect_params(out);
    norm2_.collect_params(out);
    if (projected_shortcut_) shortcut_.collect_params(out);
}

void concat_channels(const Tensor& a, const Tensor& b, Tensor& out) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw ShapeMismatchError("concat_channels: spatial/batch mismatch");
    out = Tensor(a.n, a.c + b.c, a.h, a.w);
    const size_t pa = static_cast<size_t>(a.c) * a.plane(), pb = static_cast<size_t>(b.c) * b.plane();
    for (int s = 0; s < a.n; ++s) {
        std::copy_n(a.sample_ptr(s), pa, out.sample_ptr(s));
        std::copy_n(b.sample_ptr(s), pb, out.sample_ptr(s) + pa);
    }
}

void split_channels(const Tensor& d, int c_a, Tensor& da, Tensor& db) {
    da = Tensor(d.n, c_a, d.h, d.w);
    db = Tensor(d.n, d.c - c_a, d.h, d.w);
    const size_t pa = static_cast<size_t>(c_a) * d.plane(), pb = static_cast<size_t>(d.c - c_a) * d.plane();
    for (int s = 0; s < d.n; ++s) {
        std::copy_n(d.sample_ptr(s), pa, da.sample_ptr(s));
        std::copy_n(d.sample_ptr(s) + pa, pb, db.sample_ptr(s));
    }
}

}  // namespace polycl
