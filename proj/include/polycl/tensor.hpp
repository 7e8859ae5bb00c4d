#pragma once

#include <string>
#include <vector>

#include "polycl/image.hpp"

namespace polycl {

// Dense NCHW float tensor.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, float fill = 0.f)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    size_t size() const { return data.size(); }
    int plane() const { return h * w; }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const;

    float& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    float at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    float* sample_ptr(int in) { return data.data() + static_cast<size_t>(in) * c * h * w; }
    const float* sample_ptr(int in) const {
        return data.data() + static_cast<size_t>(in) * c * h * w;
    }

    void zero_() { std::fill(data.begin(), data.end(), 0.f); }
    bool all_finite() const;

    static Tensor from_image(const Image2D& img);
    Image2D to_image(int in = 0, int ic = 0) const;
};

}  // namespace polycl
