#pragma once

#include <cstdint>
#include <vector>

#include "polycl/common.hpp"

namespace polycl {

// Dense row-major 2D float image.
struct Image2D {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image2D() = default;
    Image2D(int h, int w, float fill = 0.f)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    size_t size() const { return data.size(); }
    bool same_shape(const Image2D& o) const { return height == o.height && width == o.width; }
};

// Binary mask, values restricted to {0,1}.
struct Mask2D {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    Mask2D() = default;
    Mask2D(int h, int w, uint8_t fill = 0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    uint8_t& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    uint8_t at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
    size_t size() const { return data.size(); }
    bool same_shape(const Mask2D& o) const { return height == o.height && width == o.width; }

    size_t foreground_count() const;
    bool empty_mask() const { return foreground_count() == 0; }
};

Image2D resize_bilinear(const Image2D& img, int out_h, int out_w);
Mask2D resize_nearest(const Mask2D& mask, int out_h, int out_w);

// Morphology with a Euclidean disk structuring element of the given radius.
Mask2D dilate(const Mask2D& mask, int radius);
Mask2D erode(const Mask2D& mask, int radius);

// 8-connected component labelling. Returns label image (0 = background,
// components numbered from 1) and the number of components found.
std::pair<std::vector<int>, int> connected_components(const Mask2D& mask);

inline void check_binary(const Mask2D& m, const char* who) {
    for (uint8_t v : m.data)
        if (v > 1) throw InvalidArgumentError(std::string(who) + ": mask is not binary");
}

}  // namespace polycl
