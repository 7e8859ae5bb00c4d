#include "polycl/tensor.hpp"

#include <cmath>

namespace polycl {

std::string Tensor::shape_str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::from_image(const Image2D& img) {
    Tensor t(1, 1, img.height, img.width);
    t.data = img.data;
    return t;
}

Image2D Tensor::to_image(int in, int ic) const {
    Image2D img(h, w);
    const size_t base = (static_cast<size_t>(in) * c + ic) * plane();
    std::copy_n(data.begin() + base, img.size(), img.data.begin());
    return img;
}

}  // namespace polycl
