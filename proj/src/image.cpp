#include "polycl/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polycl {

size_t Mask2D::foreground_count() const {
    return static_cast<size_t>(std::count(data.begin(), data.end(), uint8_t(1)));
}

Image2D resize_bilinear(const Image2D& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw InvalidArgumentError("resize_bilinear: non-positive target size");
    Image2D out(out_h, out_w);
    if (img.height == out_h && img.width == out_w) {
        out.data = img.data;
        return out;
    }
    // Pixel-center alignment; degenerate axes collapse to the single sample.
    const float sy = out_h > 1 ? float(img.height - 1) / float(out_h - 1) : 0.f;
    const float sx = out_w > 1 ? float(img.width - 1) / float(out_w - 1) : 0.f;
    for (int r = 0; r < out_h; ++r) {
        const float fy = r * sy;
        const int y0 = std::min(int(fy), img.height - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const float wy = fy - y0;
        for (int c = 0; c < out_w; ++c) {
            const float fx = c * sx;
            const int x0 = std::min(int(fx), img.width - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const float wx = fx - x0;
            const float top = img.at(y0, x0) * (1.f - wx) + img.at(y0, x1) * wx;
            const float bot = img.at(y1, x0) * (1.f - wx) + img.at(y1, x1) * wx;
            out.at(r, c) = top * (1.f - wy) + bot * wy;
        }
    }
    return out;
}

Mask2D resize_nearest(const Mask2D& mask, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw InvalidArgumentError("resize_nearest: non-positive target size");
    Mask2D out(out_h, out_w);
    if (mask.height == out_h && mask.width == out_w) {
        out.data = mask.data;
        return out;
    }
    const float sy = out_h > 1 ? float(mask.height - 1) / float(out_h - 1) : 0.f;
    const float sx = out_w > 1 ? float(mask.width - 1) / float(out_w - 1) : 0.f;
    for (int r = 0; r < out_h; ++r) {
        const int y = std::min(int(std::lround(r * sy)), mask.height - 1);
        for (int c = 0; c < out_w; ++c) {
            const int x = std::min(int(std::lround(c * sx)), mask.width - 1);
            out.at(r, c) = mask.at(y, x);
        }
    }
    return out;
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> off;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dy * dy + dx * dx <= radius * radius) off.emplace_back(dy, dx);
    return off;
}

}  // namespace

Mask2D dilate(const Mask2D& mask, int radius) {
    if (radius <= 0) return mask;
    const auto off = disk_offsets(radius);
    Mask2D out(mask.height, mask.width);
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c) {
            if (!mask.at(r, c)) continue;
            for (auto [dy, dx] : off) {
                const int y = r + dy, x = c + dx;
                if (y >= 0 && y < mask.height && x >= 0 && x < mask.width) out.at(y, x) = 1;
            }
        }
    return out;
}

Mask2D erode(const Mask2D& mask, int radius) {
    if (radius <= 0) return mask;
    const auto off = disk_offsets(radius);
    Mask2D out(mask.height, mask.width);
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c) {
            if (!mask.at(r, c)) continue;
            bool keep = true;
            for (auto [dy, dx] : off) {
                const int y = r + dy, x = c + dx;
                if (y < 0 || y >= mask.height || x < 0 || x >= mask.width || !mask.at(y, x)) {
                    keep = false;
                    break;
                }
            }
            out.at(r, c) = keep ? 1 : 0;
        }
    return out;
}

std::pair<std::vector<int>, int> connected_components(const Mask2D& mask) {
    const int h = mask.height, w = mask.width;
    std::vector<int> labels(static_cast<size_t>(h) * w, 0);
    int next = 0;
    std::vector<int> stack;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int idx = r * w + c;
            if (!mask.data[idx] || labels[idx]) continue;
            ++next;
            labels[idx] = next;
            stack.push_back(idx);
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cy = cur / w, cx = cur % w;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dy && !dx) continue;
                        const int y = cy + dy, x = cx + dx;
                        if (y < 0 || y >= h || x < 0 || x >= w) continue;
                        const int nidx = y * w + x;
                        if (mask.data[nidx] && !labels[nidx]) {
                            labels[nidx] = next;
                            stack.push_back(nidx);
                        }
                    }
            }
        }
    return {std::move(labels), next};
}

}  // namespace polycl
