#pragma once

#include <random>
#include <string>
#include <vector>

#include "polycl/tensor.hpp"

namespace polycl {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    void zero_grad() { grad.zero_(); }
};

// 2D convolution, stride 1, square kernel, zero padding chosen to preserve
// the spatial size (k=3/pad=1 or k=1/pad=0). Forward caches its input; the
// im2col buffer is rebuilt in backward to keep cache memory at one
// activation per layer.
class Conv2d {
  public:
    Conv2d() = default;
    Conv2d(std::string name, int in_c, int out_c, int k, std::mt19937_64& rng,
           float negative_slope);

    struct Cache {
        Tensor input;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& dy, const Cache& cache);
    void collect_params(std::vector<Param*>& out);

    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }

    Param weight;  // [out_c, in_c*k*k] flattened into Tensor(out_c, in_c, k, k)
    Param bias;    // [out_c]

  private:
    int in_c_ = 0, out_c_ = 0, k_ = 0, pad_ = 0;
};

// Per-sample, per-channel normalization with learned affine.
class InstanceNorm2d {
  public:
    InstanceNorm2d() = default;
    InstanceNorm2d(std::string name, int channels);

    struct Cache {
        Tensor xhat;
        std::vector<float> inv_std;  // per (n,c)
    };

    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& dy, const Cache& cache);
    void collect_params(std::vector<Param*>& out);

    Param gamma, beta;

  private:
    int channels_ = 0;
    static constexpr float kEps = 1e-5f;
};

class LeakyReLU {
  public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}

    struct Cache {
        std::vector<uint8_t> positive;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& dy, const Cache& cache) const;

  private:
    float slope_ = 0.2f;
};

class MaxPool2x2 {
  public:
    struct Cache {
        std::vector<int> argmax;  // flat input offsets, one per output element
        int in_h = 0, in_w = 0;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& dy, const Cache& cache) const;
};

class UpsampleNearest2x {
  public:
    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& dy) const;
};

class Linear {
  public:
    Linear() = default;
    Linear(std::string name, int in_features, int out_features, std::mt19937_64& rng);

    struct Cache {
        Tensor input;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;  // x: [n, in, 1, 1]
    Tensor backward(const Tensor& dy, const Cache& cache);
    void collect_params(std::vector<Param*>& out);

    Param weight;  // Tensor(out, in, 1, 1)
    Param bias;    // Tensor(out, 1, 1, 1)

  private:
    int in_f_ = 0, out_f_ = 0;
};

// Global average pool over the spatial dims.
class GlobalAvgPool {
  public:
    struct Cache {
        int h = 0, w = 0;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& dy, const Cache& cache) const;
};

// conv-IN-act, conv-IN-act; the residual variant adds a (projected) skip
// before the second activation.
class ConvBlock {
  public:
    ConvBlock() = default;
    ConvBlock(const std::string& name, int in_c, int out_c, bool residual,
              float negative_slope, std::mt19937_64& rng);

    struct Cache {
        Conv2d::Cache c1, c2, sc;
        InstanceNorm2d::Cache n1, n2;
        LeakyReLU::Cache a1, a2;
        Tensor shortcut_out;  // saved when residual
    };

    Tensor forward(const Tensor& x, Cache& cache) const;
    Tensor backward(const Tensor& dy, const Cache& cache);
    void collect_params(std::vector<Param*>& out);

    int out_channels() const { return conv2_.out_channels(); }

  private:
    Conv2d conv1_, conv2_, shortcut_;
    InstanceNorm2d norm1_, norm2_;
    LeakyReLU act_;
    bool residual_ = false;
    bool projected_shortcut_ = false;
};

void concat_channels(const Tensor& a, const Tensor& b, Tensor& out);
void split_channels(const Tensor& d, int c_a, Tensor& da, Tensor& db);

}  // namespace polycl
