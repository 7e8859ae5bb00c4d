#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polycl/layers.hpp"

namespace polycl {

struct EncoderConfig {
    int in_channels = 1;
    std::vector<int> stage_widths = {16, 32, 64, 128};
    std::string backbone = "unet";  // unet | resunet
    float negative_slope = 0.2f;
    std::string norm = "instance";

    int downsamples() const { return static_cast<int>(stage_widths.size()); }
    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

struct ModelConfig {
    EncoderConfig encoder;
    int proj_dim = 256;

    bool operator==(const ModelConfig&) const = default;
};

// Per-stage down path: ConvBlock then 2x max-pool, with one ConvBlock as the
// bottleneck at the deepest resolution (channels doubled).
class Encoder {
  public:
    Encoder() = default;
    Encoder(const EncoderConfig& cfg, std::mt19937_64& rng);

    struct Cache {
        std::vector<ConvBlock::Cache> stage;
        std::vector<MaxPool2x2::Cache> pool;
        ConvBlock::Cache bottleneck;
    };
    struct Output {
        std::vector<Tensor> skips;  // pre-pool activation per stage
        Tensor bottleneck;
    };

    Output forward(const Tensor& x, Cache& cache) const;
    // dskips may be empty (no decoder attached); returns dx.
    Tensor backward(const std::vector<Tensor>& dskips, const Tensor& dbottleneck, const Cache& cache);
    void collect_params(std::vector<Param*>& out);

    const EncoderConfig& config() const { return cfg_; }
    int bottleneck_channels() const { return 2 * cfg_.stage_widths.back(); }

  private:
    EncoderConfig cfg_;
    std::vector<ConvBlock> stages_;
    ConvBlock bottleneck_;
    MaxPool2x2 pool_;
};

// GAP then one fully-connected layer; no nonlinearity after the head.
class ProjectionHead {
  public:
    ProjectionHead() = default;
    ProjectionHead(int in_channels, int proj_dim, std::mt19937_64& rng);

    struct Cache {
        GlobalAvgPool::Cache gap;
        Linear::Cache fc;
    };

    Tensor forward(const Tensor& bottleneck, Cache& cache) const;
    Tensor backward(const Tensor& dz, const Cache& cache);
    void collect_params(std::vector<Param*>& out);

  private:
    GlobalAvgPool gap_;
    Linear fc_;
};

// Mirrors the encoder with skip connections; emits per-pixel logits.
class Decoder {
  public:
    Decoder() = default;
    Decoder(const EncoderConfig& cfg, std::mt19937_64& rng);

    struct Cache {
        struct Stage {
            Conv2d::Cache up;
            InstanceNorm2d::Cache up_n;
            LeakyReLU::Cache up_a;
            ConvBlock::Cache merge;
            int skip_channels = 0;
        };
        std::vector<Stage> stage;
        Conv2d::Cache out;
    };

    Tensor forward(const std::vector<Tensor>& skips, const Tensor& bottleneck, Cache& cache) const;
    // Returns {dskips, dbottleneck}.
    std::pair<std::vector<Tensor>, Tensor> backward(const Tensor& dlogits, const Cache& cache);
    void collect_params(std::vector<Param*>& out);
    size_t parameter_count() const;

  private:
    struct UpStage {
        Conv2d up;
        InstanceNorm2d up_norm;
        ConvBlock merge;
    };
    EncoderConfig cfg_;
    std::vector<UpStage> stages_;  // deepest first
    Conv2d out_conv_;
    UpsampleNearest2x upsample_;
    LeakyReLU act_;
};

// Encoder + projection head (pre-training configuration).
class ContrastiveModel {
  public:
    ContrastiveModel() = default;
    ContrastiveModel(const ModelConfig& cfg, uint64_t seed);

    struct Cache {
        Encoder::Cache enc;
        ProjectionHead::Cache head;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;  // [n, proj_dim, 1, 1]
    void backward(const Tensor& dz, const Cache& cache);
    std::vector<Param*> params();

    Encoder& encoder() { return encoder_; }
    const ModelConfig& config() const { return cfg_; }

  private:
    ModelConfig cfg_;
    Encoder encoder_;
    ProjectionHead head_;
};

// Encoder + decoder (fine-tuning / inference configuration).
class SegmentationModel {
  public:
    SegmentationModel() = default;
    SegmentationModel(const ModelConfig& cfg, uint64_t seed);

    struct Cache {
        Encoder::Cache enc;
        Decoder::Cache dec;
    };

    Tensor forward(const Tensor& x, Cache& cache) const;  // logits [n,1,H,W]
    void backward(const Tensor& dlogits, const Cache& cache);
    std::vector<Param*> params();

    Encoder& encoder() { return encoder_; }
    Decoder& decoder() { return decoder_; }
    const ModelConfig& config() const { return cfg_; }

    Mask2D predict_mask(const Image2D& slice, float threshold = 0.5f) const;

  private:
    ModelConfig cfg_;
    Encoder encoder_;
    Decoder decoder_;
};

void check_input_divisibility(const Tensor& x, int downsamples);

// Checkpoint: single binary archive with a JSON header (stage tag, model
// config, config hash) followed by named float blobs.
struct Checkpoint {
    std::string stage;  // "pretrained" | "finetuned"
    ModelConfig config;
    uint64_t config_hash = 0;
    std::string optimizer = "adam";
    std::map<std::string, std::vector<float>> tensors;
};

void save_checkpoint(const std::string& path, const std::string& stage, const ModelConfig& cfg,
                     uint64_t config_hash, const std::vector<Param*>& params);
Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint tensors into matching params; every param must be
// present with identical element counts. Params absent from the checkpoint
// (e.g. a fresh decoder) are left untouched when allow_missing names them.
void restore_params(const Checkpoint& ckpt, const std::vector<Param*>& params,
                    const std::string& name_prefix_filter = "");

}  // namespace polycl
