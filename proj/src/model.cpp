#include "polycl/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "polycl/common.hpp"

namespace polycl {

using nlohmann::json;

void EncoderConfig::validate() const {
    if (in_channels != 1) throw ConfigError("EncoderConfig: in_channels must be 1");
    if (stage_widths.empty()) throw ConfigError("EncoderConfig: stage_widths empty");
    for (int w : stage_widths)
        if (w < 1) throw ConfigError("EncoderConfig: stage width < 1");
    if (backbone != "unet" && backbone != "resunet")
        throw ConfigError("EncoderConfig: unknown backbone '" + backbone + "'");
    if (norm != "instance") throw ConfigError("EncoderConfig: only instance norm is supported");
    if (negative_slope < 0.f) throw ConfigError("EncoderConfig: negative_slope < 0");
}

void check_input_divisibility(const Tensor& x, int downsamples) {
    const int step = 1 << downsamples;
    if (x.h % step || x.w % step)
        throw ShapeMismatchError("input spatial size " + x.shape_str() + " not divisible by 2^" +
                                 std::to_string(downsamples));
}

Encoder::Encoder(const EncoderConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    const bool residual = cfg.backbone == "resunet";
    int in_c = cfg.in_channels;
    for (size_t i = 0; i < cfg.stage_widths.size(); ++i) {
        stages_.emplace_back("enc.stage" + std::to_string(i), in_c, cfg.stage_widths[i], residual,
                             cfg.negative_slope, rng);
        in_c = cfg.stage_widths[i];
    }
    bottleneck_ = ConvBlock("enc.bottleneck", in_c, 2 * in_c, residual, cfg.negative_slope, rng);
}

Encoder::Output Encoder::forward(const Tensor& x, Cache& cache) const {
    check_input_divisibility(x, cfg_.downsamples());
    cache.stage.resize(stages_.size());
    cache.pool.resize(stages_.size());
    Output out;
    Tensor cur = x;
    for (size_t i = 0; i < stages_.size(); ++i) {
        cur = stages_[i].forward(cur, cache.stage[i]);
        out.skips.push_back(cur);
        cur = pool_.forward(cur, cache.pool[i]);
    }
    out.bottleneck = bottleneck_.forward(cur, cache.bottleneck);
    return out;
}

Tensor Encoder::backward(const std::vector<Tensor>& dskips, const Tensor& dbottleneck,
                         const Cache& cache) {
    Tensor d = bottleneck_.backward(dbottleneck, cache.bottleneck);
    for (size_t i = stages_.size(); i-- > 0;) {
        d = pool_.backward(d, cache.pool[i]);
        if (!dskips.empty()) {
            const Tensor& ds = dskips[i];
            for (size_t j = 0; j < d.size(); ++j) d.data[j] += ds.data[j];
        }
        d = stages_[i].backward(d, cache.stage[i]);
    }
    return d;
}

void Encoder::collect_params(std::vector<Param*>& out) {
    for (auto& s : stages_) s.collect_params(out);
    bottleneck_.collect_params(out);
}

ProjectionHead::ProjectionHead(int in_channels, int proj_dim, std::mt19937_64& rng)
    : fc_("head.fc", in_channels, proj_dim, rng) {}

Tensor ProjectionHead::forward(const Tensor& bottleneck, Cache& cache) const {
    return fc_.forward(gap_.forward(bottleneck, cache.gap), cache.fc);
}

Tensor ProjectionHead::backward(const Tensor& dz, const Cache& cache) {
    return gap_.backward(fc_.backward(dz, cache.fc), cache.gap);
}

void ProjectionHead::collect_params(std::vector<Param*>& out) {
    fc_.collect_params(out);
}

Decoder::Decoder(const EncoderConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg), act_(cfg.negative_slope) {
    const bool residual = cfg.backbone == "resunet";
    int cur_c = 2 * cfg.stage_widths.back();
    for (size_t i = cfg.stage_widths.size(); i-- > 0;) {
        const int skip_c = cfg.stage_widths[i];
        UpStage st{
            Conv2d("dec.up" + std::to_string(i), cur_c, skip_c, 3, rng, cfg.negative_slope),
            InstanceNorm2d("dec.up" + std::to_string(i) + ".norm", skip_c),
            ConvBlock("dec.merge" + std::to_string(i), 2 * skip_c, skip_c, residual,
                      cfg.negative_slope, rng)};
        stages_.push_back(std::move(st));
        cur_c = skip_c;
    }
    out_conv_ = Conv2d("dec.out", cfg.stage_widths.front(), 1, 1, rng, cfg.negative_slope);
}

Tensor Decoder::forward(const std::vector<Tensor>& skips, const Tensor& bottleneck,
                        Cache& cache) const {
    if (skips.size() != stages_.size())
        throw ShapeMismatchError("Decoder: expected " + std::to_string(stages_.size()) +
                                 " skip tensors, got " + std::to_string(skips.size()));
    cache.stage.resize(stages_.size());
    Tensor cur = bottleneck;
    for (size_t s = 0; s < stages_.size(); ++s) {
        auto& sc = cache.stage[s];
        const Tensor& skip = skips[skips.size() - 1 - s];
        cur = upsample_.forward(cur);
        cur = act_.forward(stages_[s].up_norm.forward(stages_[s].up.forward(cur, sc.up), sc.up_n),
                           sc.up_a);
        if (cur.h != skip.h || cur.w != skip.w || cur.c != skip.c)
            throw ShapeMismatchError("Decoder: skip tensor mismatch at stage " + std::to_string(s));
        Tensor merged;
        concat_channels(skip, cur, merged);
        sc.skip_channels = skip.c;
        cur = stages_[s].merge.forward(merged, sc.merge);
    }
    return out_conv_.forward(cur, cache.out);
}

std::pair<std::vector<Tensor>, Tensor> Decoder::backward(const Tensor& dlogits,
                                                         const Cache& cache) {
    std::vector<Tensor> dskips(stages_.size());
    Tensor d = out_conv_.backward(dlogits, cache.out);
    for (size_t s = stages_.size(); s-- > 0;) {
        const auto& sc = cache.stage[s];
        d = stages_[s].merge.backward(d, sc.merge);
        Tensor dskip, dcur;
        split_channels(d, sc.skip_channels, dskip, dcur);
        dskips[stages_.size() - 1 - s] = std::move(dskip);
        dcur = act_.backward(dcur, sc.up_a);
        dcur = stages_[s].up_norm.backward(dcur, sc.up_n);
        dcur = stages_[s].up.backward(dcur, sc.up);
        d = upsample_.backward(dcur);
    }
    return {std::move(dskips), std::move(d)};
}

void Decoder::collect_params(std::vector<Param*>& out) {
    for (auto& s : stages_) {
        s.up.collect_params(out);
        s.up_norm.collect_params(out);
        s.merge.collect_params(out);
    }
    out_conv_.collect_params(out);
}

size_t Decoder::parameter_count() const {
    std::vector<Param*> ps;
    const_cast<Decoder*>(this)->collect_params(ps);
    size_t n = 0;
    for (const Param* p : ps) n += p->value.size();
    return n;
}

ContrastiveModel::ContrastiveModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    std::mt19937_64 rng = make_rng(seed, /*stream=*/0xE0C);
    encoder_ = Encoder(cfg.encoder, rng);
    head_ = ProjectionHead(encoder_.bottleneck_channels(), cfg.proj_dim, rng);
}

Tensor ContrastiveModel::forward(const Tensor& x, Cache& cache) const {
    const auto out = encoder_.forward(x, cache.enc);
    return head_.forward(out.bottleneck, cache.head);
}

void ContrastiveModel::backward(const Tensor& dz, const Cache& cache) {
    const Tensor dbottleneck = head_.backward(dz, cache.head);
    encoder_.backward({}, dbottleneck, cache.enc);
}

std::vector<Param*> ContrastiveModel::params() {
    std::vector<Param*> out;
    encoder_.collect_params(out);
    head_.collect_params(out);
    return out;
}

SegmentationModel::SegmentationModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    // The encoder draws the same init stream as in ContrastiveModel so that
    // matching seeds produce matching encoders; the decoder uses its own.
    std::mt19937_64 enc_rng = make_rng(seed, /*stream=*/0xE0C);
    encoder_ = Encoder(cfg.encoder, enc_rng);
    std::mt19937_64 dec_rng = make_rng(seed, /*stream=*/0xDEC);
    decoder_ = Decoder(cfg.encoder, dec_rng);
}

Tensor SegmentationModel::forward(const Tensor& x, Cache& cache) const {
    const auto out = encoder_.forward(x, cache.enc);
    return decoder_.forward(out.skips, out.bottleneck, cache.dec);
}

void SegmentationModel::backward(const Tensor& dlogits, const Cache& cache) {
    auto [dskips, dbottleneck] = decoder_.backward(dlogits, cache.dec);
    encoder_.backward(dskips, dbottleneck, cache.enc);
}

std::vector<Param*> SegmentationModel::params() {
    std::vector<Param*> out;
    encoder_.collect_params(out);
    decoder_.collect_params(out);
    return out;
}

Mask2D SegmentationModel::predict_mask(const Image2D& slice, float threshold) const {
    Cache cache;
    const Tensor logits = forward(Tensor::from_image(slice), cache);
    Mask2D m(logits.h, logits.w);
    for (size_t i = 0; i < logits.size(); ++i) {
        const float p = 1.f / (1.f + std::exp(-logits.data[i]));
        m.data[i] = p > threshold ? 1 : 0;
    }
    return m;
}

namespace {

json model_config_to_json(const ModelConfig& cfg) {
    return json{{"in_channels", cfg.encoder.in_channels},
                {"stage_widths", cfg.encoder.stage_widths},
                {"backbone", cfg.encoder.backbone},
                {"negative_slope", cfg.encoder.negative_slope},
                {"norm", cfg.encoder.norm},
                {"proj_dim", cfg.proj_dim}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.encoder.in_channels = j.at("in_channels").get<int>();
    cfg.encoder.stage_widths = j.at("stage_widths").get<std::vector<int>>();
    cfg.encoder.backbone = j.at("backbone").get<std::string>();
    cfg.encoder.negative_slope = j.at("negative_slope").get<float>();
    cfg.encoder.norm = j.at("norm").get<std::string>();
    cfg.proj_dim = j.at("proj_dim").get<int>();
    return cfg;
}

constexpr char kMagic[8] = {'P', 'L', 'C', 'K', 'P', 'T', '1', '\n'};

}  // namespace

void save_checkpoint(const std::string& path, const std::string& stage, const ModelConfig& cfg,
                     uint64_t config_hash, const std::vector<Param*>& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("save_checkpoint: cannot open " + path);

    json meta;
    meta["stage"] = stage;
    meta["model"] = model_config_to_json(cfg);
    meta["config_hash"] = config_hash;
    meta["optimizer"] = "adam";
    const std::string meta_str = meta.dump();

    f.write(kMagic, sizeof(kMagic));
    const uint64_t meta_len = meta_str.size();
    f.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    f.write(meta_str.data(), std::streamsize(meta_str.size()));

    const uint64_t count = params.size();
    f.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const Param* p : params) {
        const uint64_t name_len = p->name.size();
        f.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
        f.write(p->name.data(), std::streamsize(name_len));
        const uint64_t n = p->value.size();
        f.write(reinterpret_cast<const char*>(&n), sizeof(n));
        f.write(reinterpret_cast<const char*>(p->value.data.data()), std::streamsize(n * 4));
    }
    if (!f) throw Error("save_checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingFileError("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("load_checkpoint: bad magic in " + path);

    uint64_t meta_len = 0;
    f.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
    std::string meta_str(meta_len, '\0');
    f.read(meta_str.data(), std::streamsize(meta_len));
    const json meta = json::parse(meta_str);

    Checkpoint ckpt;
    ckpt.stage = meta.at("stage").get<std::string>();
    ckpt.config = model_config_from_json(meta.at("model"));
    ckpt.config_hash = meta.at("config_hash").get<uint64_t>();
    ckpt.optimizer = meta.value("optimizer", "adam");

    uint64_t count = 0;
    f.read(reinterpret_cast<char*>(&count), sizeof(count));
    for (uint64_t i = 0; i < count; ++i) {
        uint64_t name_len = 0;
        f.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        std::string name(name_len, '\0');
        f.read(name.data(), std::streamsize(name_len));
        uint64_t n = 0;
        f.read(reinterpret_cast<char*>(&n), sizeof(n));
        std::vector<float> vals(n);
        f.read(reinterpret_cast<char*>(vals.data()), std::streamsize(n * 4));
        if (!f) throw FormatError("load_checkpoint: truncated tensor data in " + path);
        ckpt.tensors.emplace(std::move(name), std::move(vals));
    }
    return ckpt;
}

void restore_params(const Checkpoint& ckpt, const std::vector<Param*>& params,
                    const std::string& name_prefix_filter) {
    for (Param* p : params) {
        if (!name_prefix_filter.empty() &&
            p->name.compare(0, name_prefix_filter.size(), name_prefix_filter) != 0)
            continue;
        const auto it = ckpt.tensors.find(p->name);
        if (it == ckpt.tensors.end())
            throw FormatError("restore_params: checkpoint is missing tensor '" + p->name + "'");
        if (it->second.size() != p->value.size())
            throw ShapeMismatchError("restore_params: size mismatch for '" + p->name + "'");
        p->value.data = it->second;
    }
}

}  // namespace polycl
