#include "polycl/pretrain.hpp"

#include <algorithm>
#include <filesystem>

#include "polycl/losses.hpp"
#include "polycl/optim.hpp"

namespace polycl {

void PretrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("pretrain: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("pretrain: batch_size must be >= 1");
    if (lr <= 0.f) throw ConfigError("pretrain: lr must be positive");
    if (resolved_tau() <= 0.0) throw ConfigError("pretrain: tau must be positive");
    if (restart_period < 1) throw ConfigError("pretrain: restart_period must be >= 1");
}

namespace {

std::vector<double> to_double_vec(const Tensor& z) {
    return std::vector<double>(z.data.begin(), z.data.end());
}

Tensor to_grad_tensor(const std::vector<double>& g, double scale) {
    Tensor t(1, static_cast<int>(g.size()), 1, 1);
    for (size_t i = 0; i < g.size(); ++i) t.data[i] = static_cast<float>(g[i] * scale);
    return t;
}

}  // namespace

std::vector<double> embed(const ContrastiveModel& model, const Image2D& pixels) {
    ContrastiveModel::Cache cache;
    return to_double_vec(model.forward(Tensor::from_image(pixels), cache));
}

PretrainResult run_pretraining(const PretrainConfig& cfg, const DatasetIndex& index,
                               const ModelConfig& model_cfg, uint64_t config_hash,
                               const std::string& checkpoint_dir) {
    cfg.validate();

    // Anchors: strategy-eligible slices, restricted to the training split
    // when one is assigned.
    std::vector<size_t> anchors;
    for (size_t i = 0; i < index.size(); ++i) {
        const Split s = index.split_of(i);
        if (s != Split::Train && s != Split::Unassigned) continue;
        if (anchor_eligible(cfg.strategy, index, i)) anchors.push_back(i);
    }
    if (anchors.empty())
        throw SamplingError("pretrain: no anchor is eligible for strategy " +
                            to_string(cfg.strategy) + " on this index");

    PretrainResult res;
    res.model = ContrastiveModel(model_cfg, cfg.seed);
    Adam adam(res.model.params());
    const CosineWarmRestarts sched{cfg.lr, cfg.restart_period, 0.f};
    const double tau = cfg.resolved_tau();

    RunLogger logger(cfg.metrics_path);
    std::unique_ptr<TripletTrace> trace;
    if (!cfg.trace_path.empty()) trace = std::make_unique<TripletTrace>(cfg.trace_path);

    std::optional<std::string> best_path;
    if (!checkpoint_dir.empty()) {
        std::filesystem::create_directories(checkpoint_dir);
        best_path = checkpoint_dir + "/pretrain_best.ckpt";
    }

    ContrastiveModel::Cache cache_a, cache_p, cache_n;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const float lr = sched.lr_at_epoch(epoch);
        std::mt19937_64 rng = make_rng(cfg.seed, 0xEF0C + static_cast<uint64_t>(epoch));
        std::shuffle(anchors.begin(), anchors.end(), rng);

        double epoch_loss = 0.0;
        size_t done = 0;
        while (done < anchors.size()) {
            const size_t take = std::min<size_t>(cfg.batch_size, anchors.size() - done);
            adam.zero_grad();
            const double scale = 1.0 / double(take);
            for (size_t b = 0; b < take; ++b) {
                const size_t anchor = anchors[done + b];
                const Triplet t = sample_triplet(cfg.strategy, index, anchor, rng);
                if (t.fallback_used) ++res.fallback_count;
                if (trace) trace->append(epoch, index, t);

                const Tensor za = res.model.forward(
                    Tensor::from_image(index.record(t.anchor).pixels), cache_a);
                const Tensor zp = res.model.forward(
                    Tensor::from_image(index.record(t.positive).pixels), cache_p);
                const Tensor zn = res.model.forward(
                    Tensor::from_image(index.record(t.negative).pixels), cache_n);

                ContrastiveGrads grads;
                const double loss = contrastive_loss(to_double_vec(za), to_double_vec(zp),
                                                     to_double_vec(zn), tau, &grads);
                epoch_loss += loss;

                res.model.backward(to_grad_tensor(grads.anchor, scale), cache_a);
                res.model.backward(to_grad_tensor(grads.positive, scale), cache_p);
                res.model.backward(to_grad_tensor(grads.negative, scale), cache_n);
            }
            adam.step(lr);
            done += take;
        }

        const double mean_loss = epoch_loss / double(anchors.size());
        if (!std::isfinite(mean_loss)) throw Error("pretrain: non-finite epoch loss");
        logger.append({epoch, mean_loss, lr, 0.0, std::nullopt});

        if (res.best_epoch < 0 || mean_loss < res.best_loss) {
            res.best_loss = mean_loss;
            res.best_epoch = epoch;
            if (best_path)
                save_checkpoint(*best_path, "pretrained", model_cfg, config_hash,
                                res.model.params());
        }
        res.final_loss = mean_loss;
    }

    res.log = logger.records();
    if (!checkpoint_dir.empty()) {
        res.final_checkpoint = checkpoint_dir + "/pretrain_final.ckpt";
        save_checkpoint(res.final_checkpoint, "pretrained", model_cfg, config_hash,
                        res.model.params());
        res.best_checkpoint = *best_path;
    }
    return res;
}

}  // namespace polycl
