#include "polycl/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "polycl/losses.hpp"
#include "polycl/optim.hpp"

namespace polycl {

void FinetuneConfig::validate() const {
    if (epochs < 1) throw ConfigError("finetune: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("finetune: batch_size must be >= 1");
    if (lr <= 0.f) throw ConfigError("finetune: lr must be positive");
    if (restart_period < 1) throw ConfigError("finetune: restart_period must be >= 1");
    if (init != "random" && init != "from_checkpoint")
        throw ConfigError("finetune: init must be random or from_checkpoint");
    if (dice_eps < 0.0) throw ConfigError("finetune: dice_eps must be nonnegative");
}

namespace {

void sigmoid_inplace(Tensor& t) {
    for (float& v : t.data) v = 1.f / (1.f + std::exp(-v));
}

}  // namespace

FinetuneResult run_finetuning(const FinetuneConfig& cfg,
                              const std::optional<Checkpoint>& checkpoint,
                              const DatasetIndex& index, const ModelConfig& model_cfg,
                              uint64_t config_hash, const std::string& checkpoint_dir) {
    cfg.validate();

    FinetuneResult res;
    res.model = SegmentationModel(model_cfg, cfg.seed);
    if (cfg.init == "from_checkpoint") {
        if (!checkpoint) throw ConfigError("finetune: init=from_checkpoint but none supplied");
        if (checkpoint->stage != "pretrained")
            throw ConfigError("finetune: checkpoint stage is '" + checkpoint->stage +
                              "', expected 'pretrained'");
        if (!(checkpoint->config.encoder == model_cfg.encoder))
            throw ConfigError("finetune: checkpoint encoder config does not match model config");
        // Encoder weights only; the projection head is discarded and the
        // decoder starts fresh.
        std::vector<Param*> enc_params;
        res.model.encoder().collect_params(enc_params);
        restore_params(*checkpoint, enc_params);
    }

    std::vector<size_t> train = index.labeled_train_slices();
    if (train.empty()) throw SamplingError("finetune: empty labeled training subset");
    const std::vector<size_t> val = index.split_slices(Split::Val);

    Adam adam(res.model.params());
    const CosineWarmRestarts sched{cfg.lr, cfg.restart_period, 0.f};
    RunLogger logger(cfg.metrics_path);

    std::optional<std::string> best_path;
    if (!checkpoint_dir.empty()) {
        std::filesystem::create_directories(checkpoint_dir);
        best_path = checkpoint_dir + "/finetune_best.ckpt";
    }

    // Kept across epochs so the best-val weights can be restored at the end
    // without a filesystem round trip.
    std::map<std::string, std::vector<float>> best_weights;

    SegmentationModel::Cache cache;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const float lr = sched.lr_at_epoch(epoch);
        std::mt19937_64 rng = make_rng(cfg.seed, 0xF17E + static_cast<uint64_t>(epoch));
        std::shuffle(train.begin(), train.end(), rng);

        double epoch_loss = 0.0;
        size_t done = 0;
        while (done < train.size()) {
            const size_t take = std::min<size_t>(cfg.batch_size, train.size() - done);
            adam.zero_grad();
            const double scale = 1.0 / double(take);
            for (size_t b = 0; b < take; ++b) {
                const SliceRecord& rec = index.record(train[done + b]);
                Tensor logits = res.model.forward(Tensor::from_image(rec.pixels), cache);
                Tensor probs = logits;
                sigmoid_inplace(probs);

                std::vector<double> p(probs.data.begin(), probs.data.end());
                std::vector<double> t(rec.mask->data.begin(), rec.mask->data.end());
                std::vector<double> dldp;
                epoch_loss += dice_loss(p, t, cfg.dice_eps, &dldp);

                Tensor dlogits(1, 1, logits.h, logits.w);
                for (size_t i = 0; i < dldp.size(); ++i) {
                    const double pi = p[i];
                    dlogits.data[i] = static_cast<float>(dldp[i] * pi * (1.0 - pi) * scale);
                }
                res.model.backward(dlogits, cache);
            }
            adam.step(lr);
            done += take;
        }

        const double mean_loss = epoch_loss / double(train.size());
        if (!std::isfinite(mean_loss)) throw Error("finetune: non-finite epoch loss");
        const double val_dice = val.empty() ? 0.0 : mean_slice_dice(res.model, index, Split::Val);
        logger.append({epoch, mean_loss, lr, 0.0, val_dice});

        if (res.best_epoch < 0 || val_dice > res.best_val_dice) {
            res.best_val_dice = val_dice;
            res.best_epoch = epoch;
            best_weights.clear();
            for (Param* p : res.model.params()) best_weights[p->name] = p->value.data;
            if (best_path)
                save_checkpoint(*best_path, "finetuned", model_cfg, config_hash,
                                res.model.params());
        }
    }

    for (Param* p : res.model.params()) p->value.data = best_weights.at(p->name);
    if (best_path) res.best_checkpoint = *best_path;
    res.log = logger.records();
    res.test_report = evaluate_model(res.model, index, Split::Test);
    return res;
}

std::vector<Mask2D> predict_scan(const SegmentationModel& model, const DatasetIndex& index,
                                 const std::string& scan_id) {
    std::vector<size_t> ids = index.scan_slices(scan_id);
    std::sort(ids.begin(), ids.end(), [&](size_t a, size_t b) {
        return index.record(a).slice_index < index.record(b).slice_index;
    });
    std::vector<Mask2D> out;
    out.reserve(ids.size());
    for (size_t i : ids) out.push_back(model.predict_mask(index.record(i).pixels));
    return out;
}

EvalReport evaluate_model(const SegmentationModel& model, const DatasetIndex& index, Split split) {
    EvalReport report;
    report.header =
        "dice: volumetric over extracted slices; hausdorff: max variant, pixel units, "
        "slice index as third coordinate; undefined when either mask stack is empty";
    std::vector<std::string> scans;
    for (const std::string& id : index.scan_ids()) {
        const auto& ids = index.scan_slices(id);
        if (!ids.empty() && index.split_of(ids.front()) == split) scans.push_back(id);
    }
    for (const std::string& id : scans) {
        std::vector<size_t> ids = index.scan_slices(id);
        std::sort(ids.begin(), ids.end(), [&](size_t a, size_t b) {
            return index.record(a).slice_index < index.record(b).slice_index;
        });
        std::vector<Mask2D> pred, gt;
        for (size_t i : ids) {
            if (!index.record(i).mask) continue;
            pred.push_back(model.predict_mask(index.record(i).pixels));
            gt.push_back(*index.record(i).mask);
        }
        if (gt.empty()) continue;
        ScanScore score;
        score.scan_id = id;
        score.dice = dice_score_stack(pred, gt);
        score.hausdorff = hausdorff_points(foreground_points_stack(pred),
                                           foreground_points_stack(gt));
        report.per_scan.push_back(std::move(score));
    }
    report.recompute_aggregates();
    return report;
}

double mean_slice_dice(const SegmentationModel& model, const DatasetIndex& index, Split split) {
    double sum = 0.0;
    size_t n = 0;
    for (size_t i : index.split_slices(split)) {
        const auto& rec = index.record(i);
        if (!rec.mask) continue;
        sum += dice_score(model.predict_mask(rec.pixels), *rec.mask);
        ++n;
    }
    return n ? sum / double(n) : 0.0;
}

}  // namespace polycl
