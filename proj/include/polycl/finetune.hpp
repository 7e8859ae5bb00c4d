#pragma once

#include <optional>
#include <string>

#include "polycl/dataset.hpp"
#include "polycl/metrics.hpp"
#include "polycl/model.hpp"
#include "polycl/run_log.hpp"

namespace polycl {

struct FinetuneConfig {
    int epochs = 100;
    int batch_size = 10;
    float lr = 1e-3f;
    int restart_period = 5;
    std::string init = "random";  // random | from_checkpoint
    uint64_t seed = 0;
    double dice_eps = 1.0;
    std::string metrics_path;

    void validate() const;
};

struct FinetuneResult {
    SegmentationModel model;  // best-validation weights
    std::vector<EpochRecord> log;
    double best_val_dice = 0.0;
    int best_epoch = -1;
    std::string best_checkpoint;
    EvalReport test_report;
};

// Attach the decoder and train end-to-end with soft Dice on the labeled
// training subset; the projection head plays no part here. When init is
// from_checkpoint the encoder weights come from a pretrained checkpoint
// (stage and encoder config are verified). Model selection is by best
// validation Dice.
FinetuneResult run_finetuning(const FinetuneConfig& cfg,
                              const std::optional<Checkpoint>& checkpoint,
                              const DatasetIndex& index, const ModelConfig& model_cfg,
                              uint64_t config_hash = 0, const std::string& checkpoint_dir = "");

// Per-scan evaluation on one split: volumetric Dice over the stacked slices
// plus Hausdorff on the stacked foreground point sets (slice index as the
// third coordinate, pixel units).
EvalReport evaluate_model(const SegmentationModel& model, const DatasetIndex& index, Split split);

// Mean per-slice hard Dice at threshold 0.5 (validation monitoring).
double mean_slice_dice(const SegmentationModel& model, const DatasetIndex& index, Split split);

// Predictions for every slice of one scan, ascending slice index.
std::vector<Mask2D> predict_scan(const SegmentationModel& model, const DatasetIndex& index,
                                 const std::string& scan_id);

}  // namespace polycl
