#pragma once

#include <optional>
#include <string>

#include "polycl/model.hpp"
#include "polycl/run_log.hpp"
#include "polycl/triplet.hpp"

namespace polycl {

struct PretrainConfig {
    Strategy strategy = Strategy::M;
    int epochs = 100;
    int batch_size = 20;
    float lr = 1e-4f;
    double tau = 0.0;  // <= 0 derives 1/batch_size
    int restart_period = 5;
    uint64_t seed = 0;
    std::string metrics_path;  // JSONL, optional
    std::string trace_path;    // triplet CSV, optional

    double resolved_tau() const { return tau > 0.0 ? tau : 1.0 / batch_size; }
    void validate() const;
};

struct PretrainResult {
    ContrastiveModel model;  // final-epoch weights
    std::vector<EpochRecord> log;
    double final_loss = 0.0;
    double best_loss = 0.0;
    int best_epoch = -1;
    int fallback_count = 0;
    std::string final_checkpoint, best_checkpoint;
};

// Contrastive pre-training over sampled triplets. Anchors are the
// strategy-eligible slices of the training split (or of the whole index when
// no split is assigned), iterated once per epoch in shuffled order.
// Deterministic per seed in this single-worker implementation.
PretrainResult run_pretraining(const PretrainConfig& cfg, const DatasetIndex& index,
                               const ModelConfig& model_cfg, uint64_t config_hash = 0,
                               const std::string& checkpoint_dir = "");

// Embedding of one record as a double vector (test and loss plumbing).
std::vector<double> embed(const ContrastiveModel& model, const Image2D& pixels);

}  // namespace polycl
