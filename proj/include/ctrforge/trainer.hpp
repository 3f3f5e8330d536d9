#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctrforge/checkpoint.hpp"
#include "ctrforge/dataset.hpp"
#include "ctrforge/events.hpp"
#include "ctrforge/models.hpp"

namespace ctrforge {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 256;
  double learning_rate = 0.001;
  uint64_t seed = 1;
  // Off by default: the reference regime runs a fixed epoch count. When on,
  // training stops after `early_stop_patience` epochs without a new best
  // validation loss.
  bool early_stop = false;
  int early_stop_patience = 3;

  void validate() const;
};

// Fixed-epoch defaults per content type: 10 for drugs and drug families, 20
// for video chapters, 35 for video modules. The per-type assignment is a
// documented default, overridable in config.
int default_epochs_for(ContentType t);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;  // NaN when the validation split is single-class
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> history;
};

// Mini-batch Adam on mean binary cross-entropy. Per-epoch reshuffle with a
// seeded rng; dropout active in training passes only. Deterministic:
// (config, data, seed) fixes the checkpoint bytes and metric values.
// Errors: empty training set -> DataError; non-finite loss -> NumericError
// naming epoch and batch.
TrainResult train_model(const ModelConfig& model_cfg, const FeatureSpace& space,
                        const EncodedBatch& train, const EncodedBatch& val,
                        const TrainConfig& cfg);

// Dropout-free deterministic predictions, clamped to [1e-7, 1-1e-7].
std::vector<double> predict_checkpoint(const Checkpoint& ckpt, const EncodedBatch& batch);

// Same, but first checks that `space` is the checkpoint's feature space;
// mismatch -> DataError carrying both fingerprints.
std::vector<double> predict_checkpoint(const Checkpoint& ckpt, const FeatureSpace& space,
                                       const EncodedBatch& batch);

// "epoch,train_loss,val_loss,val_auc" header plus one %.10g row per epoch.
void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::string& path);

}  // namespace ctrforge
