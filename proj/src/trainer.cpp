#include "ctrforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "ctrforge/adam.hpp"
#include "ctrforge/errors.hpp"
#include "ctrforge/metrics.hpp"
#include "ctrforge/rng.hpp"

namespace ctrforge {

namespace {

constexpr uint64_t kShuffleStream = 0x73687566ULL;   // per-epoch order
constexpr uint64_t kDropoutStream = 0x64726f70ULL;   // per-step masks
constexpr size_t kEvalChunk = 8192;

EncodedBatch select_rows(const EncodedBatch& all, const size_t* rows, size_t n) {
  EncodedBatch out;
  out.idx.resize(all.idx.size());
  out.num.resize(all.num.size());
  for (size_t f = 0; f < all.idx.size(); ++f) {
    out.idx[f].reserve(n);
    for (size_t i = 0; i < n; ++i) out.idx[f].push_back(all.idx[f][rows[i]]);
  }
  for (size_t f = 0; f < all.num.size(); ++f) {
    out.num[f].reserve(n);
    for (size_t i = 0; i < n; ++i) out.num[f].push_back(all.num[f][rows[i]]);
  }
  out.label.reserve(n);
  for (size_t i = 0; i < n; ++i) out.label.push_back(all.label[rows[i]]);
  return out;
}

double stable_bce(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

// One dropout-free pass over `batch` in chunks: mean loss, plus clamped
// probabilities identical to predict_checkpoint's.
std::pair<double, std::vector<double>> eval_pass(const Model& model, const EncodedBatch& batch) {
  std::vector<double> probs;
  probs.reserve(batch.size());
  double loss_acc = 0.0;
  std::vector<size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), size_t{0});
  for (size_t start = 0; start < batch.size(); start += kEvalChunk) {
    size_t n = std::min(kEvalChunk, batch.size() - start);
    EncodedBatch chunk = select_rows(batch, rows.data() + start, n);
    Graph g(false);
    auto info = model.forward(g, chunk);
    const auto& z = g.value(info.logits);
    const auto& p = g.value(info.prob);
    for (size_t i = 0; i < n; ++i) {
      loss_acc += stable_bce(static_cast<double>(z[i]), static_cast<double>(chunk.label[i]));
      probs.push_back(std::min(1.0 - 1e-7, std::max(1e-7, static_cast<double>(p[i]))));
    }
  }
  return {batch.size() ? loss_acc / static_cast<double>(batch.size()) : 0.0, std::move(probs)};
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train: learning_rate must be positive and finite");
  if (early_stop && early_stop_patience < 1)
    throw ConfigError("train: early_stop_patience must be >= 1");
}

int default_epochs_for(ContentType t) {
  switch (t) {
    case ContentType::kDrug:
    case ContentType::kDrugFamily:
      return 10;
    // Chapters have the largest candidate catalog, so one epoch covers far
    // more gradient steps; validation AUC peaks within the first few epochs
    // and decays after, hence the small budget.
    case ContentType::kVideoChapter:
      return 3;
    case ContentType::kVideoModule:
      return 35;
  }
  throw ContractViolation("default_epochs_for: unknown content type");
}

TrainResult train_model(const ModelConfig& model_cfg, const FeatureSpace& space,
                        const EncodedBatch& train, const EncodedBatch& val,
                        const TrainConfig& cfg) {
  model_cfg.validate();
  cfg.validate();
  if (train.size() == 0) throw DataError("train: training set is empty");

  Model model(model_cfg, space, cfg.seed);
  Adam opt(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(mix_seed(cfg.seed, kShuffleStream));

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double train_acc = 0.0;
    size_t batch_index = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t n = std::min(static_cast<size_t>(cfg.batch_size), order.size() - start);
      EncodedBatch batch = select_rows(train, order.data() + start, n);
      Graph g(true, mix_seed(cfg.seed, kDropoutStream + step));
      auto info = model.forward(g, batch);
      NodeId labels = g.input(batch_label_tensor(batch));
      NodeId loss = g.bce_with_logits(info.logits, labels);
      double loss_val = static_cast<double>(g.value(loss)[0]);
      if (!std::isfinite(loss_val)) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "train: non-finite loss at epoch %d, batch %zu", epoch,
                      batch_index);
        throw NumericError(msg);
      }
      GradMap grads = g.backward(loss);
      opt.step(model.params(), grads);
      train_acc += loss_val * static_cast<double>(n);
      ++batch_index;
      ++step;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = train_acc / static_cast<double>(train.size());
    auto [val_loss, val_probs] = eval_pass(model, val);
    em.val_loss = val_loss;
    if (val.size() == 0) {
      em.val_auc = std::numeric_limits<double>::quiet_NaN();
    } else {
      try {
        em.val_auc = auc(val_probs, val.label);
      } catch (const DataError&) {
        em.val_auc = std::numeric_limits<double>::quiet_NaN();  // single-class split
      }
    }
    result.history.push_back(em);

    if (cfg.early_stop && val.size() > 0) {
      if (em.val_loss < best_val) {
        best_val = em.val_loss;
        stale = 0;
      } else if (++stale >= cfg.early_stop_patience) {
        break;
      }
    }
  }

  result.checkpoint.config = model_cfg;
  result.checkpoint.space = space;
  result.checkpoint.params = model.params();
  return result;
}

std::vector<double> predict_checkpoint(const Checkpoint& ckpt, const EncodedBatch& batch) {
  Model model(ckpt.config, ckpt.space, ckpt.params);
  return eval_pass(model, batch).second;
}

std::vector<double> predict_checkpoint(const Checkpoint& ckpt, const FeatureSpace& space,
                                       const EncodedBatch& batch) {
  if (space.fingerprint() != ckpt.fingerprint()) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "feature space fingerprint %016llx does not match checkpoint %016llx",
                  static_cast<unsigned long long>(space.fingerprint()),
                  static_cast<unsigned long long>(ckpt.fingerprint()));
    throw DataError(msg);
  }
  return predict_checkpoint(ckpt, batch);
}

void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open metrics csv for writing: " + path);
  out << "epoch,train_loss,val_loss,val_auc\n";
  char line[160];
  for (const auto& em : history) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g\n", em.epoch, em.train_loss,
                  em.val_loss, em.val_auc);
    out << line;
  }
  if (!out) throw DataError("metrics csv write failed: " + path);
}

}  // namespace ctrforge
