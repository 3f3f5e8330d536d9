#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ctrforge/runconfig.hpp"

namespace ctrforge {

struct CommandOptions {
  std::optional<std::string> model;  // architecture override
  std::optional<uint64_t> seed;      // seed override (synth or train seed)
  bool force = false;                // overwrite existing outputs
};

struct Recommendation {
  std::string content_id;
  double probability = 0.0;
};

struct RecommendationList {
  std::string user_id;
  Date generated_at;  // latest date in the logs
  std::vector<Recommendation> items;  // descending probability, length <= k
};

// Each command throws ConfigError / DataError / NumericError; the CLI maps
// them to exit codes. All artifact paths land under config.workdir and are
// recorded in <workdir>/manifest.json together with the config hash.
// Existing outputs are refused without `force`.

// Writes the synthetic logs to config.logs (truth alongside with a _truth
// suffix) and prints row counts.
void cmd_synth(const RunConfig& config, const CommandOptions& opts);

// ingest -> examples -> split -> encode -> train; writes
// <arch>_<content>.ckpt and <arch>_<content>_metrics.csv.
void cmd_train(const RunConfig& config, const CommandOptions& opts);

// Scores the test date for one architecture (or all four when no --model is
// given) and merges results into auc_table.csv, rmse_table.csv and
// per_content_rmse.csv. Single-class test labels: AUC cell "undefined" plus
// a warning; RMSE still emitted.
void cmd_evaluate(const RunConfig& config, const CommandOptions& opts);

// Top-k catalog scores for config.recommend_user as of the latest logged
// date; writes recommendations_<user>.csv and returns the list.
RecommendationList cmd_recommend(const RunConfig& config, const CommandOptions& opts);

// Renders auc_table.csv / rmse_table.csv as aligned text to stdout and
// <workdir>/report.txt.
void cmd_report(const RunConfig& config, const CommandOptions& opts);

// Checkpoint/metrics naming shared by train and evaluate.
std::string checkpoint_path(const RunConfig& config, const std::string& arch);
std::string metrics_path(const RunConfig& config, const std::string& arch);

}  // namespace ctrforge
