#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ctrforge/dataset.hpp"
#include "ctrforge/events.hpp"
#include "ctrforge/models.hpp"
#include "ctrforge/synthgen.hpp"
#include "ctrforge/trainer.hpp"
#include "json.hpp"

namespace ctrforge {

// One run = one structured config file. Strict: unknown keys anywhere are
// rejected; paths resolve relative to the config file's directory; flags
// override config values. Layout documented in docs/run_config.md.
struct RunConfig {
  std::string dataset_tag = "synthetic";
  ContentType content_type = ContentType::kDrug;
  std::string logs_path;  // resolved
  std::string workdir;    // resolved
  SplitSpec split;        // cutoff/test_date derived from synth when absent
  TrainConfig train;      // epochs defaulted per content type when absent
  std::optional<SynthConfig> synth;
  int history_days = 10;              // example dates before the cutoff
  double negatives_per_positive = 4.0;  // training-split downsampling
  bool permute_labels = false;          // evaluation null check
  std::optional<std::string> recommend_user;
  int recommend_k = 10;

  // Raw "model" section, kept so a --model flag can swap the architecture
  // and its per-architecture defaults while explicit keys still apply.
  nlohmann::json model_section;

  uint64_t config_hash = 0;  // canonical-serialization hash of the file

  // Resolves the model configuration: architecture from the flag when given,
  // else the section's "architecture" key; remaining section keys override
  // that architecture's defaults. No architecture anywhere -> ConfigError.
  ModelConfig resolve_model(const std::optional<std::string>& arch_flag) const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir);

std::string hash_hex(uint64_t h);

}  // namespace ctrforge
