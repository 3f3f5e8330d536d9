#pragma once

#include <cstdint>
#include <string>

#include "ctrforge/models.hpp"
#include "ctrforge/schema.hpp"
#include "ctrforge/tensor.hpp"

namespace ctrforge {

inline constexpr uint32_t kCheckpointVersion = 1;

// Everything needed to reproduce predictions bit-for-bit: model config, the
// fitted feature space (schema, vocabularies, numeric stats), parameters.
struct Checkpoint {
  ModelConfig config;
  FeatureSpace space;
  ParamMap params;

  uint64_t fingerprint() const { return space.fingerprint(); }
};

// Fixed little-endian binary layout, version-gated, "CTRF" magic and "CEND"
// trailer. Byte-identical for identical contents. Documented in
// docs/checkpoint_format.md.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Errors: unreadable file, bad magic, unsupported version (message carries
// both versions), truncated or trailing bytes -> DataError.
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin);

}  // namespace ctrforge
