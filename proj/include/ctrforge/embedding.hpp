#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctrforge/graph.hpp"
#include "ctrforge/tensor.hpp"

namespace ctrforge {

// One (vocab_size, embedding_dim) parameter matrix per categorical field.
struct EmbeddingTable {
  std::string param_name;
  Tensor weights;
};

// Looks up one index list per field and stacks the results into a
// (batch, num_fields, embedding_dim) block on the tape. Gradients reach only
// the looked-up rows and accumulate across duplicate indices.
NodeId embed_batch(Graph& g, const std::vector<NodeId>& field_tables,
                   const std::vector<const std::vector<int32_t>*>& field_indices);

}  // namespace ctrforge
