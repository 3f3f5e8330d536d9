#include "ctrforge/embedding.hpp"

#include "ctrforge/errors.hpp"

namespace ctrforge {

NodeId embed_batch(Graph& g, const std::vector<NodeId>& field_tables,
                   const std::vector<const std::vector<int32_t>*>& field_indices) {
  contract(!field_tables.empty(), "embed_batch with no fields");
  contract(field_tables.size() == field_indices.size(), "embed_batch field count mismatch");
  std::vector<NodeId> per_field;
  per_field.reserve(field_tables.size());
  for (size_t f = 0; f < field_tables.size(); ++f)
    per_field.push_back(g.gather(field_tables[f], *field_indices[f]));
  return g.stack_fields(per_field);
}

}  // namespace ctrforge
