#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctrforge/rng.hpp"
#include "ctrforge/tensor.hpp"

namespace ctrforge {

using NodeId = int;

enum class Op : uint8_t {
  kInput,
  kParam,
  kMatmul,
  kBmm,
  kTransposeLast2,
  kAdd,
  kSub,
  kMul,
  kBiasAdd,
  kScale,
  kRelu,
  kTanh,
  kSigmoid,
  kSquare,
  kSoftmax,
  kDropout,
  kGather,
  kStackFields,
  kConcat,
  kSlice,
  kReshape,
  kSumAxis,
  kSumAll,
  kMeanAll,
  kPairwiseInner,
  kCinInteract,
  kRowScale,
  kBceWithLogits,
};

struct Node {
  Op op = Op::kInput;
  std::vector<int> shape;
  std::vector<NodeId> inputs;
  std::vector<int> iattrs;       // axis / slice bounds, op dependent
  float fattr = 0.0f;            // scale factor or dropout keep probability
  std::vector<int32_t> indices;  // gather row indices
  std::vector<uint8_t> mask;     // dropout keep mask
  std::string param_name;
  std::vector<float> value;
};

using GradMap = std::map<std::string, Tensor>;

// Replacement values for named parameters during replay. Double precision so
// finite-difference probes are not quantized to float steps.
using OverrideMap = std::map<std::string, std::vector<double>>;

// Tape of primitive ops. Recording is eager: every builder call computes the
// node's value immediately, so node order is a topological order and the
// backward pass can walk it in reverse. The recorded program is replayable
// at float (bit-for-bit, for determinism checks) or double (for gradient
// verification) precision.
//
// Precision policy: values are float32. Explicit reductions (sum, mean,
// softmax normalizer, loss) accumulate in double; contractions (matmul, bmm,
// pairwise products, CIN) accumulate in the element type, matching BLAS
// convention.
//
// Single writer: a graph and the parameters feeding it must not be mutated
// concurrently with recording or backward.
class Graph {
 public:
  explicit Graph(bool training = false, uint64_t dropout_seed = 0);

  bool training() const { return training_; }

  NodeId input(const Tensor& t);
  NodeId param(const std::string& name, const Tensor& t);

  NodeId matmul(NodeId a, NodeId b);
  NodeId bmm(NodeId a, NodeId b);
  NodeId transpose_last2(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId bias_add(NodeId x, NodeId b);
  NodeId scale(NodeId a, float c);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId square(NodeId a);
  NodeId softmax(NodeId a);  // along the last axis
  NodeId dropout(NodeId a, float rate);
  NodeId gather(NodeId table, const std::vector<int32_t>& rows);
  NodeId stack_fields(const std::vector<NodeId>& fields);  // F x (B,k) -> (B,F,k)
  NodeId concat(const std::vector<NodeId>& parts);         // along the last axis
  NodeId slice_last(NodeId a, int start, int len);
  NodeId reshape(NodeId a, std::vector<int> shape);
  NodeId sum_axis(NodeId a, int axis);
  NodeId sum_all(NodeId a);
  NodeId mean_all(NodeId a);
  NodeId pairwise_inner(NodeId e);  // (B,m,k) -> (B, m*(m-1)/2), pairs i<j in order
  NodeId cin_interact(NodeId x_prev, NodeId x0, NodeId w);
  NodeId row_scale(NodeId e, NodeId a);  // (B,m,k) * (B,m) -> (B,m,k)
  NodeId bce_with_logits(NodeId logits, NodeId labels);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  const std::vector<int>& shape(NodeId id) const { return nodes_[static_cast<size_t>(id)].shape; }
  const std::vector<float>& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  Tensor value_tensor(NodeId id) const;

  // Names and ids of registered parameters, in registration order.
  const std::vector<std::pair<std::string, NodeId>>& param_nodes() const { return params_; }

  // Reverse-mode gradients of a scalar loss with respect to every registered
  // parameter. Parameters the loss does not depend on get zero gradients.
  GradMap backward(NodeId loss) const;

  // Re-executes the recorded program up to `target` and returns its buffer.
  // `overrides` substitutes values for named parameters; dropout masks and
  // gather indices are reused as recorded.
  template <typename T>
  std::vector<T> replay(NodeId target, const OverrideMap* overrides = nullptr) const;

  // Scalar convenience over replay<double>; `target` must have size 1.
  double replay_scalar(NodeId target, const OverrideMap* overrides = nullptr) const;

 private:
  NodeId push(Node n);
  void compute(Node& n) const;

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, NodeId>> params_;
  Rng mask_rng_;
  bool training_;
};

}  // namespace ctrforge
