#pragma once

#include <string>
#include <vector>

#include "ctrforge/dataset.hpp"
#include "ctrforge/graph.hpp"
#include "ctrforge/schema.hpp"

namespace ctrforge {

// Hyperparameters for one architecture. defaults() encodes the reference
// settings: three hidden layers of 256/128/64 units, relu activation except
// difm which uses tanh, dropout 0.5 for xdeepfm and difm and 0 otherwise,
// attention head size 32.
struct ModelConfig {
  std::string architecture;  // pnn | deepfm | xdeepfm | difm
  int embedding_dim = 8;
  std::vector<int> hidden = {256, 128, 64};
  std::string activation = "relu";  // relu | tanh
  double dropout = 0.0;
  std::vector<int> cin_layers = {16, 16};  // feature maps per CIN layer (xdeepfm)
  int attention_head_size = 32;            // difm
  int attention_heads = 1;                 // difm

  static ModelConfig defaults(const std::string& architecture);
  static const std::vector<std::string>& known_architectures();
  void validate() const;  // throws ConfigError
};

// Second-order FM term for stacked field embeddings (B, m, k) -> (B, 1),
// via the identity 0.5 * sum_k [ (sum_i E_ik)^2 - sum_i E_ik^2 ].
NodeId fm_second_order(Graph& g, NodeId emb);

// Scaled dot-product multi-head self-attention over field embeddings.
// Heads are concatenated without an output projection, so the result is
// (B, m, heads * head_size). `probs` exposes each head's (B, m, m) softmax
// for inspection; rows sum to 1.
struct AttentionNodes {
  NodeId out = -1;
  std::vector<NodeId> probs;
};
struct AttentionParams {
  std::vector<NodeId> wq, wk, wv;  // one (k, head_size) triple per head
};
AttentionNodes self_attention(Graph& g, NodeId emb, const AttentionParams& p);

// Intermediate nodes of one recorded forward pass, for oracle tests and
// component-wise gradient inspection. Unused slots stay -1.
struct ForwardInfo {
  NodeId logits = -1;
  NodeId prob = -1;        // sigmoid(logits), (B, 1)
  NodeId embeddings = -1;  // (B, m, k)
  NodeId linear_term = -1;
  NodeId fm_term = -1;
  NodeId deep_term = -1;
  NodeId cin_term = -1;
  NodeId product = -1;     // pnn pairwise inner products, (B, m(m-1)/2)
  NodeId factors = -1;     // difm input-aware factors, (B, m)
  NodeId attention = -1;   // difm attention output
};

// One CTR model: configuration plus named parameters laid out for a feature
// space. forward() records the architecture onto a graph; parameters are
// registered under stable names so optimizer state and checkpoints line up.
//
// Parameters are read-only during forward/predict and shareable across
// threads; mutation (training, loading) must be externally serialized.
class Model {
 public:
  Model(ModelConfig cfg, const FeatureSpace& space, uint64_t seed);
  Model(ModelConfig cfg, const FeatureSpace& space, ParamMap params);

  const ModelConfig& config() const { return cfg_; }
  const ParamMap& params() const { return params_; }
  ParamMap& params() { return params_; }
  const std::vector<std::string>& cat_fields() const { return cat_fields_; }
  int num_numeric() const { return n_num_; }

  ForwardInfo forward(Graph& g, const EncodedBatch& batch) const;

  // Dropout-free probabilities, clamped to [1e-7, 1 - 1e-7].
  std::vector<double> predict(const EncodedBatch& batch) const;

 private:
  struct ParamSpec {
    std::string name;
    std::vector<int> shape;
    double init_std = 0.0;   // 0 -> constant fill
    double init_fill = 0.0;
  };
  std::vector<ParamSpec> param_specs() const;

  ModelConfig cfg_;
  std::vector<std::string> cat_fields_;
  std::vector<int32_t> vocab_sizes_;
  int n_num_ = 0;
  ParamMap params_;
};

// Row-major (B, n_num) numeric inputs / (B, 1) labels for one batch.
Tensor batch_numeric_tensor(const EncodedBatch& batch);
Tensor batch_label_tensor(const EncodedBatch& batch);

}  // namespace ctrforge
