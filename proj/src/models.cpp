#include "ctrforge/models.hpp"

#include <algorithm>
#include <cmath>

#include "ctrforge/errors.hpp"
#include "ctrforge/rng.hpp"

namespace ctrforge {
namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string mlp_w(size_t i) { return "mlp." + std::to_string(i) + ".W"; }
std::string mlp_b(size_t i) { return "mlp." + std::to_string(i) + ".b"; }

}  // namespace

const std::vector<std::string>& ModelConfig::known_architectures() {
  static const std::vector<std::string> kArchs = {"pnn", "deepfm", "xdeepfm", "difm"};
  return kArchs;
}

ModelConfig ModelConfig::defaults(const std::string& architecture) {
  ModelConfig cfg;
  cfg.architecture = architecture;
  if (architecture == "xdeepfm") {
    cfg.dropout = 0.5;
  } else if (architecture == "difm") {
    cfg.dropout = 0.5;
    cfg.activation = "tanh";
  }
  cfg.validate();
  return cfg;
}

void ModelConfig::validate() const {
  const auto& archs = known_architectures();
  if (std::find(archs.begin(), archs.end(), architecture) == archs.end())
    throw ConfigError("unknown architecture '" + architecture +
                      "' (expected pnn, deepfm, xdeepfm or difm)");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (hidden.empty()) throw ConfigError("hidden layer list must not be empty");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  if (activation != "relu" && activation != "tanh")
    throw ConfigError("activation must be 'relu' or 'tanh', got '" + activation + "'");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (architecture == "xdeepfm") {
    if (cin_layers.empty()) throw ConfigError("xdeepfm needs at least one CIN layer");
    for (int h : cin_layers)
      if (h < 1) throw ConfigError("CIN layer sizes must be >= 1");
  }
  if (architecture == "difm") {
    if (attention_head_size < 1) throw ConfigError("attention_head_size must be >= 1");
    if (attention_heads < 1) throw ConfigError("attention_heads must be >= 1");
  }
}

NodeId fm_second_order(Graph& g, NodeId emb) {
  const auto& sh = g.shape(emb);
  contract(sh.size() == 3, "fm_second_order: embeddings must be (B, m, k)");
  contract(sh[1] >= 2, "fm_second_order: need at least 2 fields");
  NodeId s = g.sum_axis(emb, 1);                    // (B, k) field sums
  NodeId sq = g.sum_axis(g.square(emb), 1);         // (B, k) sums of squares
  NodeId half = g.scale(g.sub(g.square(s), sq), 0.5f);
  return g.sum_axis(half, 1);                       // (B, 1)
}

AttentionNodes self_attention(Graph& g, NodeId emb, const AttentionParams& p) {
  const auto& sh = g.shape(emb);
  contract(sh.size() == 3, "self_attention: embeddings must be (B, m, k)");
  contract(!p.wq.empty() && p.wq.size() == p.wk.size() && p.wq.size() == p.wv.size(),
           "self_attention: need one (wq, wk, wv) triple per head");
  int batch = sh[0], m = sh[1], k = sh[2];
  NodeId flat = g.reshape(emb, {batch * m, k});
  AttentionNodes an;
  std::vector<NodeId> outs;
  for (size_t h = 0; h < p.wq.size(); ++h) {
    const auto& wsh = g.shape(p.wq[h]);
    contract(wsh.size() == 2 && wsh[0] == k, "self_attention: projection must be (k, head_size)");
    int dh = wsh[1];
    NodeId q = g.reshape(g.matmul(flat, p.wq[h]), {batch, m, dh});
    NodeId kk = g.reshape(g.matmul(flat, p.wk[h]), {batch, m, dh});
    NodeId v = g.reshape(g.matmul(flat, p.wv[h]), {batch, m, dh});
    NodeId scores = g.scale(g.bmm(q, g.transpose_last2(kk)),
                            1.0f / std::sqrt(static_cast<float>(dh)));
    NodeId a = g.softmax(scores);  // (B, m, m), rows sum to 1
    an.probs.push_back(a);
    outs.push_back(g.bmm(a, v));  // (B, m, dh)
  }
  an.out = outs.size() == 1 ? outs[0] : g.concat(outs);
  return an;
}

Model::Model(ModelConfig cfg, const FeatureSpace& space, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  cat_fields_ = space.schema.names(FieldKind::kCategorical);
  contract(cat_fields_.size() >= 2, "model: need at least 2 categorical fields");
  for (const auto& f : cat_fields_) {
    auto it = space.vocabs.find(f);
    contract(it != space.vocabs.end(), "model: missing vocab for field '" + f + "'");
    vocab_sizes_.push_back(it->second.size());
  }
  n_num_ = space.schema.count(FieldKind::kNumeric);
  for (const auto& spec : param_specs()) {
    if (spec.init_std > 0.0) {
      Rng rng(mix_seed(seed, fnv1a(spec.name)));
      params_[spec.name] = Tensor::randn(spec.shape, rng, spec.init_std);
    } else {
      params_[spec.name] = Tensor::full(spec.shape, static_cast<float>(spec.init_fill));
    }
  }
}

Model::Model(ModelConfig cfg, const FeatureSpace& space, ParamMap params)
    : Model(std::move(cfg), space, uint64_t{0}) {
  auto specs = param_specs();
  contract(params.size() == specs.size(), "model: parameter map has wrong entry count");
  for (const auto& spec : specs) {
    auto it = params.find(spec.name);
    contract(it != params.end(), "model: missing parameter '" + spec.name + "'");
    contract(it->second.shape() == spec.shape,
             "model: shape mismatch for parameter '" + spec.name + "'");
  }
  params_ = std::move(params);
}

std::vector<Model::ParamSpec> Model::param_specs() const {
  std::vector<ParamSpec> specs;
  int m = static_cast<int>(cat_fields_.size());
  int k = cfg_.embedding_dim;
  const bool relu = cfg_.activation == "relu";

  for (size_t f = 0; f < cat_fields_.size(); ++f)
    specs.push_back({"embed." + cat_fields_[f], {vocab_sizes_[f], k}, 0.1, 0.0});

  if (cfg_.architecture != "pnn") {
    for (size_t f = 0; f < cat_fields_.size(); ++f)
      specs.push_back({"first_order." + cat_fields_[f], {vocab_sizes_[f], 1}, 0.01, 0.0});
    if (n_num_ > 0) specs.push_back({"first_order.numeric", {n_num_, 1}, 0.01, 0.0});
    specs.push_back({"first_order.bias", {1}, 0.0, 0.0});
  }

  // Every architecture carries the MLP: pnn/deepfm/xdeepfm as the deep
  // component, difm as the bit-wise factor network.
  int in_dim = m * k + n_num_;
  if (cfg_.architecture == "pnn") in_dim += m * (m - 1) / 2;
  for (size_t i = 0; i < cfg_.hidden.size(); ++i) {
    int out_dim = cfg_.hidden[i];
    double std = relu ? std::sqrt(2.0 / in_dim) : std::sqrt(2.0 / (in_dim + out_dim));
    specs.push_back({mlp_w(i), {in_dim, out_dim}, std, 0.0});
    specs.push_back({mlp_b(i), {out_dim}, 0.0, 0.0});
    in_dim = out_dim;
  }
  int last = cfg_.hidden.back();

  if (cfg_.architecture == "pnn") {
    specs.push_back({"head.W", {last, 1}, std::sqrt(2.0 / (last + 1)), 0.0});
    specs.push_back({"head.b", {1}, 0.0, 0.0});
  } else if (cfg_.architecture == "deepfm") {
    specs.push_back({"head.W", {last, 1}, std::sqrt(2.0 / (last + 1)), 0.0});
  } else if (cfg_.architecture == "xdeepfm") {
    specs.push_back({"head.W", {last, 1}, std::sqrt(2.0 / (last + 1)), 0.0});
    int h_prev = m;
    int pooled = 0;
    for (size_t l = 0; l < cfg_.cin_layers.size(); ++l) {
      int h_out = cfg_.cin_layers[l];
      specs.push_back({"cin." + std::to_string(l) + ".W", {h_out, h_prev, m},
                       std::sqrt(2.0 / (h_prev * m)), 0.0});
      pooled += h_out;
      h_prev = h_out;
    }
    specs.push_back({"head.cin_W", {pooled, 1}, std::sqrt(2.0 / (pooled + 1)), 0.0});
  } else {  // difm
    // Bit-wise projection bias starts at 1 so the combined factors begin near
    // identity; at a = 0 the reweighted FM sits on a zero-gradient saddle.
    specs.push_back({"fen_bit.proj.W", {last, m}, std::sqrt(2.0 / (last + m)), 0.0});
    specs.push_back({"fen_bit.proj.b", {m}, 0.0, 1.0});
    int dh = cfg_.attention_head_size;
    for (int h = 0; h < cfg_.attention_heads; ++h) {
      std::string base = "attn." + std::to_string(h) + ".";
      double std = std::sqrt(2.0 / (k + dh));
      specs.push_back({base + "Wq", {k, dh}, std, 0.0});
      specs.push_back({base + "Wk", {k, dh}, std, 0.0});
      specs.push_back({base + "Wv", {k, dh}, std, 0.0});
    }
    int att_dim = m * cfg_.attention_heads * dh;
    specs.push_back({"fen_vec.proj.W", {att_dim, m}, std::sqrt(2.0 / (att_dim + m)), 0.0});
    specs.push_back({"fen_vec.proj.b", {m}, 0.0, 0.0});
  }
  return specs;
}

ForwardInfo Model::forward(Graph& g, const EncodedBatch& batch) const {
  contract(batch.idx.size() == cat_fields_.size(), "forward: batch has wrong field count");
  contract(static_cast<int>(batch.num.size()) == n_num_, "forward: batch has wrong numeric count");
  contract(batch.size() >= 1, "forward: empty batch");
  int b = static_cast<int>(batch.size());

  std::map<std::string, NodeId> p;
  for (const auto& [name, t] : params_) p[name] = g.param(name, t);

  ForwardInfo info;
  std::vector<NodeId> field_emb;
  for (size_t f = 0; f < cat_fields_.size(); ++f)
    field_emb.push_back(g.gather(p.at("embed." + cat_fields_[f]), batch.idx[f]));
  NodeId emb = g.stack_fields(field_emb);  // (B, m, k)
  info.embeddings = emb;
  int m = static_cast<int>(cat_fields_.size());
  NodeId flat = g.reshape(emb, {b, m * cfg_.embedding_dim});

  NodeId x_num = -1;
  if (n_num_ > 0) x_num = g.input(batch_numeric_tensor(batch));

  auto act = [&](NodeId x) { return cfg_.activation == "relu" ? g.relu(x) : g.tanh(x); };
  auto mlp = [&](NodeId in) {
    NodeId h = in;
    for (size_t i = 0; i < cfg_.hidden.size(); ++i) {
      h = act(g.bias_add(g.matmul(h, p.at(mlp_w(i))), p.at(mlp_b(i))));
      h = g.dropout(h, static_cast<float>(cfg_.dropout));
    }
    return h;
  };
  auto with_num = [&](NodeId x) { return x_num < 0 ? x : g.concat({x, x_num}); };
  auto linear_no_bias = [&]() {
    NodeId lin = -1;
    for (size_t f = 0; f < cat_fields_.size(); ++f) {
      NodeId w = g.gather(p.at("first_order." + cat_fields_[f]), batch.idx[f]);  // (B, 1)
      lin = lin < 0 ? w : g.add(lin, w);
    }
    if (x_num >= 0) lin = g.add(lin, g.matmul(x_num, p.at("first_order.numeric")));
    return lin;
  };

  if (cfg_.architecture == "pnn") {
    info.product = g.pairwise_inner(emb);  // (B, m(m-1)/2)
    NodeId h = mlp(with_num(g.concat({flat, info.product})));
    info.deep_term = g.matmul(h, p.at("head.W"));
    info.logits = g.bias_add(info.deep_term, p.at("head.b"));
  } else if (cfg_.architecture == "deepfm") {
    info.linear_term = linear_no_bias();
    info.fm_term = fm_second_order(g, emb);
    info.deep_term = g.matmul(mlp(with_num(flat)), p.at("head.W"));
    NodeId z = g.add(g.add(info.linear_term, info.fm_term), info.deep_term);
    info.logits = g.bias_add(z, p.at("first_order.bias"));
  } else if (cfg_.architecture == "xdeepfm") {
    info.linear_term = linear_no_bias();
    NodeId x = emb;
    std::vector<NodeId> pooled;
    for (size_t l = 0; l < cfg_.cin_layers.size(); ++l) {
      x = g.cin_interact(x, emb, p.at("cin." + std::to_string(l) + ".W"));
      pooled.push_back(g.sum_axis(x, 2));  // (B, H_l) sum over embedding dim
    }
    NodeId pool_cat = pooled.size() == 1 ? pooled[0] : g.concat(pooled);
    info.cin_term = g.matmul(pool_cat, p.at("head.cin_W"));
    info.deep_term = g.matmul(mlp(with_num(flat)), p.at("head.W"));
    NodeId z = g.add(g.add(info.linear_term, info.cin_term), info.deep_term);
    info.logits = g.bias_add(z, p.at("first_order.bias"));
  } else {  // difm
    NodeId h = mlp(with_num(flat));
    NodeId m_bit = g.bias_add(g.matmul(h, p.at("fen_bit.proj.W")), p.at("fen_bit.proj.b"));
    AttentionParams ap;
    for (int hd = 0; hd < cfg_.attention_heads; ++hd) {
      std::string base = "attn." + std::to_string(hd) + ".";
      ap.wq.push_back(p.at(base + "Wq"));
      ap.wk.push_back(p.at(base + "Wk"));
      ap.wv.push_back(p.at(base + "Wv"));
    }
    AttentionNodes att = self_attention(g, emb, ap);
    info.attention = att.out;
    const auto& ash = g.shape(att.out);
    NodeId att_flat = g.reshape(att.out, {b, ash[1] * ash[2]});
    NodeId m_vec = g.bias_add(g.matmul(att_flat, p.at("fen_vec.proj.W")), p.at("fen_vec.proj.b"));
    info.factors = g.add(m_bit, m_vec);  // (B, m)

    NodeId scaled = g.row_scale(emb, info.factors);
    info.fm_term = fm_second_order(g, scaled);
    std::vector<NodeId> w1;
    for (size_t f = 0; f < cat_fields_.size(); ++f)
      w1.push_back(g.gather(p.at("first_order." + cat_fields_[f]), batch.idx[f]));
    NodeId w1_cat = g.concat(w1);                             // (B, m)
    info.linear_term = g.sum_axis(g.mul(w1_cat, info.factors), 1);  // (B, 1)
    if (x_num >= 0)
      info.linear_term = g.add(info.linear_term, g.matmul(x_num, p.at("first_order.numeric")));
    info.logits =
        g.bias_add(g.add(info.linear_term, info.fm_term), p.at("first_order.bias"));
  }
  info.prob = g.sigmoid(info.logits);
  return info;
}

std::vector<double> Model::predict(const EncodedBatch& batch) const {
  Graph g(false);
  ForwardInfo info = forward(g, batch);
  const auto& probs = g.value(info.prob);
  std::vector<double> out(probs.size());
  for (size_t i = 0; i < probs.size(); ++i)
    out[i] = std::min(1.0 - 1e-7, std::max(1e-7, static_cast<double>(probs[i])));
  return out;
}

Tensor batch_numeric_tensor(const EncodedBatch& batch) {
  int b = static_cast<int>(batch.size());
  int n = static_cast<int>(batch.num.size());
  Tensor t = Tensor::zeros({b, n});
  for (int f = 0; f < n; ++f) {
    contract(batch.num[f].size() == batch.size(), "batch numeric column size mismatch");
    for (int i = 0; i < b; ++i) t.at(i, f) = batch.num[f][static_cast<size_t>(i)];
  }
  return t;
}

Tensor batch_label_tensor(const EncodedBatch& batch) {
  int b = static_cast<int>(batch.size());
  Tensor t = Tensor::zeros({b, 1});
  for (int i = 0; i < b; ++i) t.at(i, 0) = batch.label[static_cast<size_t>(i)];
  return t;
}

}  // namespace ctrforge
