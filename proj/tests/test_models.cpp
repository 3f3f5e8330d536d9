#include "ctrforge/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctrforge/errors.hpp"
#include "ctrforge/gradcheck.hpp"
#include "ctrforge/rng.hpp"
#include "doctest.h"

using namespace ctrforge;

namespace {

FeatureSpace small_space() {
  FeatureSpace s;
  s.vocabs["user_id"] = FieldVocab::from_values({"u1", "u2", "u3"});
  s.vocabs["content_id"] = FieldVocab::from_values({"a", "b"});
  s.vocabs["content_type"] = FieldVocab::from_values({"drug"});
  s.vocabs["day_of_week"] = FieldVocab::from_values({"0", "1", "2"});
  s.vocabs["month"] = FieldVocab::from_values({"01"});
  for (const auto& f : s.schema.names(FieldKind::kNumeric)) s.stats[f] = {0.0, 1.0};
  return s;
}

// Three categorical fields, no numerics: exercises the no-numeric path and
// gives m=3 for the product-vector-length example.
FeatureSpace cat_only_space() {
  FeatureSpace s;
  s.schema = FeatureSchema({{"user_id", FieldKind::kCategorical},
                            {"content_id", FieldKind::kCategorical},
                            {"content_type", FieldKind::kCategorical}});
  s.vocabs["user_id"] = FieldVocab::from_values({"u1", "u2"});
  s.vocabs["content_id"] = FieldVocab::from_values({"a", "b"});
  s.vocabs["content_type"] = FieldVocab::from_values({"drug"});
  return s;
}

ModelConfig tiny_cfg(const std::string& arch) {
  ModelConfig cfg = ModelConfig::defaults(arch);
  cfg.embedding_dim = 3;
  cfg.hidden = {6, 5};
  cfg.cin_layers = {3, 2};
  cfg.attention_head_size = 3;
  cfg.attention_heads = 2;
  return cfg;
}

EncodedBatch rand_batch(const FeatureSpace& space, int b, uint64_t seed) {
  Rng rng(seed);
  EncodedBatch batch;
  for (const auto& f : space.schema.names(FieldKind::kCategorical)) {
    std::vector<int32_t> col;
    for (int i = 0; i < b; ++i)
      col.push_back(static_cast<int32_t>(rng.below(space.vocabs.at(f).size())));
    batch.idx.push_back(std::move(col));
  }
  for (int f = 0; f < space.schema.count(FieldKind::kNumeric); ++f) {
    std::vector<float> col;
    for (int i = 0; i < b; ++i) col.push_back(static_cast<float>(rng.normal()));
    batch.num.push_back(std::move(col));
  }
  for (int i = 0; i < b; ++i) batch.label.push_back(rng.bernoulli(0.4f) ? 1.0f : 0.0f);
  return batch;
}

void zero_params(Model& model) {
  for (auto& [name, t] : model.params()) std::fill(t.vec().begin(), t.vec().end(), 0.0f);
}

double sigmoid_d(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// sum_{i<j} <E_i, E_j> per example, double accumulation.
std::vector<double> fm_naive(const std::vector<float>& e, int b, int m, int k) {
  std::vector<double> out(b, 0.0);
  for (int n = 0; n < b; ++n)
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double dot = 0.0;
        for (int d = 0; d < k; ++d)
          dot += static_cast<double>(e[(n * m + i) * k + d]) *
                 static_cast<double>(e[(n * m + j) * k + d]);
        out[n] += dot;
      }
  return out;
}

// out[h][d] = sum_i sum_j w[h][i][j] * x_prev[i][d] * x0[j][d], per example.
std::vector<double> cin_naive(const std::vector<float>& xp, const std::vector<float>& x0,
                              const std::vector<float>& w, int b, int hp, int m, int k, int ho) {
  std::vector<double> out(static_cast<size_t>(b) * ho * k, 0.0);
  for (int n = 0; n < b; ++n)
    for (int h = 0; h < ho; ++h)
      for (int d = 0; d < k; ++d) {
        double acc = 0.0;
        for (int i = 0; i < hp; ++i)
          for (int j = 0; j < m; ++j)
            acc += static_cast<double>(w[(h * hp + i) * m + j]) *
                   static_cast<double>(xp[(n * hp + i) * k + d]) *
                   static_cast<double>(x0[(n * m + j) * k + d]);
        out[(static_cast<size_t>(n) * ho + h) * k + d] = acc;
      }
  return out;
}

void perturb_params(Model& model, uint64_t seed) {
  Rng rng(mix_seed(seed, 0x70657274ULL));
  for (auto& [name, t] : model.params())
    for (float& v : t.vec()) v += static_cast<float>(rng.normal() * 0.05);
}

// Smallest |relu preactivation| on the tape. Central differences are only
// meaningful where every relu input keeps its sign within the probe radius.
double relu_kink_margin(const Graph& g) {
  double margin = std::numeric_limits<double>::infinity();
  for (NodeId id = 0; id < g.num_nodes(); ++id)
    if (g.node(id).op == Op::kRelu)
      for (float z : g.value(g.node(id).inputs[0]))
        margin = std::min(margin, std::abs(static_cast<double>(z)));
  return margin;
}

// Gradients are contracted to match finite differences at non-singular
// points only, so the check perturbs all parameters away from the init
// point (zero biases sit exactly on the kink when a hidden row dies) and
// resamples until no preactivation is within 100x the probe step.
GradCheckReport check_model(const std::string& arch, const FeatureSpace& space, uint64_t seed) {
  auto batch = rand_batch(space, 3, mix_seed(seed, 99));
  for (uint64_t attempt = 0; attempt < 64; ++attempt) {
    Model model(tiny_cfg(arch), space, seed);
    perturb_params(model, mix_seed(seed, attempt));
    Graph g(true, mix_seed(seed, 7));
    auto info = model.forward(g, batch);
    NodeId labels = g.input(batch_label_tensor(batch));
    NodeId loss = g.bce_with_logits(info.logits, labels);
    if (relu_kink_margin(g) <= 1e-2) continue;
    return finite_difference_check(g, loss);
  }
  throw NumericError("gradcheck: no non-singular point found for " + arch);
}

}  // namespace

TEST_CASE("model config defaults and validation") {
  auto pnn = ModelConfig::defaults("pnn");
  CHECK(pnn.hidden == std::vector<int>{256, 128, 64});
  CHECK(pnn.activation == "relu");
  CHECK(pnn.dropout == 0.0);
  CHECK(pnn.embedding_dim == 8);
  CHECK(ModelConfig::defaults("deepfm").dropout == 0.0);
  auto xd = ModelConfig::defaults("xdeepfm");
  CHECK(xd.dropout == 0.5);
  CHECK(xd.activation == "relu");
  CHECK(xd.cin_layers == std::vector<int>{16, 16});
  auto difm = ModelConfig::defaults("difm");
  CHECK(difm.dropout == 0.5);
  CHECK(difm.activation == "tanh");
  CHECK(difm.attention_head_size == 32);
  CHECK(difm.attention_heads == 1);

  CHECK_THROWS_AS(ModelConfig::defaults("fm"), ConfigError);
  ModelConfig bad = ModelConfig::defaults("pnn");
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::defaults("pnn");
  bad.hidden.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::defaults("xdeepfm");
  bad.cin_layers.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::defaults("difm");
  bad.attention_head_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::defaults("deepfm");
  bad.activation = "gelu";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fm second order: orthogonal, hand case, pairwise oracle") {
  {
    Graph g;
    NodeId e = g.input(Tensor::from({1, 2, 2}, {1, 0, 0, 1}));
    CHECK(g.value(fm_second_order(g, e))[0] == doctest::Approx(0.0).epsilon(1e-12));
  }
  {
    Graph g;
    NodeId e = g.input(Tensor::from({1, 3, 2}, {1, 0, 0, 1, 1, 1}));
    CHECK(g.value(fm_second_order(g, e))[0] == doctest::Approx(2.0).epsilon(1e-12));
  }
  {
    Graph g;
    NodeId e = g.input(Tensor::from({1, 1, 2}, {1, 2}));
    CHECK_THROWS_AS(fm_second_order(g, e), ContractViolation);
  }
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(301, seed));
    int b = 1 + static_cast<int>(rng.below(3));
    int m = 2 + static_cast<int>(rng.below(5));
    int k = 1 + static_cast<int>(rng.below(8));
    Tensor e = Tensor::randn({b, m, k}, rng, 1.5);
    Graph g;
    const auto& got = g.value(fm_second_order(g, g.input(e)));
    auto want = fm_naive(e.vec(), b, m, k);
    for (int n = 0; n < b; ++n) CHECK(std::abs(got[n] - want[n]) <= 1e-5);
  }
}

TEST_CASE("fm second order and pnn products invariant under field permutation") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(mix_seed(302, seed));
    int b = 2, m = 2 + static_cast<int>(rng.below(5)), k = 3;
    Tensor e = Tensor::randn({b, m, k}, rng, 1.0);
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    rng.shuffle(perm);
    Tensor ep = Tensor::zeros({b, m, k});
    for (int n = 0; n < b; ++n)
      for (int i = 0; i < m; ++i)
        for (int d = 0; d < k; ++d) ep.at(n, i, d) = e.at(n, perm[i], d);

    Graph g;
    const auto& fm_a = g.value(fm_second_order(g, g.input(e)));
    const auto& fm_b = g.value(fm_second_order(g, g.input(ep)));
    const auto& pr_a = g.value(g.pairwise_inner(g.input(e)));
    const auto& pr_b = g.value(g.pairwise_inner(g.input(ep)));
    int pairs = m * (m - 1) / 2;
    for (int n = 0; n < b; ++n) {
      CHECK(std::abs(fm_a[n] - fm_b[n]) <= 1e-5);
      std::vector<float> sa(pr_a.begin() + n * pairs, pr_a.begin() + (n + 1) * pairs);
      std::vector<float> sb(pr_b.begin() + n * pairs, pr_b.begin() + (n + 1) * pairs);
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      for (int q = 0; q < pairs; ++q) CHECK(std::abs(sa[q] - sb[q]) <= 1e-6);
    }
  }
}

TEST_CASE("cin layer: hand cases and triple-loop oracle") {
  Tensor x0 = Tensor::from({1, 2, 2}, {1, 2, 3, 4});
  {
    Graph g;
    NodeId x = g.input(x0);
    NodeId out = g.cin_interact(x, x, g.input(Tensor::from({1, 2, 2}, {1, 1, 1, 1})));
    CHECK(g.value(out)[0] == doctest::Approx(16.0));  // (1+3)^2
    CHECK(g.value(out)[1] == doctest::Approx(36.0));  // (2+4)^2
  }
  {
    Graph g;
    NodeId x = g.input(x0);
    NodeId out = g.cin_interact(x, x, g.input(Tensor::zeros({1, 2, 2})));
    for (float v : g.value(out)) CHECK(v == 0.0f);
  }
  {
    Graph g;
    NodeId x = g.input(x0);
    NodeId out = g.cin_interact(x, x, g.input(Tensor::from({1, 2, 2}, {1, 0, 0, 0})));
    CHECK(g.value(out)[0] == doctest::Approx(1.0));  // X_prev[0] o X0[0]
    CHECK(g.value(out)[1] == doctest::Approx(4.0));
  }
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(303, seed));
    int b = 1 + static_cast<int>(rng.below(3));
    int m = 1 + static_cast<int>(rng.below(6));
    int k = 1 + static_cast<int>(rng.below(8));
    int hp = 1 + static_cast<int>(rng.below(5));
    int ho = 1 + static_cast<int>(rng.below(5));
    Tensor xp = Tensor::randn({b, hp, k}, rng, 1.0);
    Tensor xz = Tensor::randn({b, m, k}, rng, 1.0);
    Tensor w = Tensor::randn({ho, hp, m}, rng, 1.0);
    Graph g;
    NodeId out = g.cin_interact(g.input(xp), g.input(xz), g.input(w));
    auto want = cin_naive(xp.vec(), xz.vec(), w.vec(), b, hp, m, k, ho);
    const auto& got = g.value(out);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-5);

    // Sum pooling over the embedding dim matches the oracle's row sums.
    const auto& pooled = g.value(g.sum_axis(out, 2));
    for (int n = 0; n < b; ++n)
      for (int h = 0; h < ho; ++h) {
        double rs = 0.0;
        for (int d = 0; d < k; ++d) rs += want[(static_cast<size_t>(n) * ho + h) * k + d];
        CHECK(std::abs(pooled[n * ho + h] - rs) <= 1e-4);
      }
  }
}

TEST_CASE("pnn: product vector length, zero collapse, gradients") {
  auto space3 = cat_only_space();
  Model model(tiny_cfg("pnn"), space3, 42);
  auto batch = rand_batch(space3, 2, 7);
  Graph g;
  auto info = model.forward(g, batch);
  CHECK(g.shape(info.product) == std::vector<int>{2, 3});  // C(3,2) products
  CHECK(g.shape(info.logits) == std::vector<int>{2, 1});

  zero_params(model);
  for (double v : model.predict(batch)) CHECK(v == 0.5);

  auto space = small_space();
  Model m5(tiny_cfg("pnn"), space, 1);
  Graph g5;
  auto i5 = m5.forward(g5, rand_batch(space, 2, 8));
  CHECK(g5.shape(i5.product) == std::vector<int>{2, 10});  // C(5,2)

  for (uint64_t seed = 1; seed <= 3; ++seed) {
    auto rep = check_model("pnn", space, seed);
    INFO("pnn seed ", seed, " max rel err ", rep.max_rel_err);
    CHECK(rep.pass);
  }
}

TEST_CASE("deepfm: bias collapse, shared embeddings, gradients") {
  auto space = small_space();
  Model model(tiny_cfg("deepfm"), space, 11);
  auto batch = rand_batch(space, 3, 12);

  zero_params(model);
  model.params().at("first_order.bias").vec()[0] = 0.7f;
  for (double v : model.predict(batch))
    CHECK(v == doctest::Approx(sigmoid_d(0.7)).epsilon(1e-6));

  // Same embedding table feeds the FM term and the deep term: gradients of
  // either component alone with respect to it are nonzero.
  Model shared(tiny_cfg("deepfm"), space, 13);
  Graph g;
  auto info = shared.forward(g, batch);
  auto g_fm = g.backward(g.sum_all(info.fm_term));
  auto g_deep = g.backward(g.sum_all(info.deep_term));
  double n_fm = 0.0, n_deep = 0.0;
  for (float v : g_fm.at("embed.user_id").vec()) n_fm += std::abs(v);
  for (float v : g_deep.at("embed.user_id").vec()) n_deep += std::abs(v);
  CHECK(n_fm > 0.0);
  CHECK(n_deep > 0.0);

  for (uint64_t seed = 1; seed <= 3; ++seed) {
    auto rep = check_model("deepfm", space, seed);
    INFO("deepfm seed ", seed, " max rel err ", rep.max_rel_err);
    CHECK(rep.pass);
  }
}

TEST_CASE("xdeepfm: zero collapse, cin term wiring, gradients") {
  auto space = small_space();
  auto cfg = tiny_cfg("xdeepfm");
  Model model(cfg, space, 21);
  auto batch = rand_batch(space, 3, 22);

  {
    Model zeroed(cfg, space, 23);
    zero_params(zeroed);
    for (double v : zeroed.predict(batch)) CHECK(v == 0.5);
  }

  // cin_term == concat of per-layer pooled vectors dotted with head.cin_W,
  // recomputed here from raw parameters through the triple-loop oracle.
  Graph g;
  auto info = model.forward(g, batch);
  int b = static_cast<int>(batch.size());
  int m = static_cast<int>(model.cat_fields().size());
  int k = cfg.embedding_dim;
  const auto& emb = g.value(info.embeddings);
  std::vector<float> x_prev(emb.begin(), emb.end());
  int hp = m;
  std::vector<std::vector<double>> pooled_layers;
  for (size_t l = 0; l < cfg.cin_layers.size(); ++l) {
    int ho = cfg.cin_layers[l];
    const auto& w = model.params().at("cin." + std::to_string(l) + ".W").vec();
    auto next = cin_naive(x_prev, emb, w, b, hp, m, k, ho);
    std::vector<double> pooled(static_cast<size_t>(b) * ho, 0.0);
    for (int n = 0; n < b; ++n)
      for (int h = 0; h < ho; ++h)
        for (int d = 0; d < k; ++d)
          pooled[n * ho + h] += next[(static_cast<size_t>(n) * ho + h) * k + d];
    pooled_layers.push_back(std::move(pooled));
    x_prev.assign(next.size(), 0.0f);
    for (size_t i = 0; i < next.size(); ++i) x_prev[i] = static_cast<float>(next[i]);
    hp = ho;
  }
  const auto& cin_w = model.params().at("head.cin_W").vec();
  const auto& got = g.value(info.cin_term);
  for (int n = 0; n < b; ++n) {
    double z = 0.0;
    size_t off = 0;
    for (size_t l = 0; l < pooled_layers.size(); ++l) {
      int ho = cfg.cin_layers[l];
      for (int h = 0; h < ho; ++h) z += pooled_layers[l][n * ho + h] * cin_w[off + h];
      off += static_cast<size_t>(ho);
    }
    CHECK(std::abs(got[n] - z) <= 1e-4);
  }

  for (uint64_t seed = 1; seed <= 3; ++seed) {
    auto rep = check_model("xdeepfm", space, seed);
    INFO("xdeepfm seed ", seed, " max rel err ", rep.max_rel_err);
    CHECK(rep.pass);
  }
}

TEST_CASE("self attention: row normalization, symmetry, single field") {
  Rng rng(404);
  auto make_params = [&](Graph& g, int k, int dh, int heads) {
    AttentionParams p;
    for (int h = 0; h < heads; ++h) {
      p.wq.push_back(g.param("q" + std::to_string(h), Tensor::randn({k, dh}, rng, 0.5)));
      p.wk.push_back(g.param("k" + std::to_string(h), Tensor::randn({k, dh}, rng, 0.5)));
      p.wv.push_back(g.param("v" + std::to_string(h), Tensor::randn({k, dh}, rng, 0.5)));
    }
    return p;
  };

  {
    Graph g;
    auto p = make_params(g, 3, 4, 2);
    NodeId e = g.input(Tensor::randn({2, 4, 3}, rng, 1.0));
    auto att = self_attention(g, e, p);
    CHECK(g.shape(att.out) == std::vector<int>{2, 4, 8});
    for (NodeId probs : att.probs) {
      const auto& v = g.value(probs);
      for (int row = 0; row < 2 * 4; ++row) {
        double s = 0.0;
        for (int c = 0; c < 4; ++c) s += v[row * 4 + c];
        CHECK(std::abs(s - 1.0) <= 1e-6);
      }
    }
  }
  {
    // All field embeddings identical: weights uniform, outputs identical.
    Graph g;
    auto p = make_params(g, 3, 4, 1);
    Tensor e = Tensor::zeros({1, 4, 3});
    for (int i = 0; i < 4; ++i)
      for (int d = 0; d < 3; ++d) e.at(0, i, d) = 0.3f * static_cast<float>(d) - 0.2f;
    auto att = self_attention(g, g.input(e), p);
    for (float w : g.value(att.probs[0])) CHECK(w == doctest::Approx(0.25).epsilon(1e-6));
    const auto& out = g.value(att.out);
    for (int i = 1; i < 4; ++i)
      for (int d = 0; d < 4; ++d)
        CHECK(out[i * 4 + d] == doctest::Approx(out[d]).epsilon(1e-6));
  }
  {
    // m=1: degenerate softmax gives weight exactly 1; output is the value
    // projection of the single field.
    Graph g;
    auto p = make_params(g, 3, 4, 1);
    Tensor e = Tensor::from({1, 1, 3}, {0.5f, -1.0f, 2.0f});
    auto att = self_attention(g, g.input(e), p);
    CHECK(g.value(att.probs[0])[0] == 1.0f);
    NodeId v_ref = g.matmul(g.reshape(g.input(e), {1, 3}), p.wv[0]);
    const auto& want = g.value(v_ref);
    const auto& got = g.value(att.out);
    for (int d = 0; d < 4; ++d) CHECK(got[d] == doctest::Approx(want[d]).epsilon(1e-6));
  }
}

TEST_CASE("difm: identity factors give plain fm, zero factors give bias") {
  auto space = small_space();
  auto cfg = tiny_cfg("difm");
  Model model(cfg, space, 31);
  auto batch = rand_batch(space, 3, 32);

  auto force_factors = [&](Model& mo, float value) {
    auto& pb = mo.params().at("fen_bit.proj.b").vec();
    std::fill(pb.begin(), pb.end(), value);
    auto& pw = mo.params().at("fen_bit.proj.W").vec();
    std::fill(pw.begin(), pw.end(), 0.0f);
    auto& vw = mo.params().at("fen_vec.proj.W").vec();
    std::fill(vw.begin(), vw.end(), 0.0f);
    auto& vb = mo.params().at("fen_vec.proj.b").vec();
    std::fill(vb.begin(), vb.end(), 0.0f);
  };

  {
    Model ident(cfg, space, 33);
    force_factors(ident, 1.0f);
    Graph g;
    auto info = ident.forward(g, batch);
    for (float f : g.value(info.factors)) CHECK(f == 1.0f);

    // Plain FM oracle in double from the raw parameters.
    int m = static_cast<int>(ident.cat_fields().size());
    int k = cfg.embedding_dim;
    auto probs = ident.predict(batch);
    for (size_t n = 0; n < batch.size(); ++n) {
      double z = static_cast<double>(ident.params().at("first_order.bias").vec()[0]);
      std::vector<double> rows(static_cast<size_t>(m) * k);
      for (int f = 0; f < m; ++f) {
        int32_t row = batch.idx[static_cast<size_t>(f)][n];
        const auto& field = ident.cat_fields()[static_cast<size_t>(f)];
        const auto& w1 = ident.params().at("first_order." + field);
        z += static_cast<double>(w1.vec()[static_cast<size_t>(row)]);
        const auto& et = ident.params().at("embed." + field);
        for (int d = 0; d < k; ++d) rows[static_cast<size_t>(f * k + d)] = et.at(row, d);
      }
      const auto& wn = ident.params().at("first_order.numeric").vec();
      for (size_t f = 0; f < batch.num.size(); ++f)
        z += static_cast<double>(wn[f]) * static_cast<double>(batch.num[f][n]);
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
          for (int d = 0; d < k; ++d) z += rows[static_cast<size_t>(i * k + d)] * rows[static_cast<size_t>(j * k + d)];
      CHECK(probs[n] == doctest::Approx(sigmoid_d(z)).epsilon(1e-5));
    }
  }
  {
    Model dead(cfg, space, 34);
    force_factors(dead, 0.0f);
    auto& wn = dead.params().at("first_order.numeric").vec();
    std::fill(wn.begin(), wn.end(), 0.0f);
    dead.params().at("first_order.bias").vec()[0] = -0.3f;
    Graph g;
    auto info = dead.forward(g, batch);
    for (float f : g.value(info.factors)) CHECK(f == 0.0f);
    for (double v : dead.predict(batch))
      CHECK(v == doctest::Approx(sigmoid_d(-0.3)).epsilon(1e-6));
  }

  for (uint64_t seed = 1; seed <= 3; ++seed) {
    auto rep = check_model("difm", space, seed);
    INFO("difm seed ", seed, " max rel err ", rep.max_rel_err);
    CHECK(rep.pass);
  }
}

TEST_CASE("all architectures emit probabilities strictly inside (0,1)") {
  auto space = small_space();
  for (const auto& arch : ModelConfig::known_architectures()) {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      Model model(tiny_cfg(arch), space, seed);
      auto probs = model.predict(rand_batch(space, 4, mix_seed(seed, 50)));
      for (double v : probs) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
  // Saturated logits clamp to the open interval instead of touching 0/1.
  Model hot(tiny_cfg("deepfm"), space, 3);
  zero_params(hot);
  hot.params().at("first_order.bias").vec()[0] = 100.0f;
  auto batch = rand_batch(space, 2, 51);
  for (double v : hot.predict(batch)) CHECK(v == 1.0 - 1e-7);
  hot.params().at("first_order.bias").vec()[0] = -100.0f;
  for (double v : hot.predict(batch)) CHECK(v == 1e-7);
}

TEST_CASE("model init is seed-deterministic and checkpoint maps are validated") {
  auto space = small_space();
  Model a(tiny_cfg("difm"), space, 77);
  Model b(tiny_cfg("difm"), space, 77);
  Model c(tiny_cfg("difm"), space, 78);
  bool same = true, differ = false;
  for (const auto& [name, t] : a.params()) {
    same = same && t.vec() == b.params().at(name).vec();
    differ = differ || t.vec() != c.params().at(name).vec();
  }
  CHECK(same);
  CHECK(differ);

  ParamMap good = a.params();
  CHECK_NOTHROW(Model(tiny_cfg("difm"), space, good));
  ParamMap missing = good;
  missing.erase("fen_bit.proj.b");
  CHECK_THROWS_AS(Model(tiny_cfg("difm"), space, missing), ContractViolation);
  ParamMap extra = good;
  extra["stray"] = Tensor::zeros({1});
  CHECK_THROWS_AS(Model(tiny_cfg("difm"), space, extra), ContractViolation);
  ParamMap bad_shape = good;
  bad_shape["fen_bit.proj.b"] = Tensor::zeros({2});
  CHECK_THROWS_AS(Model(tiny_cfg("difm"), space, bad_shape), ContractViolation);

  auto batch = rand_batch(space, 2, 9);
  Graph g;
  Model three(tiny_cfg("pnn"), cat_only_space(), 1);
  CHECK_THROWS_AS(three.forward(g, batch), ContractViolation);  // five-field batch
}
