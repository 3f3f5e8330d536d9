#include "ctrforge/graph.hpp"

#include <cmath>
#include <cstring>
#include <set>

#include "ctrforge/errors.hpp"

namespace ctrforge {
namespace {

size_t elems(const std::vector<int>& shape) { return shape_size(shape); }

// Product of all extents except the last; 1 for rank-1 shapes.
size_t lead(const std::vector<int>& shape) {
  size_t n = 1;
  for (size_t i = 0; i + 1 < shape.size(); ++i) n *= static_cast<size_t>(shape[i]);
  return n;
}

int last(const std::vector<int>& shape) { return shape.back(); }

template <typename T>
void matmul_block(const T* a, const T* b, T* out, int r, int c, int q) {
  std::memset(out, 0, sizeof(T) * static_cast<size_t>(r) * static_cast<size_t>(q));
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < c; ++k) {
      T av = a[i * c + k];
      const T* brow = b + k * q;
      T* orow = out + i * q;
      for (int j = 0; j < q; ++j) orow[j] += av * brow[j];
    }
  }
}

// Forward kernel for one node. `in` holds the input buffers, `ish` their
// shapes. All shape validation happened at record time.
template <typename T>
std::vector<T> eval_op(const Node& n, const std::vector<const std::vector<T>*>& in,
                       const std::vector<const std::vector<int>*>& ish) {
  std::vector<T> out(elems(n.shape));
  switch (n.op) {
    case Op::kInput:
    case Op::kParam:
      throw ContractViolation("eval_op on leaf node");
    case Op::kMatmul: {
      int r = (*ish[0])[0], c = (*ish[0])[1], q = (*ish[1])[1];
      matmul_block(in[0]->data(), in[1]->data(), out.data(), r, c, q);
      break;
    }
    case Op::kBmm: {
      int b = (*ish[0])[0], m = (*ish[0])[1], k = (*ish[0])[2], p = (*ish[1])[2];
      for (int bi = 0; bi < b; ++bi) {
        matmul_block(in[0]->data() + static_cast<size_t>(bi) * m * k,
                     in[1]->data() + static_cast<size_t>(bi) * k * p,
                     out.data() + static_cast<size_t>(bi) * m * p, m, k, p);
      }
      break;
    }
    case Op::kTransposeLast2: {
      int b = (*ish[0])[0], m = (*ish[0])[1], k = (*ish[0])[2];
      for (int bi = 0; bi < b; ++bi) {
        const T* src = in[0]->data() + static_cast<size_t>(bi) * m * k;
        T* dst = out.data() + static_cast<size_t>(bi) * m * k;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < k; ++j) dst[j * m + i] = src[i * k + j];
      }
      break;
    }
    case Op::kAdd:
      for (size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] + (*in[1])[i];
      break;
    case Op::kSub:
      for (size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] - (*in[1])[i];
      break;
    case Op::kMul:
      for (size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * (*in[1])[i];
      break;
    case Op::kBiasAdd: {
      size_t r = lead(n.shape);
      int c = last(n.shape);
      for (size_t i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[i * c + j] = (*in[0])[i * c + j] + (*in[1])[j];
      break;
    }
    case Op::kScale: {
      T c = static_cast<T>(n.fattr);
      for (size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * c;
      break;
    }
    case Op::kRelu:
      for (size_t i = 0; i < out.size(); ++i) {
        T x = (*in[0])[i];
        out[i] = x > T(0) ? x : T(0);
      }
      break;
    case Op::kTanh:
      for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh((*in[0])[i]);
      break;
    case Op::kSigmoid:
      for (size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-(*in[0])[i]));
      break;
    case Op::kSquare:
      for (size_t i = 0; i < out.size(); ++i) out[i] = (*in[0])[i] * (*in[0])[i];
      break;
    case Op::kSoftmax: {
      size_t r = lead(n.shape);
      int c = last(n.shape);
      for (size_t i = 0; i < r; ++i) {
        const T* row = in[0]->data() + i * c;
        T* orow = out.data() + i * c;
        T mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < c; ++j) {
          orow[j] = std::exp(row[j] - mx);
          denom += static_cast<double>(orow[j]);
        }
        for (int j = 0; j < c; ++j) orow[j] = static_cast<T>(static_cast<double>(orow[j]) / denom);
      }
      break;
    }
    case Op::kDropout: {
      T scale = T(1) / static_cast<T>(n.fattr);
      for (size_t i = 0; i < out.size(); ++i)
        out[i] = n.mask[i] ? (*in[0])[i] * scale : T(0);
      break;
    }
    case Op::kGather: {
      int k = last(*ish[0]);
      for (size_t b = 0; b < n.indices.size(); ++b) {
        const T* src = in[0]->data() + static_cast<size_t>(n.indices[b]) * k;
        std::copy(src, src + k, out.data() + b * k);
      }
      break;
    }
    case Op::kStackFields: {
      int b = n.shape[0], f = n.shape[1], k = n.shape[2];
      for (int fi = 0; fi < f; ++fi)
        for (int bi = 0; bi < b; ++bi)
          std::copy(in[fi]->data() + static_cast<size_t>(bi) * k,
                    in[fi]->data() + static_cast<size_t>(bi) * k + k,
                    out.data() + (static_cast<size_t>(bi) * f + fi) * k);
      break;
    }
    case Op::kConcat: {
      size_t r = lead(n.shape);
      int ctot = last(n.shape);
      int off = 0;
      for (size_t pi = 0; pi < in.size(); ++pi) {
        int c = last(*ish[pi]);
        for (size_t i = 0; i < r; ++i)
          std::copy(in[pi]->data() + i * c, in[pi]->data() + i * c + c,
                    out.data() + i * ctot + off);
        off += c;
      }
      break;
    }
    case Op::kSlice: {
      size_t r = lead(n.shape);
      int cin = last(*ish[0]);
      int start = n.iattrs[0], len = n.iattrs[1];
      for (size_t i = 0; i < r; ++i)
        std::copy(in[0]->data() + i * cin + start, in[0]->data() + i * cin + start + len,
                  out.data() + i * len);
      break;
    }
    case Op::kReshape:
      std::copy(in[0]->begin(), in[0]->end(), out.begin());
      break;
    case Op::kSumAxis: {
      int axis = n.iattrs[0];
      const std::vector<int>& s = *ish[0];
      if (s.size() == 2) {  // axis 1: (r,c) -> (r,1)
        for (int i = 0; i < s[0]; ++i) {
          double acc = 0.0;
          for (int j = 0; j < s[1]; ++j) acc += static_cast<double>((*in[0])[i * s[1] + j]);
          out[i] = static_cast<T>(acc);
        }
      } else if (axis == 1) {  // (b,m,k) -> (b,k)
        int b = s[0], m = s[1], k = s[2];
        std::vector<double> acc(static_cast<size_t>(k));
        for (int bi = 0; bi < b; ++bi) {
          std::fill(acc.begin(), acc.end(), 0.0);
          for (int mi = 0; mi < m; ++mi) {
            const T* row = in[0]->data() + (static_cast<size_t>(bi) * m + mi) * k;
            for (int ki = 0; ki < k; ++ki) acc[ki] += static_cast<double>(row[ki]);
          }
          for (int ki = 0; ki < k; ++ki) out[static_cast<size_t>(bi) * k + ki] = static_cast<T>(acc[ki]);
        }
      } else {  // axis 2: (b,m,k) -> (b,m)
        int b = s[0], m = s[1], k = s[2];
        for (int i = 0; i < b * m; ++i) {
          double acc = 0.0;
          for (int ki = 0; ki < k; ++ki) acc += static_cast<double>((*in[0])[static_cast<size_t>(i) * k + ki]);
          out[i] = static_cast<T>(acc);
        }
      }
      break;
    }
    case Op::kSumAll: {
      double acc = 0.0;
      for (T v : *in[0]) acc += static_cast<double>(v);
      out[0] = static_cast<T>(acc);
      break;
    }
    case Op::kMeanAll: {
      double acc = 0.0;
      for (T v : *in[0]) acc += static_cast<double>(v);
      out[0] = static_cast<T>(acc / static_cast<double>(in[0]->size()));
      break;
    }
    case Op::kPairwiseInner: {
      int b = (*ish[0])[0], m = (*ish[0])[1], k = (*ish[0])[2];
      size_t p = 0;
      for (int bi = 0; bi < b; ++bi) {
        const T* e = in[0]->data() + static_cast<size_t>(bi) * m * k;
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j) {
            T dot = T(0);
            for (int d = 0; d < k; ++d) dot += e[i * k + d] * e[j * k + d];
            out[p++] = dot;
          }
      }
      break;
    }
    case Op::kCinInteract: {
      int b = (*ish[0])[0], h = (*ish[0])[1], k = (*ish[0])[2];
      int m = (*ish[1])[1];
      int ho = (*ish[2])[0];
      const T* w = in[2]->data();
      for (int bi = 0; bi < b; ++bi) {
        const T* xp = in[0]->data() + static_cast<size_t>(bi) * h * k;
        const T* x0 = in[1]->data() + static_cast<size_t>(bi) * m * k;
        for (int hi = 0; hi < ho; ++hi) {
          T* orow = out.data() + (static_cast<size_t>(bi) * ho + hi) * k;
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < m; ++j) {
              T wv = w[(static_cast<size_t>(hi) * h + i) * m + j];
              const T* xpr = xp + static_cast<size_t>(i) * k;
              const T* x0r = x0 + static_cast<size_t>(j) * k;
              for (int d = 0; d < k; ++d) orow[d] += wv * xpr[d] * x0r[d];
            }
        }
      }
      break;
    }
    case Op::kRowScale: {
      int b = (*ish[0])[0], m = (*ish[0])[1], k = (*ish[0])[2];
      for (int bi = 0; bi < b; ++bi)
        for (int mi = 0; mi < m; ++mi) {
          T a = (*in[1])[static_cast<size_t>(bi) * m + mi];
          const T* src = in[0]->data() + (static_cast<size_t>(bi) * m + mi) * k;
          T* dst = out.data() + (static_cast<size_t>(bi) * m + mi) * k;
          for (int d = 0; d < k; ++d) dst[d] = src[d] * a;
        }
      break;
    }
    case Op::kBceWithLogits: {
      size_t b = in[0]->size();
      double acc = 0.0;
      for (size_t i = 0; i < b; ++i) {
        double z = static_cast<double>((*in[0])[i]);
        double y = static_cast<double>((*in[1])[i]);
        acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
      }
      out[0] = static_cast<T>(acc / static_cast<double>(b));
      break;
    }
  }
  return out;
}

}  // namespace

Graph::Graph(bool training, uint64_t dropout_seed)
    : mask_rng_(mix_seed(dropout_seed, 0x64726f70ULL)), training_(training) {}

NodeId Graph::push(Node n) {
  if (n.op != Op::kInput && n.op != Op::kParam) compute(n);
  contract(n.value.size() == elems(n.shape), "node value size mismatch");
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Graph::compute(Node& n) const {
  std::vector<const std::vector<float>*> in;
  std::vector<const std::vector<int>*> ish;
  in.reserve(n.inputs.size());
  ish.reserve(n.inputs.size());
  for (NodeId id : n.inputs) {
    in.push_back(&nodes_[static_cast<size_t>(id)].value);
    ish.push_back(&nodes_[static_cast<size_t>(id)].shape);
  }
  n.value = eval_op<float>(n, in, ish);
}

NodeId Graph::input(const Tensor& t) {
  Node n;
  n.op = Op::kInput;
  n.shape = t.shape();
  n.value = t.vec();
  return push(std::move(n));
}

NodeId Graph::param(const std::string& name, const Tensor& t) {
  contract(!name.empty(), "parameter name empty");
  for (const auto& p : params_) contract(p.first != name, "duplicate parameter name: " + name);
  Node n;
  n.op = Op::kParam;
  n.shape = t.shape();
  n.value = t.vec();
  n.param_name = name;
  NodeId id = push(std::move(n));
  params_.emplace_back(name, id);
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const auto& sa = shape(a);
  const auto& sb = shape(b);
  contract(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0],
           "matmul shape mismatch: " + shape_to_string(sa) + " x " + shape_to_string(sb));
  Node n;
  n.op = Op::kMatmul;
  n.shape = {sa[0], sb[1]};
  n.inputs = {a, b};
  return push(std::move(n));
}

NodeId Graph::bmm(NodeId a, NodeId b) {
  const auto& sa = shape(a);
  const auto& sb = shape(b);
  contract(sa.size() == 3 && sb.size() == 3 && sa[0] == sb[0] && sa[2] == sb[1],
           "bmm shape mismatch: " + shape_to_string(sa) + " x " + shape_to_string(sb));
  Node n;
  n.op = Op::kBmm;
  n.shape = {sa[0], sa[1], sb[2]};
  n.inputs = {a, b};
  return push(std::move(n));
}

NodeId Graph::transpose_last2(NodeId a) {
  const auto& s = shape(a);
  contract(s.size() == 3, "transpose_last2 expects rank 3");
  Node n;
  n.op = Op::kTransposeLast2;
  n.shape = {s[0], s[2], s[1]};
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  contract(shape(a) == shape(b), "add shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.shape = shape(a);
  n.inputs = {a, b};
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  contract(shape(a) == shape(b), "sub shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.shape = shape(a);
  n.inputs = {a, b};
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  contract(shape(a) == shape(b), "mul shape mismatch");
  Node n;
  n.op = Op::kMul;
  n.shape = shape(a);
  n.inputs = {a, b};
  return push(std::move(n));
}

NodeId Graph::bias_add(NodeId x, NodeId b) {
  const auto& sx = shape(x);
  const auto& sb = shape(b);
  contract(sb.size() == 1 && sb[0] == last(sx), "bias_add shape mismatch");
  Node n;
  n.op = Op::kBiasAdd;
  n.shape = sx;
  n.inputs = {x, b};
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, float c) {
  Node n;
  n.op = Op::kScale;
  n.shape = shape(a);
  n.inputs = {a};
  n.fattr = c;
  return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
  Node n;
  n.op = Op::kRelu;
  n.shape = shape(a);
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  Node n;
  n.op = Op::kTanh;
  n.shape = shape(a);
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.shape = shape(a);
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::square(NodeId a) {
  Node n;
  n.op = Op::kSquare;
  n.shape = shape(a);
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId a) {
  contract(shape(a).size() >= 2, "softmax expects rank >= 2");
  Node n;
  n.op = Op::kSoftmax;
  n.shape = shape(a);
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::dropout(NodeId a, float rate) {
  contract(rate >= 0.0f && rate < 1.0f, "dropout rate must be in [0,1)");
  if (!training_ || rate == 0.0f) return a;  // identity outside training
  Node n;
  n.op = Op::kDropout;
  n.shape = shape(a);
  n.inputs = {a};
  n.fattr = 1.0f - rate;
  n.mask.resize(elems(n.shape));
  for (auto& m : n.mask) m = mask_rng_.uniform() >= static_cast<double>(rate) ? 1 : 0;
  return push(std::move(n));
}

NodeId Graph::gather(NodeId table, const std::vector<int32_t>& rows) {
  const auto& s = shape(table);
  contract(s.size() == 2, "gather table must be rank 2");
  contract(!rows.empty(), "gather with empty index list");
  for (int32_t r : rows)
    contract(r >= 0 && r < s[0], "gather index out of range");
  Node n;
  n.op = Op::kGather;
  n.shape = {static_cast<int>(rows.size()), s[1]};
  n.inputs = {table};
  n.indices = rows;
  return push(std::move(n));
}

NodeId Graph::stack_fields(const std::vector<NodeId>& fields) {
  contract(!fields.empty(), "stack_fields with no inputs");
  const auto& s0 = shape(fields[0]);
  contract(s0.size() == 2, "stack_fields expects rank-2 inputs");
  for (NodeId f : fields) contract(shape(f) == s0, "stack_fields shape mismatch");
  Node n;
  n.op = Op::kStackFields;
  n.shape = {s0[0], static_cast<int>(fields.size()), s0[1]};
  n.inputs = fields;
  return push(std::move(n));
}

NodeId Graph::concat(const std::vector<NodeId>& parts) {
  contract(!parts.empty(), "concat with no inputs");
  const auto& s0 = shape(parts[0]);
  int ctot = 0;
  for (NodeId p : parts) {
    const auto& s = shape(p);
    contract(s.size() == s0.size(), "concat rank mismatch");
    for (size_t i = 0; i + 1 < s.size(); ++i)
      contract(s[i] == s0[i], "concat leading dim mismatch");
    ctot += last(s);
  }
  Node n;
  n.op = Op::kConcat;
  n.shape = s0;
  n.shape.back() = ctot;
  n.inputs = parts;
  return push(std::move(n));
}

NodeId Graph::slice_last(NodeId a, int start, int len) {
  const auto& s = shape(a);
  contract(start >= 0 && len > 0 && start + len <= last(s), "slice out of range");
  Node n;
  n.op = Op::kSlice;
  n.shape = s;
  n.shape.back() = len;
  n.inputs = {a};
  n.iattrs = {start, len};
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId a, std::vector<int> shape_out) {
  contract(static_cast<size_t>(shape_size(shape_out)) == elems(shape(a)),
           "reshape element count mismatch");
  Node n;
  n.op = Op::kReshape;
  n.shape = std::move(shape_out);
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::sum_axis(NodeId a, int axis) {
  const auto& s = shape(a);
  contract((s.size() == 2 && axis == 1) || (s.size() == 3 && (axis == 1 || axis == 2)),
           "sum_axis supports rank-2 axis 1 and rank-3 axes 1,2");
  Node n;
  n.op = Op::kSumAxis;
  if (s.size() == 2)
    n.shape = {s[0], 1};
  else if (axis == 1)
    n.shape = {s[0], s[2]};
  else
    n.shape = {s[0], s[1]};
  n.inputs = {a};
  n.iattrs = {axis};
  return push(std::move(n));
}

NodeId Graph::sum_all(NodeId a) {
  Node n;
  n.op = Op::kSumAll;
  n.shape = {1};
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::mean_all(NodeId a) {
  Node n;
  n.op = Op::kMeanAll;
  n.shape = {1};
  n.inputs = {a};
  return push(std::move(n));
}

NodeId Graph::pairwise_inner(NodeId e) {
  const auto& s = shape(e);
  contract(s.size() == 3 && s[1] >= 2, "pairwise_inner expects (B,m,k) with m >= 2");
  Node n;
  n.op = Op::kPairwiseInner;
  n.shape = {s[0], s[1] * (s[1] - 1) / 2};
  n.inputs = {e};
  return push(std::move(n));
}

NodeId Graph::cin_interact(NodeId x_prev, NodeId x0, NodeId w) {
  const auto& sp = shape(x_prev);
  const auto& s0 = shape(x0);
  const auto& sw = shape(w);
  contract(sp.size() == 3 && s0.size() == 3 && sw.size() == 3, "cin_interact expects rank-3 inputs");
  contract(sp[0] == s0[0] && sp[2] == s0[2], "cin_interact batch/dim mismatch");
  contract(sw[1] == sp[1] && sw[2] == s0[1], "cin_interact weight shape mismatch");
  Node n;
  n.op = Op::kCinInteract;
  n.shape = {sp[0], sw[0], sp[2]};
  n.inputs = {x_prev, x0, w};
  return push(std::move(n));
}

NodeId Graph::row_scale(NodeId e, NodeId a) {
  const auto& se = shape(e);
  const auto& sa = shape(a);
  contract(se.size() == 3 && sa.size() == 2 && se[0] == sa[0] && se[1] == sa[1],
           "row_scale shape mismatch");
  Node n;
  n.op = Op::kRowScale;
  n.shape = se;
  n.inputs = {e, a};
  return push(std::move(n));
}

NodeId Graph::bce_with_logits(NodeId logits, NodeId labels) {
  contract(shape(logits) == shape(labels), "bce_with_logits shape mismatch");
  contract(last(shape(logits)) == 1 || shape(logits).size() == 1,
           "bce_with_logits expects one logit per example");
  Node n;
  n.op = Op::kBceWithLogits;
  n.shape = {1};
  n.inputs = {logits, labels};
  return push(std::move(n));
}

Tensor Graph::value_tensor(NodeId id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return Tensor::from_vec(n.shape, n.value);
}

GradMap Graph::backward(NodeId loss) const {
  contract(loss >= 0 && loss < num_nodes(), "backward target out of range");
  contract(elems(shape(loss)) == 1, "backward requires a scalar loss");

  std::vector<std::vector<float>> grads(nodes_.size());
  grads[static_cast<size_t>(loss)] = {1.0f};

  auto ensure = [&](NodeId id) -> std::vector<float>& {
    auto& g = grads[static_cast<size_t>(id)];
    if (g.empty()) g.assign(elems(nodes_[static_cast<size_t>(id)].shape), 0.0f);
    return g;
  };

  for (NodeId nid = loss; nid >= 0; --nid) {
    const Node& n = nodes_[static_cast<size_t>(nid)];
    const auto& g = grads[static_cast<size_t>(nid)];
    if (g.empty() || n.op == Op::kInput || n.op == Op::kParam) continue;

    auto in_val = [&](int i) -> const std::vector<float>& {
      return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(i)])].value;
    };
    auto in_shape = [&](int i) -> const std::vector<int>& {
      return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(i)])].shape;
    };

    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;
      case Op::kMatmul: {
        int r = in_shape(0)[0], c = in_shape(0)[1], q = in_shape(1)[1];
        auto& da = ensure(n.inputs[0]);
        auto& db = ensure(n.inputs[1]);
        const auto& a = in_val(0);
        const auto& b = in_val(1);
        for (int i = 0; i < r; ++i)
          for (int k = 0; k < c; ++k) {
            float acc = 0.0f;
            const float* grow = g.data() + static_cast<size_t>(i) * q;
            const float* brow = b.data() + static_cast<size_t>(k) * q;
            for (int j = 0; j < q; ++j) acc += grow[j] * brow[j];
            da[static_cast<size_t>(i) * c + k] += acc;
          }
        for (int k = 0; k < c; ++k)
          for (int i = 0; i < r; ++i) {
            float av = a[static_cast<size_t>(i) * c + k];
            const float* grow = g.data() + static_cast<size_t>(i) * q;
            float* dbrow = db.data() + static_cast<size_t>(k) * q;
            for (int j = 0; j < q; ++j) dbrow[j] += av * grow[j];
          }
        break;
      }
      case Op::kBmm: {
        int bb = in_shape(0)[0], m = in_shape(0)[1], k = in_shape(0)[2], p = in_shape(1)[2];
        auto& da = ensure(n.inputs[0]);
        auto& db = ensure(n.inputs[1]);
        const auto& a = in_val(0);
        const auto& b = in_val(1);
        for (int bi = 0; bi < bb; ++bi) {
          const float* ab = a.data() + static_cast<size_t>(bi) * m * k;
          const float* bbuf = b.data() + static_cast<size_t>(bi) * k * p;
          const float* gb = g.data() + static_cast<size_t>(bi) * m * p;
          float* dab = da.data() + static_cast<size_t>(bi) * m * k;
          float* dbb = db.data() + static_cast<size_t>(bi) * k * p;
          for (int i = 0; i < m; ++i)
            for (int kk = 0; kk < k; ++kk) {
              float acc = 0.0f;
              for (int j = 0; j < p; ++j) acc += gb[i * p + j] * bbuf[kk * p + j];
              dab[i * k + kk] += acc;
            }
          for (int kk = 0; kk < k; ++kk)
            for (int i = 0; i < m; ++i) {
              float av = ab[i * k + kk];
              for (int j = 0; j < p; ++j) dbb[kk * p + j] += av * gb[i * p + j];
            }
        }
        break;
      }
      case Op::kTransposeLast2: {
        int b = in_shape(0)[0], m = in_shape(0)[1], k = in_shape(0)[2];
        auto& da = ensure(n.inputs[0]);
        for (int bi = 0; bi < b; ++bi)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < k; ++j)
              da[(static_cast<size_t>(bi) * m + i) * k + j] +=
                  g[(static_cast<size_t>(bi) * k + j) * m + i];
        break;
      }
      case Op::kAdd: {
        auto& da = ensure(n.inputs[0]);
        auto& db = ensure(n.inputs[1]);
        for (size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i];
          db[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        auto& da = ensure(n.inputs[0]);
        auto& db = ensure(n.inputs[1]);
        for (size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i];
          db[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        auto& da = ensure(n.inputs[0]);
        auto& db = ensure(n.inputs[1]);
        const auto& a = in_val(0);
        const auto& b = in_val(1);
        for (size_t i = 0; i < g.size(); ++i) {
          da[i] += g[i] * b[i];
          db[i] += g[i] * a[i];
        }
        break;
      }
      case Op::kBiasAdd: {
        auto& dx = ensure(n.inputs[0]);
        auto& db = ensure(n.inputs[1]);
        size_t r = lead(n.shape);
        int c = last(n.shape);
        for (size_t i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) {
            dx[i * c + j] += g[i * c + j];
            db[static_cast<size_t>(j)] += g[i * c + j];
          }
        break;
      }
      case Op::kScale: {
        auto& da = ensure(n.inputs[0]);
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.fattr;
        break;
      }
      case Op::kRelu: {
        auto& da = ensure(n.inputs[0]);
        const auto& x = in_val(0);
        for (size_t i = 0; i < g.size(); ++i)
          if (x[i] > 0.0f) da[i] += g[i];
        break;
      }
      case Op::kTanh: {
        auto& da = ensure(n.inputs[0]);
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0f - n.value[i] * n.value[i]);
        break;
      }
      case Op::kSigmoid: {
        auto& da = ensure(n.inputs[0]);
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.value[i] * (1.0f - n.value[i]);
        break;
      }
      case Op::kSquare: {
        auto& da = ensure(n.inputs[0]);
        const auto& x = in_val(0);
        for (size_t i = 0; i < g.size(); ++i) da[i] += 2.0f * g[i] * x[i];
        break;
      }
      case Op::kSoftmax: {
        auto& da = ensure(n.inputs[0]);
        size_t r = lead(n.shape);
        int c = last(n.shape);
        for (size_t i = 0; i < r; ++i) {
          double dot = 0.0;
          for (int j = 0; j < c; ++j)
            dot += static_cast<double>(g[i * c + j]) * static_cast<double>(n.value[i * c + j]);
          for (int j = 0; j < c; ++j)
            da[i * c + j] +=
                n.value[i * c + j] * (g[i * c + j] - static_cast<float>(dot));
        }
        break;
      }
      case Op::kDropout: {
        auto& da = ensure(n.inputs[0]);
        float scale = 1.0f / n.fattr;
        for (size_t i = 0; i < g.size(); ++i)
          if (n.mask[i]) da[i] += g[i] * scale;
        break;
      }
      case Op::kGather: {
        auto& dt = ensure(n.inputs[0]);
        int k = in_shape(0)[1];
        for (size_t b = 0; b < n.indices.size(); ++b) {
          float* drow = dt.data() + static_cast<size_t>(n.indices[b]) * k;
          const float* grow = g.data() + b * k;
          for (int j = 0; j < k; ++j) drow[j] += grow[j];
        }
        break;
      }
      case Op::kStackFields: {
        int b = n.shape[0], f = n.shape[1], k = n.shape[2];
        for (int fi = 0; fi < f; ++fi) {
          auto& df = ensure(n.inputs[static_cast<size_t>(fi)]);
          for (int bi = 0; bi < b; ++bi) {
            const float* grow = g.data() + (static_cast<size_t>(bi) * f + fi) * k;
            float* drow = df.data() + static_cast<size_t>(bi) * k;
            for (int j = 0; j < k; ++j) drow[j] += grow[j];
          }
        }
        break;
      }
      case Op::kConcat: {
        size_t r = lead(n.shape);
        int ctot = last(n.shape);
        int off = 0;
        for (size_t pi = 0; pi < n.inputs.size(); ++pi) {
          auto& dp = ensure(n.inputs[pi]);
          int c = last(in_shape(static_cast<int>(pi)));
          for (size_t i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) dp[i * c + j] += g[i * ctot + off + j];
          off += c;
        }
        break;
      }
      case Op::kSlice: {
        auto& da = ensure(n.inputs[0]);
        size_t r = lead(n.shape);
        int cin = last(in_shape(0));
        int start = n.iattrs[0], len = n.iattrs[1];
        for (size_t i = 0; i < r; ++i)
          for (int j = 0; j < len; ++j) da[i * cin + start + j] += g[i * len + j];
        break;
      }
      case Op::kReshape: {
        auto& da = ensure(n.inputs[0]);
        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        break;
      }
      case Op::kSumAxis: {
        auto& da = ensure(n.inputs[0]);
        const auto& s = in_shape(0);
        int axis = n.iattrs[0];
        if (s.size() == 2) {
          for (int i = 0; i < s[0]; ++i)
            for (int j = 0; j < s[1]; ++j) da[static_cast<size_t>(i) * s[1] + j] += g[static_cast<size_t>(i)];
        } else if (axis == 1) {
          int b = s[0], m = s[1], k = s[2];
          for (int bi = 0; bi < b; ++bi)
            for (int mi = 0; mi < m; ++mi)
              for (int ki = 0; ki < k; ++ki)
                da[(static_cast<size_t>(bi) * m + mi) * k + ki] += g[static_cast<size_t>(bi) * k + ki];
        } else {
          int b = s[0], m = s[1], k = s[2];
          for (int i = 0; i < b * m; ++i)
            for (int ki = 0; ki < k; ++ki) da[static_cast<size_t>(i) * k + ki] += g[static_cast<size_t>(i)];
        }
        break;
      }
      case Op::kSumAll: {
        auto& da = ensure(n.inputs[0]);
        for (auto& d : da) d += g[0];
        break;
      }
      case Op::kMeanAll: {
        auto& da = ensure(n.inputs[0]);
        float inv = 1.0f / static_cast<float>(da.size());
        for (auto& d : da) d += g[0] * inv;
        break;
      }
      case Op::kPairwiseInner: {
        auto& de = ensure(n.inputs[0]);
        int b = in_shape(0)[0], m = in_shape(0)[1], k = in_shape(0)[2];
        const auto& e = in_val(0);
        size_t p = 0;
        for (int bi = 0; bi < b; ++bi) {
          const float* eb = e.data() + static_cast<size_t>(bi) * m * k;
          float* db = de.data() + static_cast<size_t>(bi) * m * k;
          for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
              float gp = g[p++];
              for (int d = 0; d < k; ++d) {
                db[i * k + d] += gp * eb[j * k + d];
                db[j * k + d] += gp * eb[i * k + d];
              }
            }
        }
        break;
      }
      case Op::kCinInteract: {
        auto& dxp = ensure(n.inputs[0]);
        auto& dx0 = ensure(n.inputs[1]);
        auto& dw = ensure(n.inputs[2]);
        int b = in_shape(0)[0], h = in_shape(0)[1], k = in_shape(0)[2];
        int m = in_shape(1)[1];
        int ho = in_shape(2)[0];
        const auto& xp = in_val(0);
        const auto& x0 = in_val(1);
        const auto& w = in_val(2);
        for (int bi = 0; bi < b; ++bi) {
          const float* xpb = xp.data() + static_cast<size_t>(bi) * h * k;
          const float* x0b = x0.data() + static_cast<size_t>(bi) * m * k;
          float* dxpb = dxp.data() + static_cast<size_t>(bi) * h * k;
          float* dx0b = dx0.data() + static_cast<size_t>(bi) * m * k;
          for (int hi = 0; hi < ho; ++hi) {
            const float* gr = g.data() + (static_cast<size_t>(bi) * ho + hi) * k;
            for (int i = 0; i < h; ++i)
              for (int j = 0; j < m; ++j) {
                size_t wi = (static_cast<size_t>(hi) * h + i) * m + j;
                float wv = w[wi];
                float dwacc = 0.0f;
                for (int d = 0; d < k; ++d) {
                  float gd = gr[d];
                  dxpb[i * k + d] += gd * wv * x0b[j * k + d];
                  dx0b[j * k + d] += gd * wv * xpb[i * k + d];
                  dwacc += gd * xpb[i * k + d] * x0b[j * k + d];
                }
                dw[wi] += dwacc;
              }
          }
        }
        break;
      }
      case Op::kRowScale: {
        auto& de = ensure(n.inputs[0]);
        auto& da = ensure(n.inputs[1]);
        int b = in_shape(0)[0], m = in_shape(0)[1], k = in_shape(0)[2];
        const auto& e = in_val(0);
        const auto& a = in_val(1);
        for (int bi = 0; bi < b; ++bi)
          for (int mi = 0; mi < m; ++mi) {
            size_t row = (static_cast<size_t>(bi) * m + mi) * k;
            float av = a[static_cast<size_t>(bi) * m + mi];
            float acc = 0.0f;
            for (int d = 0; d < k; ++d) {
              de[row + d] += g[row + d] * av;
              acc += g[row + d] * e[row + d];
            }
            da[static_cast<size_t>(bi) * m + mi] += acc;
          }
        break;
      }
      case Op::kBceWithLogits: {
        auto& dz = ensure(n.inputs[0]);
        const auto& z = in_val(0);
        const auto& y = in_val(1);
        double invb = 1.0 / static_cast<double>(z.size());
        for (size_t i = 0; i < z.size(); ++i) {
          double s = 1.0 / (1.0 + std::exp(-static_cast<double>(z[i])));
          dz[i] += g[0] * static_cast<float>((s - static_cast<double>(y[i])) * invb);
        }
        break;
      }
    }
  }

  GradMap out;
  for (const auto& [name, id] : params_) {
    const auto& g = grads[static_cast<size_t>(id)];
    Tensor t = Tensor::zeros(nodes_[static_cast<size_t>(id)].shape);
    if (!g.empty()) std::copy(g.begin(), g.end(), t.data());
    out.emplace(name, std::move(t));
  }
  return out;
}

template <typename T>
std::vector<T> Graph::replay(NodeId target, const OverrideMap* overrides) const {
  contract(target >= 0 && target < num_nodes(), "replay target out of range");
  std::vector<std::vector<T>> buf(static_cast<size_t>(target) + 1);
  for (NodeId id = 0; id <= target; ++id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    auto& b = buf[static_cast<size_t>(id)];
    if (n.op == Op::kInput || n.op == Op::kParam) {
      const std::vector<double>* ov = nullptr;
      if (n.op == Op::kParam && overrides) {
        auto it = overrides->find(n.param_name);
        if (it != overrides->end()) ov = &it->second;
      }
      if (ov) {
        contract(ov->size() == n.value.size(), "override size mismatch for " + n.param_name);
        b.resize(ov->size());
        for (size_t i = 0; i < ov->size(); ++i) b[i] = static_cast<T>((*ov)[i]);
      } else {
        b.assign(n.value.begin(), n.value.end());
      }
      continue;
    }
    std::vector<const std::vector<T>*> in;
    std::vector<const std::vector<int>*> ish;
    for (NodeId i : n.inputs) {
      in.push_back(&buf[static_cast<size_t>(i)]);
      ish.push_back(&nodes_[static_cast<size_t>(i)].shape);
    }
    b = eval_op<T>(n, in, ish);
  }
  return std::move(buf[static_cast<size_t>(target)]);
}

template std::vector<float> Graph::replay<float>(NodeId, const OverrideMap*) const;
template std::vector<double> Graph::replay<double>(NodeId, const OverrideMap*) const;

double Graph::replay_scalar(NodeId target, const OverrideMap* overrides) const {
  contract(elems(shape(target)) == 1, "replay_scalar target not scalar");
  return replay<double>(target, overrides)[0];
}

}  // namespace ctrforge
