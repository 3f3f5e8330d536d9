#include "ctrforge/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>

#include "ctrforge/errors.hpp"

namespace ctrforge {
namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(uint64_t& h, const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_string(uint64_t& h, const std::string& s) {
  uint64_t len = s.size();
  fnv_bytes(h, &len, sizeof(len));
  fnv_bytes(h, s.data(), s.size());
}

}  // namespace

FieldVocab FieldVocab::from_values(std::vector<std::string> distinct_sorted) {
  FieldVocab v;
  v.values_ = std::move(distinct_sorted);
  contract(std::is_sorted(v.values_.begin(), v.values_.end()), "vocab values must be sorted");
  for (size_t i = 0; i < v.values_.size(); ++i)
    v.index_[v.values_[i]] = static_cast<int32_t>(i) + 1;
  contract(v.index_.size() == v.values_.size(), "vocab values must be distinct");
  return v;
}

int32_t FieldVocab::index_of(const std::string& v) const {
  auto it = index_.find(v);
  return it == index_.end() ? 0 : it->second;
}

const std::string& FieldVocab::value_of(int32_t index) const {
  contract(index >= 1 && index < size(), "value_of: index out of range (0 is OOV)");
  return values_[static_cast<size_t>(index) - 1];
}

FeatureSchema::FeatureSchema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
  contract(!fields_.empty(), "schema needs at least one field");
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    contract(!f.name.empty(), "schema field name empty");
    contract(seen.insert(f.name).second, "duplicate schema field: " + f.name);
  }
}

std::vector<std::string> FeatureSchema::names(FieldKind kind) const {
  std::vector<std::string> out;
  for (const auto& f : fields_)
    if (f.kind == kind) out.push_back(f.name);
  return out;
}

int FeatureSchema::count(FieldKind kind) const {
  int n = 0;
  for (const auto& f : fields_) n += f.kind == kind ? 1 : 0;
  return n;
}

uint64_t FeatureSchema::decl_fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const auto& f : fields_) {
    fnv_string(h, f.name);
    uint8_t k = static_cast<uint8_t>(f.kind);
    fnv_bytes(h, &k, 1);
  }
  return h;
}

FeatureSchema behavioral_schema() {
  return FeatureSchema({
      {"user_id", FieldKind::kCategorical},
      {"content_id", FieldKind::kCategorical},
      {"content_type", FieldKind::kCategorical},
      {"day_of_week", FieldKind::kCategorical},
      {"month", FieldKind::kCategorical},
      {"connection_frequency", FieldKind::kNumeric},
      {"content_total_clicks", FieldKind::kNumeric},
      {"user_content_clicks", FieldKind::kNumeric},
  });
}

uint64_t FeatureSpace::fingerprint() const {
  uint64_t h = schema.decl_fingerprint();
  for (const auto& [name, vocab] : vocabs) {
    fnv_string(h, name);
    for (const auto& v : vocab.known_values()) fnv_string(h, v);
  }
  for (const auto& [name, st] : stats) {
    fnv_string(h, name);
    uint64_t bits;
    std::memcpy(&bits, &st.mean, sizeof(bits));
    fnv_bytes(h, &bits, sizeof(bits));
    std::memcpy(&bits, &st.stddev, sizeof(bits));
    fnv_bytes(h, &bits, sizeof(bits));
  }
  return h;
}

// Every vocabulary is derived from the event stream (empty stream -> OOV-only
// vocabs). content_id is restricted to the target type; calendar fields use
// the dates observed in the stream.
std::map<std::string, FieldVocab> build_vocabs(const std::vector<InteractionEvent>& events,
                                               ContentType target) {
  std::set<std::string> users, contents, types, dows, months;
  for (const auto& e : events) {
    users.insert(e.user_id);
    if (e.type == target) contents.insert(e.content_id);
    types.insert(content_type_name(e.type));
    Date d = e.ts.date();
    dows.insert(std::to_string(day_of_week(d)));
    months.insert(month_token(month_of(d)));
  }

  std::map<std::string, FieldVocab> vocabs;
  vocabs["user_id"] = FieldVocab::from_values({users.begin(), users.end()});
  vocabs["content_id"] = FieldVocab::from_values({contents.begin(), contents.end()});
  vocabs["content_type"] = FieldVocab::from_values({types.begin(), types.end()});
  vocabs["day_of_week"] = FieldVocab::from_values({dows.begin(), dows.end()});
  vocabs["month"] = FieldVocab::from_values({months.begin(), months.end()});
  return vocabs;
}

std::string month_token(int month) {
  char buf[4];
  std::snprintf(buf, sizeof(buf), "%02d", month);
  return buf;
}

NumericStats compute_numeric_stats(const std::vector<double>& values) {
  contract(!values.empty(), "numeric stats over empty values");
  double sum = 0.0;
  for (double v : values) sum += v;
  double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  double stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return {mean, std::max(stddev, 1e-9)};
}

EncodedRow encode_row(const RawRow& row, const FeatureSpace& space) {
  EncodedRow out;
  for (const auto& f : space.schema.fields()) {
    if (f.kind == FieldKind::kCategorical) {
      auto it = row.cat.find(f.name);
      if (it == row.cat.end()) throw DataError("encode_row: missing categorical field '" + f.name + "'");
      auto vit = space.vocabs.find(f.name);
      contract(vit != space.vocabs.end(), "no vocabulary for field " + f.name);
      out.idx.push_back(vit->second.index_of(it->second));
    } else {
      auto it = row.num.find(f.name);
      if (it == row.num.end()) throw DataError("encode_row: missing numeric field '" + f.name + "'");
      auto sit = space.stats.find(f.name);
      contract(sit != space.stats.end(), "no numeric stats for field " + f.name);
      out.num.push_back(static_cast<float>((it->second - sit->second.mean) / sit->second.stddev));
    }
  }
  return out;
}

}  // namespace ctrforge
