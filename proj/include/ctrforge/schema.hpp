#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctrforge/events.hpp"

namespace ctrforge {

enum class FieldKind : uint8_t { kCategorical = 0, kNumeric = 1 };

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::kCategorical;
};

// Raw-value <-> index bijection for one categorical field. Index 0 is the
// reserved OOV slot; known values occupy 1..size()-1 in lexicographic order.
class FieldVocab {
 public:
  FieldVocab() = default;
  static FieldVocab from_values(std::vector<std::string> distinct_sorted);

  int32_t size() const { return static_cast<int32_t>(values_.size()) + 1; }
  int32_t index_of(const std::string& v) const;
  const std::string& value_of(int32_t index) const;  // index in [1, size())
  const std::vector<std::string>& known_values() const { return values_; }

 private:
  std::vector<std::string> values_;
  std::map<std::string, int32_t> index_;
};

// Population mean / standard deviation of one numeric field on the training
// split; stddev floored at 1e-9 so constant features standardize to 0.
struct NumericStats {
  double mean = 0.0;
  double stddev = 1.0;
};

class FeatureSchema {
 public:
  explicit FeatureSchema(std::vector<FieldSpec> fields);

  const std::vector<FieldSpec>& fields() const { return fields_; }
  std::vector<std::string> names(FieldKind kind) const;
  int count(FieldKind kind) const;
  uint64_t decl_fingerprint() const;

 private:
  std::vector<FieldSpec> fields_;
};

// The schema shipped for this pipeline: who (user), what (content and its
// type), how engaged (connection frequency, click counts), and when (day of
// week, month).
FeatureSchema behavioral_schema();

// Schema plus everything needed to turn raw rows into model inputs.
struct FeatureSpace {
  FeatureSchema schema = behavioral_schema();
  std::map<std::string, FieldVocab> vocabs;     // one per categorical field
  std::map<std::string, NumericStats> stats;    // one per numeric field
  uint64_t fingerprint() const;                 // covers decl + vocabs + stats
};

struct RawRow {
  std::map<std::string, std::string> cat;
  std::map<std::string, double> num;
};

struct EncodedRow {
  std::vector<int32_t> idx;  // one per categorical field, schema order
  std::vector<float> num;    // one per numeric field, schema order, standardized
};

// Vocabularies for the behavioral schema: user_id over all events, content_id
// over events of `target` only, and fixed calendar/type domains for
// content_type, day_of_week and month.
std::map<std::string, FieldVocab> build_vocabs(const std::vector<InteractionEvent>& events,
                                               ContentType target);

NumericStats compute_numeric_stats(const std::vector<double>& values);

// Zero-padded month token ("01".."12") so lexicographic vocab order matches
// calendar order.
std::string month_token(int month);

// Total: returns an encoded row or throws a DataError naming the first field
// the row is missing. Unknown categorical values map to OOV, never error.
EncodedRow encode_row(const RawRow& row, const FeatureSpace& space);

}  // namespace ctrforge
