#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctrforge/dates.hpp"
#include "ctrforge/events.hpp"
#include "ctrforge/schema.hpp"

namespace ctrforge {

// Columnar labeled examples, pre-encoding. Feature values for an example with
// reference date d use events up to and including d only; the label is 1 iff
// the user clicked the content on d+1. Rows are sorted by
// (user_id, content_id, reference_date).
struct RawExamples {
  ContentType type = ContentType::kDrug;
  std::vector<std::string> user_id;
  std::vector<std::string> content_id;
  std::vector<int32_t> ref_date;  // Date::days
  std::vector<double> connection_frequency;
  std::vector<double> content_total_clicks;
  std::vector<double> user_content_clicks;
  std::vector<uint8_t> label;

  size_t size() const { return label.size(); }
};

struct EncodedBatch {
  std::vector<std::vector<int32_t>> idx;  // [categorical field][example]
  std::vector<std::vector<float>> num;    // [numeric field][example]
  std::vector<float> label;

  size_t size() const { return label.size(); }
};

// Distinct content ids of the target type, sorted.
std::vector<std::string> catalog_of(const std::vector<InteractionEvent>& events, ContentType t);

// One example per (as-of date d, user active on d, catalog content). Pass
// `catalog` to pin the candidate set (e.g. to pre-cutoff contents); by default
// it is derived from `events`.
RawExamples build_examples(const std::vector<InteractionEvent>& events, ContentType t,
                           const std::vector<Date>& as_of_dates,
                           const std::vector<std::string>* catalog = nullptr);

// Candidate rows for one user on one date, activity gate bypassed, labels 0.
// Used for recommendation scoring; features match build_examples exactly.
RawExamples features_for_user(const std::vector<InteractionEvent>& events, ContentType t,
                              const std::string& user, const std::vector<std::string>& catalog,
                              Date as_of);

struct SplitSpec {
  Date cutoff;
  Date test_date;
  double val_fraction = 0.2;
  uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> val;
  std::vector<size_t> test;
};

// test = examples dated test_date; the rest must be dated before the cutoff
// and are shuffled 80/20 by the seeded rng.
SplitIndices split_examples(const RawExamples& ex, const SplitSpec& spec);

// Keeps every positive, samples negatives without replacement down to
// neg_per_pos per positive (all of them if fewer). Returns indices in their
// original order.
std::vector<size_t> downsample_negatives(const RawExamples& ex, const std::vector<size_t>& idx,
                                         double neg_per_pos, uint64_t seed);

// Vocabularies from the pre-cutoff event stream, numeric statistics from the
// training rows only.
FeatureSpace fit_feature_space(const std::vector<InteractionEvent>& pre_cutoff_events,
                               ContentType t, const RawExamples& ex,
                               const std::vector<size_t>& train_idx);

RawRow raw_row_of(const RawExamples& ex, size_t i);

EncodedBatch encode_examples(const RawExamples& ex, const std::vector<size_t>& idx,
                             const FeatureSpace& space);

}  // namespace ctrforge
