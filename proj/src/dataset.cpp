#include "ctrforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "ctrforge/errors.hpp"
#include "ctrforge/rng.hpp"

namespace ctrforge {
namespace {

constexpr int kTrailingWindowDays = 28;

// Distinct active days (any content type) within [d-27, d].
double window_active_days(const std::vector<int32_t>& active_days, int32_t d) {
  auto lo = std::lower_bound(active_days.begin(), active_days.end(), d - (kTrailingWindowDays - 1));
  auto hi = std::upper_bound(active_days.begin(), active_days.end(), d);
  return static_cast<double>(hi - lo);
}

void append_row(RawExamples& out, const std::string& user, const std::string& content, int32_t d,
                double conn, double content_clicks, double user_content, uint8_t label) {
  out.user_id.push_back(user);
  out.content_id.push_back(content);
  out.ref_date.push_back(d);
  out.connection_frequency.push_back(conn);
  out.content_total_clicks.push_back(content_clicks);
  out.user_content_clicks.push_back(user_content);
  out.label.push_back(label);
}

void sort_rows(RawExamples& ex) {
  std::vector<size_t> perm(ex.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
    if (ex.user_id[a] != ex.user_id[b]) return ex.user_id[a] < ex.user_id[b];
    if (ex.content_id[a] != ex.content_id[b]) return ex.content_id[a] < ex.content_id[b];
    return ex.ref_date[a] < ex.ref_date[b];
  });
  auto apply = [&](auto& col) {
    auto tmp = col;
    for (size_t i = 0; i < perm.size(); ++i) col[i] = tmp[perm[i]];
  };
  apply(ex.user_id);
  apply(ex.content_id);
  apply(ex.ref_date);
  apply(ex.connection_frequency);
  apply(ex.content_total_clicks);
  apply(ex.user_content_clicks);
  apply(ex.label);
}

}  // namespace

std::vector<std::string> catalog_of(const std::vector<InteractionEvent>& events, ContentType t) {
  std::set<std::string> contents;
  for (const auto& e : events)
    if (e.type == t) contents.insert(e.content_id);
  return {contents.begin(), contents.end()};
}

RawExamples build_examples(const std::vector<InteractionEvent>& events, ContentType t,
                           const std::vector<Date>& as_of_dates,
                           const std::vector<std::string>* catalog_in) {
  contract(!as_of_dates.empty(), "build_examples: no as-of dates");
  RawExamples out;
  out.type = t;

  std::vector<std::string> catalog = catalog_in ? *catalog_in : catalog_of(events, t);
  contract(std::is_sorted(catalog.begin(), catalog.end()), "catalog must be sorted");
  if (catalog.empty()) {
    std::fprintf(stderr, "warning: empty %s catalog, no examples built\n", content_type_name(t));
    return out;
  }

  std::map<std::string, int> user_of;
  for (const auto& e : events) user_of.emplace(e.user_id, 0);
  std::vector<std::string> users;
  users.reserve(user_of.size());
  for (auto& [name, idx] : user_of) {
    idx = static_cast<int>(users.size());
    users.push_back(name);
  }
  std::map<std::string, int> content_of;
  for (size_t i = 0; i < catalog.size(); ++i) content_of[catalog[i]] = static_cast<int>(i);

  // Per-user sorted distinct active days; per-day click pairs of the target
  // type (with multiplicity, for cumulative counts).
  std::vector<std::vector<int32_t>> active_days(users.size());
  std::map<int32_t, std::vector<std::pair<int, int>>> clicks_by_day;
  for (const auto& e : events) {
    int u = user_of[e.user_id];
    int32_t d = e.ts.date().days;
    auto& ad = active_days[static_cast<size_t>(u)];
    if (ad.empty() || ad.back() != d) {
      if (!ad.empty() && ad.back() > d) {
        ad.insert(std::lower_bound(ad.begin(), ad.end(), d), d);  // non-sorted input
      } else {
        ad.push_back(d);
      }
    }
    if (e.type == t) {
      auto cit = content_of.find(e.content_id);
      if (cit != content_of.end()) clicks_by_day[d].emplace_back(u, cit->second);
    }
  }
  for (auto& ad : active_days) ad.erase(std::unique(ad.begin(), ad.end()), ad.end());

  std::vector<Date> dates = as_of_dates;
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

  // Chronological sweep: cumulative counts advance day by day, so state at an
  // as-of date covers events up to and including it, never beyond.
  std::vector<int64_t> content_clicks(catalog.size(), 0);
  std::map<int64_t, int64_t> user_content;  // key u*catalog_size + c
  auto key_of = [&](int u, int c) {
    return static_cast<int64_t>(u) * static_cast<int64_t>(catalog.size()) + c;
  };
  auto cursor = clicks_by_day.begin();

  for (Date d : dates) {
    for (; cursor != clicks_by_day.end() && cursor->first <= d.days; ++cursor)
      for (auto [u, c] : cursor->second) {
        ++content_clicks[static_cast<size_t>(c)];
        ++user_content[key_of(u, c)];
      }

    std::set<std::pair<int, int>> next_day_clicks;
    auto nit = clicks_by_day.find(d.days + 1);
    if (nit != clicks_by_day.end()) next_day_clicks.insert(nit->second.begin(), nit->second.end());

    for (size_t u = 0; u < users.size(); ++u) {
      const auto& ad = active_days[u];
      if (!std::binary_search(ad.begin(), ad.end(), d.days)) continue;  // activity gate
      double conn = window_active_days(ad, d.days);
      for (size_t c = 0; c < catalog.size(); ++c) {
        auto ucit = user_content.find(key_of(static_cast<int>(u), static_cast<int>(c)));
        double uc = ucit == user_content.end() ? 0.0 : static_cast<double>(ucit->second);
        uint8_t label =
            next_day_clicks.count({static_cast<int>(u), static_cast<int>(c)}) ? 1 : 0;
        append_row(out, users[u], catalog[c], d.days, conn,
                   static_cast<double>(content_clicks[c]), uc, label);
      }
    }
  }

  sort_rows(out);
  return out;
}

RawExamples features_for_user(const std::vector<InteractionEvent>& events, ContentType t,
                              const std::string& user, const std::vector<std::string>& catalog,
                              Date as_of) {
  RawExamples out;
  out.type = t;
  contract(std::is_sorted(catalog.begin(), catalog.end()), "catalog must be sorted");
  std::map<std::string, int> content_of;
  for (size_t i = 0; i < catalog.size(); ++i) content_of[catalog[i]] = static_cast<int>(i);

  std::vector<int32_t> active;
  std::vector<int64_t> content_clicks(catalog.size(), 0);
  std::vector<int64_t> user_clicks(catalog.size(), 0);
  for (const auto& e : events) {
    int32_t d = e.ts.date().days;
    if (d > as_of.days) continue;
    if (e.user_id == user) active.push_back(d);
    if (e.type != t) continue;
    auto cit = content_of.find(e.content_id);
    if (cit == content_of.end()) continue;
    ++content_clicks[static_cast<size_t>(cit->second)];
    if (e.user_id == user) ++user_clicks[static_cast<size_t>(cit->second)];
  }
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());

  double conn = window_active_days(active, as_of.days);
  for (size_t c = 0; c < catalog.size(); ++c)
    append_row(out, user, catalog[c], as_of.days, conn, static_cast<double>(content_clicks[c]),
               static_cast<double>(user_clicks[c]), 0);
  return out;
}

SplitIndices split_examples(const RawExamples& ex, const SplitSpec& spec) {
  contract(spec.test_date >= spec.cutoff, "split: test date before cutoff");
  contract(spec.val_fraction > 0.0 && spec.val_fraction < 1.0, "split: bad validation fraction");

  SplitIndices out;
  std::vector<size_t> historical;
  for (size_t i = 0; i < ex.size(); ++i) {
    if (ex.ref_date[i] == spec.test_date.days) {
      out.test.push_back(i);
    } else if (ex.ref_date[i] < spec.cutoff.days) {
      historical.push_back(i);
    } else {
      throw DataError("split: example dated " + format_date(Date{ex.ref_date[i]}) +
                      " is neither pre-cutoff nor on the test date " +
                      format_date(spec.test_date));
    }
  }
  if (out.test.empty())
    throw DataError("split: no examples on test date " + format_date(spec.test_date));

  Rng rng(mix_seed(spec.seed, 0x73706c69ULL));
  rng.shuffle(historical);
  size_t n_val = static_cast<size_t>(
      std::llround(spec.val_fraction * static_cast<double>(historical.size())));
  out.val.assign(historical.begin(), historical.begin() + static_cast<ptrdiff_t>(n_val));
  out.train.assign(historical.begin() + static_cast<ptrdiff_t>(n_val), historical.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

std::vector<size_t> downsample_negatives(const RawExamples& ex, const std::vector<size_t>& idx,
                                         double neg_per_pos, uint64_t seed) {
  contract(neg_per_pos > 0.0, "downsample: ratio must be positive");
  std::vector<size_t> pos, neg;
  for (size_t i : idx) (ex.label[i] ? pos : neg).push_back(i);
  size_t keep = static_cast<size_t>(neg_per_pos * static_cast<double>(pos.size()));
  if (neg.size() > keep) {
    Rng rng(mix_seed(seed, 0x6e656773ULL));
    rng.shuffle(neg);
    neg.resize(keep);
  }
  pos.insert(pos.end(), neg.begin(), neg.end());
  std::sort(pos.begin(), pos.end());
  return pos;
}

FeatureSpace fit_feature_space(const std::vector<InteractionEvent>& pre_cutoff_events,
                               ContentType t, const RawExamples& ex,
                               const std::vector<size_t>& train_idx) {
  contract(!train_idx.empty(), "fit_feature_space: empty training slice");
  FeatureSpace space;
  space.vocabs = build_vocabs(pre_cutoff_events, t);
  auto stat_of = [&](const std::vector<double>& col) {
    std::vector<double> vals;
    vals.reserve(train_idx.size());
    for (size_t i : train_idx) vals.push_back(col[i]);
    return compute_numeric_stats(vals);
  };
  space.stats["connection_frequency"] = stat_of(ex.connection_frequency);
  space.stats["content_total_clicks"] = stat_of(ex.content_total_clicks);
  space.stats["user_content_clicks"] = stat_of(ex.user_content_clicks);
  return space;
}

RawRow raw_row_of(const RawExamples& ex, size_t i) {
  contract(i < ex.size(), "raw_row_of: index out of range");
  // Calendar features describe the predicted day d+1, derivable from d alone.
  Date target = Date{ex.ref_date[i]} + 1;
  RawRow row;
  row.cat = {{"user_id", ex.user_id[i]},
             {"content_id", ex.content_id[i]},
             {"content_type", content_type_name(ex.type)},
             {"day_of_week", std::to_string(day_of_week(target))},
             {"month", month_token(month_of(target))}};
  row.num = {{"connection_frequency", ex.connection_frequency[i]},
             {"content_total_clicks", ex.content_total_clicks[i]},
             {"user_content_clicks", ex.user_content_clicks[i]}};
  return row;
}

EncodedBatch encode_examples(const RawExamples& ex, const std::vector<size_t>& idx,
                             const FeatureSpace& space) {
  EncodedBatch out;
  out.idx.resize(static_cast<size_t>(space.schema.count(FieldKind::kCategorical)));
  out.num.resize(static_cast<size_t>(space.schema.count(FieldKind::kNumeric)));
  for (auto& col : out.idx) col.reserve(idx.size());
  for (auto& col : out.num) col.reserve(idx.size());
  out.label.reserve(idx.size());
  for (size_t i : idx) {
    EncodedRow row = encode_row(raw_row_of(ex, i), space);
    for (size_t f = 0; f < row.idx.size(); ++f) out.idx[f].push_back(row.idx[f]);
    for (size_t f = 0; f < row.num.size(); ++f) out.num[f].push_back(row.num[f]);
    out.label.push_back(static_cast<float>(ex.label[i]));
  }
  return out;
}

}  // namespace ctrforge
