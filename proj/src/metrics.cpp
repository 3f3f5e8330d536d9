#include "ctrforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "ctrforge/errors.hpp"

namespace ctrforge {

double auc(const std::vector<double>& scores, const std::vector<float>& labels) {
  contract(scores.size() == labels.size(), "auc: scores/labels size mismatch");
  if (scores.empty()) throw DataError("auc undefined: empty input");
  int64_t n = static_cast<int64_t>(scores.size());
  int64_t n_pos = 0;
  for (float y : labels) {
    contract(y == 0.0f || y == 1.0f, "auc: labels must be 0 or 1");
    if (y == 1.0f) ++n_pos;
  }
  int64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("auc undefined: labels are single-class (positives=" +
                    std::to_string(n_pos) + ", negatives=" + std::to_string(n_neg) + ")");
  }

  std::vector<int64_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return scores[a] < scores[b]; });

  // Midranks: every member of a tie run gets the average 1-based rank of the
  // run. Ranks are half-integers, exact in double for any realistic n.
  double rank_sum_pos = 0.0;
  int64_t i = 0;
  while (i < n) {
    int64_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (int64_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1.0f) rank_sum_pos += midrank;
    }
    i = j;
  }
  double n_pos_d = static_cast<double>(n_pos);
  double n_neg_d = static_cast<double>(n_neg);
  return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) * 0.5) / (n_pos_d * n_neg_d);
}

double rmse(const std::vector<double>& predictions, const std::vector<float>& labels) {
  contract(predictions.size() == labels.size(), "rmse: predictions/labels size mismatch");
  if (predictions.empty()) throw DataError("rmse undefined: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - static_cast<double>(labels[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

std::vector<ContentRmse> per_content_rmse(const std::vector<double>& predictions,
                                          const std::vector<float>& labels,
                                          const std::vector<std::string>& content_ids) {
  contract(predictions.size() == labels.size() && labels.size() == content_ids.size(),
           "per_content_rmse: size mismatch");
  std::map<std::string, std::pair<double, int64_t>> groups;  // id -> (sum sq, n)
  for (size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - static_cast<double>(labels[i]);
    auto& g = groups[content_ids[i]];
    g.first += d * d;
    g.second += 1;
  }
  std::vector<ContentRmse> out;
  out.reserve(groups.size());
  for (const auto& [id, g] : groups) {
    out.push_back({id, std::sqrt(g.first / static_cast<double>(g.second)), g.second});
  }
  return out;
}

}  // namespace ctrforge
