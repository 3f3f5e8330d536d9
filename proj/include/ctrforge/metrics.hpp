#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ctrforge {

// Mann-Whitney AUC with midrank tie handling:
// P(score_pos > score_neg) + 0.5 * P(tie). Throws DataError when labels are
// single-class (AUC undefined).
double auc(const std::vector<double>& scores, const std::vector<float>& labels);

// sqrt(mean((p - y)^2)), accumulated in double. Throws DataError on empty
// input.
double rmse(const std::vector<double>& predictions, const std::vector<float>& labels);

struct ContentRmse {
  std::string content_id;
  double rmse = 0.0;
  int64_t count = 0;
};

// Per-group RMSE; rows sorted by content id. The count-weighted mean of
// squared group errors recombines to the global mean squared error.
std::vector<ContentRmse> per_content_rmse(const std::vector<double>& predictions,
                                          const std::vector<float>& labels,
                                          const std::vector<std::string>& content_ids);

struct EvalReport {
  std::string model;
  std::string dataset_tag;
  std::string content_type;
  std::optional<double> auc;  // empty when the test labels are single-class
  double rmse = 0.0;
  std::vector<ContentRmse> per_content;
};

}  // namespace ctrforge
