#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "ctrforge/rng.hpp"

namespace ctrforge {

// Dense row-major float32 array. Reductions that leave tensor land
// (sum64, loss/metric accumulation) run in double.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, float v);
  static Tensor from(std::vector<int> shape, std::initializer_list<float> vals);
  static Tensor from_vec(std::vector<int> shape, std::vector<float> vals);
  static Tensor randn(std::vector<int> shape, Rng& rng, double stddev);

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  float& at(int i) { return data_[static_cast<size_t>(i)]; }
  float at(int i) const { return data_[static_cast<size_t>(i)]; }
  float& at(int i, int j);
  float at(int i, int j) const;
  float& at(int i, int j, int k);
  float at(int i, int j, int k) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  double sum64() const;
  bool all_finite() const;
  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

int64_t shape_size(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

// Named parameter set; ordered so every iteration is deterministic.
using ParamMap = std::map<std::string, Tensor>;

}  // namespace ctrforge
