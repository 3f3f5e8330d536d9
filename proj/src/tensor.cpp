#include "ctrforge/tensor.hpp"

#include <cmath>

#include "ctrforge/errors.hpp"

namespace ctrforge {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    contract(d > 0, "tensor extents must be positive");
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_size(shape_)), 0.0f);
}

Tensor Tensor::full(std::vector<int> shape, float v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = v;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::initializer_list<float> vals) {
  return from_vec(std::move(shape), std::vector<float>(vals));
}

Tensor Tensor::from_vec(std::vector<int> shape, std::vector<float> vals) {
  contract(shape_size(shape) == static_cast<int64_t>(vals.size()),
           "value count does not match shape");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(vals);
  return t;
}

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = static_cast<float>(rng.normal() * stddev);
  return t;
}

float& Tensor::at(int i, int j) {
  return data_[static_cast<size_t>(i) * shape_[1] + j];
}
float Tensor::at(int i, int j) const {
  return data_[static_cast<size_t>(i) * shape_[1] + j];
}
float& Tensor::at(int i, int j, int k) {
  return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
}
float Tensor::at(int i, int j, int k) const {
  return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
}

double Tensor::sum64() const {
  double s = 0.0;
  for (float x : data_) s += x;
  return s;
}

bool Tensor::all_finite() const {
  for (float x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace ctrforge
