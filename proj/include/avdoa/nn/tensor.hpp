#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace avdoa::nn {

// Dense row-major matrix of doubles (batch x features).
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data_).subspan(r * cols_, cols_); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

// Throws NaNLoss when any entry is NaN or infinite.
void require_finite(const Tensor& t, const std::string& what);

// Concatenate along columns.
Tensor hconcat(const Tensor& a, const Tensor& b);

// Rows `indices` of `t`, in that order.
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> indices);

}  // namespace avdoa::nn
