#include "avdoa/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "avdoa/error.hpp"

namespace avdoa::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, ErrorCode::ShapeMismatch, "tensor data size");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, what + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                              " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void require_finite(const Tensor& t, const std::string& what) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NaNLoss, what + " contains NaN/Inf");
  }
}

Tensor hconcat(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), ErrorCode::ShapeMismatch, "hconcat row count");
  Tensor out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> indices) {
  Tensor out(indices.size(), t.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < t.rows(), ErrorCode::InvalidArgument, "row index out of range");
    std::copy(t.row(indices[i]).begin(), t.row(indices[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace avdoa::nn
