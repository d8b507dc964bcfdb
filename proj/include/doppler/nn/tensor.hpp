#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doppler/common.hpp"

namespace doppler::nn {

// Dense 4-D array in [batch][channel][row][col] order, contiguous row-major.
// The fixed rank keeps indexing trivial; vectors and scalars use size-1 dims.
template <typename T>
struct Tensor {
  std::array<Eigen::Index, 4> shape{0, 0, 0, 0};
  std::vector<T> data;

  Tensor() = default;
  Tensor(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w)
      : shape{n, c, h, w}, data(static_cast<std::size_t>(n * c * h * w), T(0)) {}

  static Tensor zeros(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w) {
    return Tensor(n, c, h, w);
  }
  static Tensor full(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w, T value) {
    Tensor t(n, c, h, w);
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
  }
  static Tensor scalar(T value) { return full(1, 1, 1, 1, value); }

  Eigen::Index n() const { return shape[0]; }
  Eigen::Index c() const { return shape[1]; }
  Eigen::Index h() const { return shape[2]; }
  Eigen::Index w() const { return shape[3]; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(data.size()); }

  T& at(Eigen::Index n_, Eigen::Index c_, Eigen::Index h_, Eigen::Index w_) {
    return data[static_cast<std::size_t>(((n_ * shape[1] + c_) * shape[2] + h_) * shape[3] + w_)];
  }
  T at(Eigen::Index n_, Eigen::Index c_, Eigen::Index h_, Eigen::Index w_) const {
    return data[static_cast<std::size_t>(((n_ * shape[1] + c_) * shape[2] + h_) * shape[3] + w_)];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  return "[" + std::to_string(t.shape[0]) + "," + std::to_string(t.shape[1]) + "," +
         std::to_string(t.shape[2]) + "," + std::to_string(t.shape[3]) + "]";
}

// Eigen views over the flat storage.
template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatrixRM<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const MatrixRM<T>>;

}  // namespace doppler::nn
