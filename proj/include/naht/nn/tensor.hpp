#ifndef NAHT_NN_TENSOR_HPP_
#define NAHT_NN_TENSOR_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace naht::nn {

/// Row-major dynamic matrix used for all batched activations.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  // aligned storage keeps vectorized reductions independent of heap placement
  std::vector<T, Eigen::aligned_allocator<T>> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(element_count(shape), T(0)) {}

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape.front(); }
  std::size_t cols() const { return shape.empty() ? 1 : data.size() / shape.front(); }

  /// Views the tensor as a 2-D matrix (leading dimension by the rest).
  MatMap<T> mat() {
    return MatMap<T>(data.data(), Eigen::Index(rows()), Eigen::Index(cols()));
  }
  ConstMatMap<T> mat() const {
    return ConstMatMap<T>(data.data(), Eigen::Index(rows()), Eigen::Index(cols()));
  }
  /// Views the tensor as a single row vector.
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> row() {
    return {data.data(), Eigen::Index(data.size())};
  }
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> row() const {
    return {data.data(), Eigen::Index(data.size())};
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace naht::nn

#endif  // NAHT_NN_TENSOR_HPP_
