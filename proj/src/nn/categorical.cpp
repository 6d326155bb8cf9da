#include "naht/nn/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "naht/error.hpp"

namespace naht::nn {

template <typename T>
T log_sum_exp(std::span<const T> logits) {
  const T m = *std::max_element(logits.begin(), logits.end());
  T s = 0;
  for (T v : logits) s += std::exp(v - m);
  return m + std::log(s);
}

template <typename T>
T categorical_log_prob(std::span<const T> logits, int action) {
  if (action < 0 || std::size_t(action) >= logits.size()) {
    throw ArgumentError("action " + std::to_string(action) + " outside [0, " +
                        std::to_string(logits.size()) + ")");
  }
  return logits[std::size_t(action)] - log_sum_exp(logits);
}

template <typename T>
void categorical_log_prob_grad(std::span<const T> logits, int action, std::span<T> grad) {
  const T lse = log_sum_exp(logits);
  for (std::size_t k = 0; k < logits.size(); ++k) grad[k] = -std::exp(logits[k] - lse);
  grad[std::size_t(action)] += T(1);
}

template <typename T>
T categorical_entropy(std::span<const T> logits) {
  const T lse = log_sum_exp(logits);
  T h = 0;
  for (T v : logits) {
    const T lp = v - lse;
    h -= std::exp(lp) * lp;
  }
  return h;
}

template <typename T>
Mat<T> log_softmax_rows(const Mat<T>& logits) {
  Eigen::Matrix<T, Eigen::Dynamic, 1> m = logits.rowwise().maxCoeff();
  Mat<T> shifted = logits.colwise() - m;
  Eigen::Matrix<T, Eigen::Dynamic, 1> lse = shifted.array().exp().rowwise().sum().log();
  return shifted.colwise() - lse;
}

template <typename T>
int sample_categorical(std::span<const T> logits, Rng& rng) {
  const T lse = log_sum_exp(logits);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    acc += std::exp(double(logits[k] - lse));
    if (u < acc) return int(k);
  }
  return int(logits.size()) - 1;
}

template <typename T>
int argmax(std::span<const T> values) {
  return int(std::max_element(values.begin(), values.end()) - values.begin());
}

#define NAHT_INSTANTIATE(T)                                                         \
  template T log_sum_exp<T>(std::span<const T>);                                    \
  template T categorical_log_prob<T>(std::span<const T>, int);                      \
  template void categorical_log_prob_grad<T>(std::span<const T>, int, std::span<T>); \
  template T categorical_entropy<T>(std::span<const T>);                            \
  template Mat<T> log_softmax_rows<T>(const Mat<T>&);                               \
  template int sample_categorical<T>(std::span<const T>, Rng&);                     \
  template int argmax<T>(std::span<const T>);

NAHT_INSTANTIATE(float)
NAHT_INSTANTIATE(double)

#undef NAHT_INSTANTIATE

}  // namespace naht::nn
