#ifndef NAHT_NN_CATEGORICAL_HPP_
#define NAHT_NN_CATEGORICAL_HPP_

#include <span>

#include "naht/nn/tensor.hpp"
#include "naht/rng.hpp"

namespace naht::nn {

template <typename T>
T log_sum_exp(std::span<const T> logits);

/// log softmax(logits)[action]. Throws ArgumentError for out-of-range actions.
template <typename T>
T categorical_log_prob(std::span<const T> logits, int action);

/// d log_prob / d logits = onehot(action) - softmax(logits).
template <typename T>
void categorical_log_prob_grad(std::span<const T> logits, int action, std::span<T> grad);

template <typename T>
T categorical_entropy(std::span<const T> logits);

/// Row-wise log softmax.
template <typename T>
Mat<T> log_softmax_rows(const Mat<T>& logits);

template <typename T>
int sample_categorical(std::span<const T> logits, Rng& rng);

template <typename T>
int argmax(std::span<const T> values);

}  // namespace naht::nn

#endif  // NAHT_NN_CATEGORICAL_HPP_
