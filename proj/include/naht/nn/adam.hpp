#ifndef NAHT_NN_ADAM_HPP_
#define NAHT_NN_ADAM_HPP_

#include <string>
#include <vector>

#include "naht/nn/param_store.hpp"

namespace naht::nn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update on every entry whose name starts with one of
/// `prefixes` (all entries when empty). Updated gradients are zeroed and the
/// store's step count advances by one. If any selected gradient is non-finite
/// nothing is modified and NonFiniteError names the entry.
template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& config,
               const std::vector<std::string>& prefixes = {});

}  // namespace naht::nn

#endif  // NAHT_NN_ADAM_HPP_
