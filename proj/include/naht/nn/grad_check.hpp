#ifndef NAHT_NN_GRAD_CHECK_HPP_
#define NAHT_NN_GRAD_CHECK_HPP_

#include <functional>
#include <string>

#include "naht/nn/param_store.hpp"
#include "naht/rng.hpp"

namespace naht::nn {

/// Scalar loss of the store's current values. When backprop is true the
/// function must also accumulate dLoss/dparam into the store's gradients.
using DiffFunction = std::function<double(ParamStore<double>&, bool backprop)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_entry;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  int probes = 0;
};

/// Compares backprop gradients with central differences on `probes`
/// uniformly drawn coordinates. Relative error uses max(|a|, |b|, 1e-8) as
/// the denominator. Parameter values are restored on return.
GradCheckResult finite_diff_check(const DiffFunction& f, ParamStore<double>& store, int probes,
                                  Rng& rng, double step = 1e-5);

}  // namespace naht::nn

#endif  // NAHT_NN_GRAD_CHECK_HPP_
