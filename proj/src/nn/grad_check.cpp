#include "naht/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace naht::nn {

GradCheckResult finite_diff_check(const DiffFunction& f, ParamStore<double>& store, int probes,
                                  Rng& rng, double step) {
  store.zero_grad();
  f(store, true);

  const std::size_t total = store.parameter_count();
  GradCheckResult result;
  result.probes = probes;
  if (total == 0) return result;

  for (int p = 0; p < probes; ++p) {
    std::size_t flat = rng.below(total);
    std::size_t entry = 0;
    while (flat >= store.entry(entry).value.size()) {
      flat -= store.entry(entry).value.size();
      ++entry;
    }
    auto& e = store.entry(entry);
    const double saved = e.value.data[flat];
    e.value.data[flat] = saved + step;
    const double plus = f(store, false);
    e.value.data[flat] = saved - step;
    const double minus = f(store, false);
    e.value.data[flat] = saved;

    const double numeric = (plus - minus) / (2.0 * step);
    const double analytic = e.grad.data[flat];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    const double rel = std::abs(numeric - analytic) / denom;
    if (rel > result.max_rel_error || p == 0) {
      result.max_rel_error = std::max(rel, result.max_rel_error);
      result.worst_entry = e.name;
      result.worst_index = flat;
      result.analytic = analytic;
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace naht::nn
