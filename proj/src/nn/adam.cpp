#include "naht/nn/adam.hpp"

#include <cmath>

#include "naht/error.hpp"

namespace naht::nn {
namespace {

bool selected(const std::string& name, const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) return true;
  for (const auto& p : prefixes) {
    if (has_prefix(name, p)) return true;
  }
  return false;
}

}  // namespace

template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& config,
               const std::vector<std::string>& prefixes) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& e = store.entry(i);
    if (!selected(e.name, prefixes)) continue;
    for (T g : e.grad.data) {
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in " + e.name, e.name);
    }
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& e = store.entry(i);
    if (!selected(e.name, prefixes)) continue;
    ++e.updates;
    const double c1 = 1.0 - std::pow(b1, double(e.updates));
    const double c2 = 1.0 - std::pow(b2, double(e.updates));
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      const double g = e.grad.data[k];
      const double m = b1 * double(e.first_moment.data[k]) + (1.0 - b1) * g;
      const double v = b2 * double(e.second_moment.data[k]) + (1.0 - b2) * g * g;
      e.first_moment.data[k] = static_cast<T>(m);
      e.second_moment.data[k] = static_cast<T>(v);
      const double update = config.lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
      e.value.data[k] = static_cast<T>(double(e.value.data[k]) - update);
    }
    e.grad.fill(T(0));
  }
  store.increment_step();
}

template void adam_step<float>(ParamStore<float>&, const AdamConfig&,
                               const std::vector<std::string>&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&,
                                const std::vector<std::string>&);

}  // namespace naht::nn
