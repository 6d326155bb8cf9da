#include "naht/nn/param_store.hpp"

#include <cmath>

#include "naht/error.hpp"

namespace naht::nn {

template <typename T>
std::size_t ParamStore<T>::add(const std::string& name, std::vector<std::size_t> shape) {
  if (by_name_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
  ParamEntry<T> e;
  e.name = name;
  e.value = Tensor<T>(shape);
  e.grad = Tensor<T>(shape);
  e.first_moment = Tensor<T>(shape);
  e.second_moment = Tensor<T>(std::move(shape));
  entries_.push_back(std::move(e));
  by_name_.emplace(name, entries_.size() - 1);
  return entries_.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::index(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("unknown parameter: " + std::string(name));
  return it->second;
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  return by_name_.find(name) != by_name_.end();
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.grad.fill(T(0));
}

template <typename T>
void ParamStore<T>::zero_grad(std::string_view prefix) {
  for (auto& e : entries_) {
    if (has_prefix(e.name, prefix)) e.grad.fill(T(0));
  }
}

template <typename T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template <typename T>
double ParamStore<T>::grad_norm(std::string_view prefix) const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    if (!has_prefix(e.name, prefix)) continue;
    for (T g : e.grad.data) sq += double(g) * double(g);
  }
  return std::sqrt(sq);
}

template <typename T>
double ParamStore<T>::clip_grad_norm(double max_norm, std::string_view prefix) {
  const double norm = grad_norm(prefix);
  if (norm > max_norm && norm > 0.0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& e : entries_) {
      if (!has_prefix(e.name, prefix)) continue;
      for (T& g : e.grad.data) g *= scale;
    }
  }
  return norm;
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace naht::nn
