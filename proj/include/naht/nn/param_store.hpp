#ifndef NAHT_NN_PARAM_STORE_HPP_
#define NAHT_NN_PARAM_STORE_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "naht/nn/tensor.hpp"

namespace naht::nn {

template <typename T>
struct ParamEntry {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> first_moment;
  Tensor<T> second_moment;
  /// Adam updates applied to this entry (bias correction is per entry so
  /// parameter groups can be stepped on separate schedules).
  std::uint64_t updates = 0;
};

/// Named parameter tensors with gradient buffers and Adam state. Entries are
/// addressed by the index returned from add(); indices are stable.
template <typename T>
class ParamStore {
 public:
  std::size_t add(const std::string& name, std::vector<std::size_t> shape);

  std::size_t size() const { return entries_.size(); }
  ParamEntry<T>& entry(std::size_t i) { return entries_.at(i); }
  const ParamEntry<T>& entry(std::size_t i) const { return entries_.at(i); }
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  Tensor<T>& value(std::size_t i) { return entries_[i].value; }
  const Tensor<T>& value(std::size_t i) const { return entries_[i].value; }
  Tensor<T>& grad(std::size_t i) { return entries_[i].grad; }

  std::uint64_t step_count() const { return step_count_; }
  void increment_step() { ++step_count_; }

  void zero_grad();
  void zero_grad(std::string_view prefix);
  std::size_t parameter_count() const;
  /// L2 norm of the gradients of all entries whose name starts with prefix.
  double grad_norm(std::string_view prefix = {}) const;
  /// Multiplies gradients under prefix so their joint norm is at most max_norm.
  double clip_grad_norm(double max_norm, std::string_view prefix = {});

  /// Copies values from a store with identical names and shapes.
  template <typename U>
  void assign_values(const ParamStore<U>& other);

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.shape);
    out.assign_values(*this);
    return out;
  }

 private:
  std::vector<ParamEntry<T>> entries_;
  std::map<std::string, std::size_t, std::less<>> by_name_;
  std::uint64_t step_count_ = 0;
};

template <typename T>
template <typename U>
void ParamStore<T>::assign_values(const ParamStore<U>& other) {
  if (other.size() != size()) throw std::runtime_error("parameter store size mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& src = other.entry(i);
    auto& dst = entries_[i];
    if (src.name != dst.name || src.value.shape != dst.value.shape) {
      throw std::runtime_error("parameter entry mismatch at " + dst.name);
    }
    for (std::size_t k = 0; k < dst.value.size(); ++k) dst.value.data[k] = static_cast<T>(src.value.data[k]);
  }
}

inline bool has_prefix(std::string_view name, std::string_view prefix) {
  return name.substr(0, prefix.size()) == prefix;
}

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace naht::nn

#endif  // NAHT_NN_PARAM_STORE_HPP_
