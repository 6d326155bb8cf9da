#ifndef NAHT_ERROR_HPP_
#define NAHT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace naht {

/// Inconsistent setup: shape mismatches, bad config values, unknown names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A call argument outside its documented domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or infinity surfaced in a loss or gradient.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::string where)
      : std::runtime_error(what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace naht

#endif  // NAHT_ERROR_HPP_
