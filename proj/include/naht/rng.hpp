#ifndef NAHT_RNG_HPP_
#define NAHT_RNG_HPP_

#include <cstdint>
#include <string_view>

namespace naht {

/// Counter-based random stream. Every draw is a pure function of
/// (key, counter), so substreams derived with split() never depend on how
/// many draws other streams have consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  Rng split(std::uint64_t index) const;
  Rng split(std::string_view name) const;
  Rng split(std::string_view name, std::uint64_t index) const { return split(name).split(index); }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, no cached second value).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t hash(std::string_view s);

 private:
  static Rng from_key(std::uint64_t key) {
    Rng r;
    r.key_ = key;
    return r;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace naht

#endif  // NAHT_RNG_HPP_
