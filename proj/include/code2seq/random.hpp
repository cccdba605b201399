#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace code2seq {

/// Seeded generator used for every stochastic decision (sampling, init,
/// shuffling, dropout). The value mapping is done here rather than through
/// std distributions so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream, e.g. one per corpus file.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

  std::string serialize() const;
  void deserialize(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace code2seq
