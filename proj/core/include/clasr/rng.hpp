#ifndef CLASR_RNG_HPP
#define CLASR_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace clasr {

/// Deterministic splitmix64 generator. One experiment run holds a single
/// global seed; components derive independent named streams from it so
/// that, say, adding a draw to model init never perturbs the data stream.
///
/// The generator is self-contained on purpose: results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Derive the stream named (`name`, ids...) from a global seed.
  static Rng stream(std::uint64_t global_seed, std::string_view name,
                    std::initializer_list<std::uint64_t> ids = {});

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (spare cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, bound), unbiased; bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace clasr

#endif  // CLASR_RNG_HPP
