#include "clasr/rng.hpp"

#include <cmath>
#include <numbers>

#include "clasr/errors.hpp"

namespace clasr {

namespace {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng Rng::stream(std::uint64_t global_seed, std::string_view name,
                std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = global_seed;
  s ^= fnv1a64(name);
  std::uint64_t mix = s;
  s = splitmix64_next(mix);
  for (std::uint64_t id : ids) {
    mix = s ^ (id + 0x9e3779b97f4a7c15ULL);
    s = splitmix64_next(mix);
  }
  return Rng(s);
}

std::uint64_t Rng::next_u64() { return splitmix64_next(state_); }

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u keeps the argument of log strictly positive.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  CLASR_CHECK(bound > 0, "uniform_below needs a positive bound");
  const std::uint64_t threshold = (-bound) % bound;  // rejection keeps it unbiased
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

int Rng::uniform_int(int lo, int hi) {
  CLASR_CHECK(lo <= hi, "uniform_int range is empty");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return lo + static_cast<int>(uniform_below(span));
}

}  // namespace clasr
