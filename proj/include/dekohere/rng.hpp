#ifndef DEKOHERE_RNG_HPP
#define DEKOHERE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dekohere {

// Counter-based Gaussian generator. Every variate is a pure function of
// (seed, stream, step, slot), so sampling is reproducible no matter how work
// is split across threads.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t step, std::uint64_t slot) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ slot);
  return h;
}

// uniform in (0,1); the offset keeps the argument of log strictly positive
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// standard normal via Box-Muller on two counter-derived uniforms
inline double normal(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t step, std::uint64_t slot) {
  const double u1 = to_unit(mix(seed, stream, step, 2 * slot));
  const double u2 = to_unit(mix(seed, stream, step, 2 * slot + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng
}  // namespace dekohere

#endif
