#ifndef XQL_RNG_HPP
#define XQL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace xql {

// Deterministic RNG used everywhere. Distribution transforms are written out
// explicitly (not std::*_distribution) so that a seed produces the same stream
// on every platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, one value per call (two uniforms consumed).
  double gaussian() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Inverse-CDF Gumbel draw: loc - scale * log(-log U).
  double gumbel(double loc, double scale) {
    return loc - scale * std::log(-std::log(uniform01()));
  }

  int uniform_int(int n) {  // 0 .. n-1
    return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
  }

  // Inverse-CDF draw from a probability vector.
  int categorical(std::span<const double> probs) {
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 mix; used to derive independent sub-seeds from (seed, stream).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace xql

#endif  // XQL_RNG_HPP
