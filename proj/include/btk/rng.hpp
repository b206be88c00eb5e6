#ifndef BTK_RNG_HPP
#define BTK_RNG_HPP

/* Counter-based deterministic RNG: splitmix64 applied to (seed, counter).
 * Stateless draws indexed by a counter make every battery replayable and
 * splittable (derive() forks an independent stream from a label). */

#include <cstdint>
#include <string>
#include <vector>

namespace btk {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
  std::uint64_t seed_;
  std::uint64_t ctr_ = 0;

 public:
  static constexpr const char* algorithm = "splitmix64-counter";
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next() { return splitmix64(seed_ ^ splitmix64(ctr_++ + 0x12D8F1A9ull)); }

  // value in [0, n), n > 0 (modulo bias is irrelevant here; determinism is the point)
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  long long range(long long lo, long long hi) {  // inclusive
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool coin() { return next() & 1; }

  // independent stream derived from a label; stable across call order
  Rng derive(std::uint64_t label) const { return Rng(splitmix64(seed_ ^ splitmix64(label))); }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
};

}  // namespace btk

#endif
