#pragma once

#include <cmath>
#include <cstdint>

namespace kinterp {

// Counter-based deterministic RNG. Every random decision in the project is a
// pure function of (seed, stream, counter), so results never depend on call
// order, thread count, or platform. splitmix64 is the mixing function.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : state_(splitmix64(seed ^ (stream * 0x9e3779b97f4a7c15ULL + 0x853c49e6748fea9bULL))) {}

  // Derive an independent child stream; nesting is stable by construction.
  Rng fork(uint64_t stream) const { return Rng(state_, stream + 1); }

  uint64_t next_u64() {
    counter_++;
    return splitmix64(state_ + counter_ * 0xd1342543de82ef95ULL);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Standard normal via Box-Muller (one value per call; cached pair unused to
  // keep the counter semantics simple).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  uint64_t state_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace kinterp
