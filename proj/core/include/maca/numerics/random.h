#ifndef MACA_NUMERICS_RANDOM_H_
#define MACA_NUMERICS_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>

namespace maca {

// Seeded generator with distribution helpers implemented in-house so that
// streams are reproducible across standard-library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n).
  size_t Index(size_t n) { return static_cast<size_t>(Uniform() * static_cast<double>(n)); }
  double Normal();
  // Samples an index from a probability vector.
  size_t Categorical(std::span<const double> probs);

  // Derives an independent child seed; used to split streams.
  uint64_t Fork() { return engine_() ^ 0x9E3779B97F4A7C15ull; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace maca

#endif  // MACA_NUMERICS_RANDOM_H_
