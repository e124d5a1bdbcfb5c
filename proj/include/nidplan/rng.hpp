#ifndef NIDPLAN_RNG_HPP
#define NIDPLAN_RNG_HPP

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace nidplan {

// Seeded generator with hand-rolled value mappings so that runs are
// reproducible across standard library implementations (std distributions
// are not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    assert(n > 0);
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Index drawn proportionally to the given non-negative weights.
  // Returns weights.size() when the total mass is zero.
  std::size_t weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return weights.size();
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  // Knuth's product method; fine for the small means used here.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nidplan

#endif
