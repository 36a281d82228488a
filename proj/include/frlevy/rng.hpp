#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace frlevy {

// Finalizer of the splitmix64 generator (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Replica i of a Monte-Carlo run with master seed s draws from a generator
// seeded with derive_seed(s, i).  This mapping is part of the output contract:
// changing it changes every sampled number.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica) {
  return splitmix64(master + (replica + 1) * 0x9E3779B97F4A7C15ULL);
}

// mt19937_64 with self-contained distributions so that streams are
// reproducible bit-for-bit across standard libraries (std::*_distribution
// output is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Poisson count by inversion on chunks of mean <= 30; exact by additivity.
  std::int64_t poisson(double mean) {
    if (mean < 0 || !(mean < 1e9))
      throw std::invalid_argument("Rng::poisson: mean out of range");
    std::int64_t total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  // Index i with probability cdf[i]-cdf[i-1]; cdf must end at 1.
  std::size_t categorical(const std::vector<double>& cdf) {
    const double u = uniform01();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (u < cdf[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

 private:
  std::int64_t poisson_small(double mean) {
    if (mean <= 0) return 0;
    const double limit = std::exp(-mean);
    double prod = 1.0;
    std::int64_t n = -1;
    do {
      prod *= uniform01();
      ++n;
    } while (prod > limit);
    return n;
  }

  std::mt19937_64 gen_;
};

}  // namespace frlevy
