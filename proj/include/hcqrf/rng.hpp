#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace hcqrf {

// SplitMix64 step; used for seeding and for deriving substream keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream key from (seed, tag).  Every parallel unit of
// work (tree, replication, permutation) gets its own key so results do not
// depend on thread count or execution order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (tag + 0x632be59bd9b4e019ULL));
  std::uint64_t r = splitmix64(s);
  r ^= splitmix64(s);
  return r;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

// xoshiro256++ with SplitMix64 seeding.  Self-contained so that simulated
// datasets and fitted models are bit-reproducible across platforms and
// standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  // Child generator for an independent substream.
  Rng stream(std::uint64_t tag) const { return Rng(mix_seed(state_[0] ^ state_[3], tag)); }

  std::uint64_t u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n); multiply-shift (bias < n / 2^64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller with one cached draw.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // chi^2 with 2 degrees of freedom (= Exp(1/2)).
  double chi_squared2() ;

  double chi_squared1() { double z = normal(); return z * z; }

  double exponential(double rate);

  // Student t with 2 degrees of freedom.
  double student_t2();

  // Fisher-Yates shuffle (deterministic for a given stream state).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Random permutation of {0, ..., n-1}.
  std::vector<std::uint32_t> permutation(std::size_t n) {
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
    shuffle(idx);
    return idx;
  }

  // Sample k distinct indices from {0, ..., n-1}, returned sorted ascending.
  std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Standard normal quantile function (Wichura's PPND16 rational approximation,
// accurate to ~1e-15).  Throws NumericalError outside (0, 1).
double normal_quantile(double p);

// Standard normal CDF.
double normal_cdf(double x);

// chi^2(1) quantile via the normal quantile.
double chi_squared1_quantile(double p);

}  // namespace hcqrf
