#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace psw {

// splitmix64 step; used to expand seeds and to derive independent
// per-replicate streams from (base seed, counter) pairs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. Distributions are implemented here rather
// than via <random> adaptors so the byte stream does not depend on the
// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  // Stream for bootstrap replicate r (attempt a of the redraw loop);
  // independent of execution order.
  static Rng for_replicate(std::uint64_t base_seed, std::uint64_t replicate,
                           std::uint64_t attempt = 0) {
    return Rng(splitmix64(base_seed ^ splitmix64(replicate + 1)) ^
               splitmix64(attempt * 0x9e3779b97f4a7c15ULL + 1));
  }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Index draw from a probability row (entries >= 0, summing to ~1).
  int categorical(const Eigen::RowVectorXd& probs) {
    const double u = uniform();
    double cum = 0.0;
    for (int j = 0; j < probs.size(); ++j) {
      cum += probs[j];
      if (u < cum) return j;
    }
    return static_cast<int>(probs.size()) - 1;
  }

  int uniform_int(int n) {  // 0..n-1
    return static_cast<int>(static_cast<double>(n) * uniform());
  }

  std::vector<int> sample_with_replacement(int n, int k) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = uniform_int(n);
    return idx;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace psw
