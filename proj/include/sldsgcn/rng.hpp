#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sldsgcn {

/// Deterministic random number generator (splitmix64 core) with the handful
/// of draws this project needs. Self-contained so that results are
/// bit-reproducible across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  /// Standard normal via Box-Muller. Pairs are cached.
  double normal();

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derives an independent stream seed from a root seed and a purpose tag.
  /// The same (root, tag) pair always yields the same seed, and different
  /// tags decorrelate the streams. This is the documented seed-splitting
  /// scheme: split-seed = derive(root, "split"), init-seed =
  /// derive(root, "init"), teacher-sample-seed = derive(root, "teacher"), ...
  static uint64_t derive(uint64_t root, std::string_view tag);

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sldsgcn
