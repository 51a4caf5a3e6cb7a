// Tests for the deterministic random number generator: reproducibility,
// distribution sanity, and the seed-splitting scheme that keeps independent
// phases (split / init / teacher sampling) decorrelated.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "sldsgcn/rng.hpp"

using namespace sldsgcn;

TEST_CASE("same seed yields the same stream") {
  Rng a(1234), b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds yield different streams") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1) and fills the range") {
  Rng rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform(lo, hi) respects its bounds") {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform(-2.5, 3.5);
    CHECK(u >= -2.5);
    CHECK(u < 3.5);
  }
}

TEST_CASE("uniform_int covers both endpoints and nothing outside") {
  Rng rng(9);
  std::set<int> seen;
  for (int i = 0; i < 5000; ++i) {
    int v = rng.uniform_int(2, 6);
    CHECK(v >= 2);
    CHECK(v <= 6);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);  // 2, 3, 4, 5, 6 all reachable

  // Degenerate single-value interval.
  for (int i = 0; i < 10; ++i) CHECK(rng.uniform_int(4, 4) == 4);
}

TEST_CASE("normal draws look standard normal") {
  Rng rng(10);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  // Standard error of the mean is ~1/sqrt(n) ~= 0.003; allow 5 sigma.
  CHECK(std::abs(mean) < 0.016);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("normal pair caching does not break determinism") {
  Rng a(11), b(11);
  // Interleave an odd number of draws with other calls on one stream only
  // after the comparison point; identical call sequences must agree.
  for (int i = 0; i < 7; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("shuffle permutes without losing elements") {
  Rng rng(12);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<size_t>(i)] = i;
  std::vector<int> shuffled = v;
  rng.shuffle(shuffled);
  CHECK(shuffled != v);  // 50! permutations; identity is absurdly unlikely
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == v);
}

TEST_CASE("shuffle of identical seeds agrees") {
  std::vector<int> a(20), b(20);
  for (int i = 0; i < 20; ++i) a[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] = i;
  Rng ra(13), rb(13);
  ra.shuffle(a);
  rb.shuffle(b);
  CHECK(a == b);
}

TEST_CASE("derive is stable and tag-sensitive") {
  const uint64_t root = 99;
  CHECK(Rng::derive(root, "split") == Rng::derive(root, "split"));
  CHECK(Rng::derive(root, "split") != Rng::derive(root, "init"));
  CHECK(Rng::derive(root, "split") != Rng::derive(root + 1, "split"));

  // Streams from different tags should not collide in their first values.
  Rng a(Rng::derive(root, "split"));
  Rng b(Rng::derive(root, "init"));
  CHECK(a.next_u64() != b.next_u64());
}
