#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "masklab/rng.hpp"

using namespace masklab;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.bits() == b.bits());
  Rng c(42), d(43);
  int diff = 0;
  for (int i = 0; i < 10; ++i) diff += (c.bits() != d.bits());
  CHECK(diff > 0);
}

TEST_CASE("below stays in range and hits every residue") {
  Rng rng(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = rng.below(13);
    CHECK(v < 13);
    seen.insert(v);
  }
  CHECK(seen.size() == 13);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("range is inclusive on both ends") {
  Rng rng(11);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    const int v = rng.range(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    lo |= (v == -3);
    hi |= (v == 3);
  }
  CHECK(lo);
  CHECK(hi);
  CHECK(rng.range(5, 5) == 5);
}

TEST_CASE("real lies in the half-open unit interval") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.real();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("bernoulli respects degenerate probabilities") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
}

TEST_CASE("normal moments match the standard normal") {
  Rng rng(17);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // mean stderr = 1/sqrt(n) ~ 0.0032; var stderr = sqrt(2/n) ~ 0.0045
  CHECK(std::abs(mean) < 0.016);
  CHECK(std::abs(var - 1.0) < 0.023);
}

TEST_CASE("trunc_normal never leaves two sigma") {
  Rng rng(23);
  const double sigma = 0.02;
  for (int i = 0; i < 20000; ++i) {
    const double v = rng.trunc_normal(sigma);
    CHECK(v >= -2.0 * sigma);
    CHECK(v <= 2.0 * sigma);
  }
}

TEST_CASE("shuffle permutes without loss") {
  Rng rng(31);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  std::vector<int> orig = v;
  rng.shuffle(v);
  CHECK(v != orig);  // 1/100! chance of a false alarm
  std::sort(v.begin(), v.end());
  CHECK(v == orig);

  Rng a(99), b(99);
  std::vector<int> va = orig, vb = orig;
  a.shuffle(va);
  b.shuffle(vb);
  CHECK(va == vb);
}

TEST_CASE("save and load resume the exact stream") {
  Rng rng(1234);
  for (int i = 0; i < 57; ++i) rng.bits();
  const std::string state = rng.save();
  std::vector<std::uint64_t> expect;
  for (int i = 0; i < 100; ++i) expect.push_back(rng.bits());

  Rng fresh(0);
  fresh.load(state);
  for (int i = 0; i < 100; ++i) CHECK(fresh.bits() == expect[static_cast<std::size_t>(i)]);

  Rng bad(0);
  CHECK_THROWS(bad.load("not a state"));
}

TEST_CASE("derive_seed spreads streams apart") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, 7) == derive_seed(42, 7));
  CHECK(derive_seed(42, 7) != derive_seed(43, 7));
}

TEST_SUITE_END();
