#include <catch2/catch_amalgamated.hpp>

#include "marlab/prng.hpp"

using namespace marlab;

TEST_CASE("splitmix64 streams are deterministic and seed-sensitive", "[prng]") {
  SplitMix64 a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
  }
  bool differs = false;
  SplitMix64 a2(42);
  for (int i = 0; i < 10; ++i) differs |= (a2.next_u64() != c.next_u64());
  REQUIRE(differs);
}

TEST_CASE("uniform draws stay in [0,1)", "[prng]") {
  SplitMix64 g(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = g.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("gaussian draws have roughly standard moments", "[prng]") {
  SplitMix64 g(123);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next_gaussian();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("hash64 separates nearby field tuples", "[prng]") {
  REQUIRE(hash64({1, 2, 3}) == hash64({1, 2, 3}));
  REQUIRE(hash64({1, 2, 3}) != hash64({1, 2, 4}));
  REQUIRE(hash64({1, 2, 3}) != hash64({1, 2}));
  REQUIRE(hash64({0}) != hash64({0, 0}));
  REQUIRE(double_bits(0.5) != double_bits(0.8));
}
