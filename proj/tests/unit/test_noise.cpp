#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slowfast/noise.hpp"
#include "slowfast/parallel.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace slowfast;

TEST_CASE("philox known-answer vectors") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniforms are in the open unit interval") {
  CHECK(uniform_from_words(0, 0) > 0.0);
  CHECK(uniform_from_words(0xffffffff, 0xffffffff) < 1.0);
  CounterRng rng(5, 1);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    mean += u;
  }
  CHECK(mean / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal stream moments") {
  CounterRng rng(7, 3);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("index draws cover the range") {
  CounterRng rng(1, 1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.index(7)];
  for (int c : counts) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("counter noise is addressable and independent across keys") {
  CounterNoise a(42, 0), b(42, 1), c(43, 0);
  std::vector<double> x(5), y(5), z(5), x2(5);
  a.increments(10, 0.01, x);
  b.increments(10, 0.01, y);
  c.increments(10, 0.01, z);
  a.increments(10, 0.01, x2);
  CHECK(x == x2);
  CHECK(x != y);
  CHECK(x != z);
  std::vector<double> n1(3);
  a.normals(10, n1);
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(0.1 * n1[i]).epsilon(1e-15));
  // A longer request extends rather than reshuffles the shorter one.
  std::vector<double> longer(9);
  a.normals(10, longer);
  for (int i = 0; i < 3; ++i) CHECK(longer[i] == n1[i]);
}

TEST_CASE("increments have variance h") {
  CounterNoise noise(9, 4);
  const int steps = 50000;
  const double h = 0.25;
  double s2 = 0, cross = 0;
  std::vector<double> d(2);
  for (int m = 0; m < steps; ++m) {
    noise.increments(m, h, d);
    s2 += d[0] * d[0];
    cross += d[0] * d[1];
  }
  CHECK(s2 / steps == doctest::Approx(h).epsilon(0.03));
  CHECK(std::abs(cross / steps) < 4.0 * h / std::sqrt(steps));
}

TEST_CASE("aggregated noise sums fine increments") {
  CounterNoise fine(3, 2);
  AggregatedNoise coarse(fine, 4);
  std::vector<double> c(2), f(2), sum(2, 0.0);
  for (int j = 0; j < 4; ++j) {
    fine.increments(4 * 5 + j, 0.1, f);
    sum[0] += f[0];
    sum[1] += f[1];
  }
  coarse.increments(5, 0.4, c);
  CHECK(c[0] == doctest::Approx(sum[0]).epsilon(1e-14));
  CHECK(c[1] == doctest::Approx(sum[1]).epsilon(1e-14));
}

TEST_CASE("parallel_for covers every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(100, 3, [](std::size_t i) {
                    if (i == 37) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  CHECK(default_parallelism() >= 1);
}
