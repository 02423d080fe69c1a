#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slowfast/measures.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/transport.hpp"
#include "support/lp_oracle.hpp"

#include <cmath>
#include <sstream>

using namespace slowfast;

namespace {

EmpiricalMeasure points_1d(std::initializer_list<double> xs) {
  Mat s(xs.size(), 1);
  int i = 0;
  for (double x : xs) s(i++, 0) = x;
  return EmpiricalMeasure(s);
}

EmpiricalMeasure random_cloud(CounterRng& rng, int m, int k, double shift = 0.0, bool weighted = false) {
  Mat s(m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) s(i, j) = rng.normal() + (j == 0 ? shift : 0.0);
  if (!weighted) return EmpiricalMeasure(s);
  Vec w(m);
  for (int i = 0; i < m; ++i) w[i] = 0.1 + rng.uniform();
  return EmpiricalMeasure(s, w);
}

oracle::SignedCloud signed_cloud(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  oracle::SignedCloud sc;
  const int m = static_cast<int>(mu.size()), n = static_cast<int>(nu.size());
  sc.x.resize(m + n, mu.dim());
  sc.x.topRows(m) = mu.samples();
  sc.x.bottomRows(n) = nu.samples();
  sc.w.resize(m + n);
  sc.w.head(m) = mu.weights();
  sc.w.tail(n) = -nu.weights();
  return sc;
}

double oracle_bl(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const auto sc = signed_cloud(mu, nu);
  return oracle::golden_max([&](double a) { return oracle::transport_dual(sc, a); });
}

}  // namespace

TEST_CASE("point masses follow the closed form 2x/(x+2)") {
  for (double x : {0.25, 0.5, 1.0, 2.0, 3.0, 6.0, 10.0, 100.0}) {
    const auto r = bl_distance_exact(points_1d({0.0}), points_1d({x}));
    CHECK(r.value == doctest::Approx(2.0 * x / (x + 2.0)).epsilon(1e-12));
    CHECK(r.bound_kind == BoundKind::Exact);
  }
  CHECK(bl_distance_exact(points_1d({0.0}), points_1d({2.0})).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bl_distance_exact(points_1d({0.0}), points_1d({6.0})).value == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("point masses in two dimensions use the Euclidean distance") {
  Mat a(1, 2), b(1, 2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  const auto r = bl_distance_exact(EmpiricalMeasure(a), EmpiricalMeasure(b));
  CHECK(r.method == DistanceMethod::ExactLp);
  CHECK(r.value == doctest::Approx(10.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("identical measures are at distance zero") {
  CounterRng rng(1, 0);
  const auto mu = random_cloud(rng, 40, 1);
  CHECK(bl_distance_exact(mu, mu).value == doctest::Approx(0.0).epsilon(1e-14));
  const auto mu2 = random_cloud(rng, 30, 3);
  CHECK(bl_distance_exact(mu2, mu2).value < 1e-12);
  CHECK(bl_distance_sliced(mu2, mu2, 16, 7).value < 1e-12);
  CHECK(kantorovich_1d(mu, mu) == doctest::Approx(0.0));
}

TEST_CASE("kantorovich on the line") {
  CHECK(kantorovich_1d(points_1d({0.0}), points_1d({0.7})) == doctest::Approx(0.7));
  CHECK(kantorovich_1d(points_1d({0.0, 1.0}), points_1d({0.0, 2.0})) == doctest::Approx(0.5));
  Mat s(2, 2);
  s.setZero();
  CHECK_THROWS_AS(kantorovich_1d(EmpiricalMeasure(s), EmpiricalMeasure(s)), DomainError);
}

TEST_CASE("chain solver matches the dense transport LP on random lines") {
  CounterRng rng(2, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(32));
    const int n = 1 + static_cast<int>(rng.index(32));
    const auto mu = random_cloud(rng, m, 1, 0.0, trial % 2 == 1);
    const auto nu = random_cloud(rng, n, 1, rng.uniform() * 2.0, trial % 3 == 0);
    const double got = bl_distance_exact(mu, nu).value;
    const double want = oracle_bl(mu, nu);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("chain dual value decomposes into transport and disposal") {
  CounterRng rng(3, 0);
  const auto mu = random_cloud(rng, 20, 1), nu = random_cloud(rng, 25, 1, 0.5);
  std::vector<double> xa(20), xb(25);
  for (int i = 0; i < 20; ++i) xa[i] = mu.samples()(i, 0);
  for (int i = 0; i < 25; ++i) xb[i] = nu.samples()(i, 0);
  const PooledLine line = pool_1d(xa, as_span(mu.weights()), xb, as_span(nu.weights()));
  const auto sc = signed_cloud(mu, nu);
  for (double a : {0.0, 0.1, 0.37, 0.5, 0.8, 1.0}) {
    const ChainEval e = chain_dual_eval(line, a);
    CHECK(e.value == doctest::Approx(a * e.transport + (1 - a) * e.disposal).epsilon(1e-12));
    CHECK(e.value == doctest::Approx(oracle::transport_dual(sc, a)).epsilon(1e-9));
  }
  // Either end of the budget split forces a constant f.
  CHECK(chain_dual_eval(line, 0.0).value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(chain_dual_eval(line, 1.0).value == doctest::Approx(0.0).epsilon(1e-14));
  // Small alpha: all mass transported, so the cost is alpha * W1.
  CHECK(chain_dual_eval(line, 1e-3).value == doctest::Approx(1e-3 * kantorovich_line(line)).epsilon(1e-12));
}

TEST_CASE("the alpha profile is concave") {
  CounterRng rng(4, 0);
  const auto mu = random_cloud(rng, 15, 1), nu = random_cloud(rng, 15, 1, 1.0);
  std::vector<double> xa(15), xb(15);
  for (int i = 0; i < 15; ++i) {
    xa[i] = mu.samples()(i, 0);
    xb[i] = nu.samples()(i, 0);
  }
  const PooledLine line = pool_1d(xa, as_span(mu.weights()), xb, as_span(nu.weights()));
  const int K = 64;
  std::vector<double> g(K + 1);
  for (int i = 0; i <= K; ++i) g[i] = chain_dual_eval(line, static_cast<double>(i) / K).value;
  for (int i = 1; i < K; ++i) CHECK(g[i] >= 0.5 * (g[i - 1] + g[i + 1]) - 1e-12);
  CHECK(chain_bl_max(line).value >= *std::max_element(g.begin(), g.end()) - 1e-14);
}

TEST_CASE("multi-dimensional exact solver matches both LP oracles") {
  CounterRng rng(5, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 2 + trial % 3;
    const int m = 2 + static_cast<int>(rng.index(12)), n = 2 + static_cast<int>(rng.index(12));
    const auto mu = random_cloud(rng, m, k, 0.0, trial % 2 == 0);
    const auto nu = random_cloud(rng, n, k, 0.3 + rng.uniform(), false);
    CHECK(bl_distance_exact(mu, nu).value == doctest::Approx(oracle_bl(mu, nu)).epsilon(1e-8));
  }
  for (int trial = 0; trial < 6; ++trial) {
    const auto mu = random_cloud(rng, 3, 2, 0.0, true), nu = random_cloud(rng, 3, 2, 1.0, true);
    const auto sc = signed_cloud(mu, nu);
    const double direct = oracle::golden_max([&](double a) { return oracle::function_lp(sc, a); });
    CHECK(bl_distance_exact(mu, nu).value == doctest::Approx(direct).epsilon(1e-8));
  }
}

TEST_CASE("metric axioms on random samples") {
  CounterRng rng(6, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = trial % 2 ? 1 : 2;
    const auto a = random_cloud(rng, 12, k), b = random_cloud(rng, 15, k, 0.5), c = random_cloud(rng, 9, k, -0.4);
    const double ab = bl_distance_exact(a, b).value, ba = bl_distance_exact(b, a).value;
    const double bc = bl_distance_exact(b, c).value, ac = bl_distance_exact(a, c).value;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ac <= ab + bc + 1e-10);
    CHECK(ab > 0.0);
    CHECK(ab <= 2.0);
  }
}

TEST_CASE("bl is dominated by kantorovich and by 2 on the line") {
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_cloud(rng, 30, 1), b = random_cloud(rng, 20, 1, 3.0 * rng.uniform());
    const double bl = bl_distance_exact(a, b).value;
    CHECK(bl <= std::min(kantorovich_1d(a, b), 2.0) + 1e-12);
  }
  CHECK(bl_distance_exact(points_1d({0.0}), points_1d({1e9})).value <= 2.0);
}

TEST_CASE("sliced estimate is a lower bound close to the exact value") {
  CounterRng rng(8, 0);
  const auto mu = random_cloud(rng, 64, 2), nu = random_cloud(rng, 64, 2, 1.0);
  const double exact = bl_distance_exact(mu, nu).value;
  const auto sliced = bl_distance_sliced(mu, nu, 128, 11);
  CHECK(sliced.bound_kind == BoundKind::LowerEstimate);
  CHECK(sliced.n_slices == 128);
  CHECK(sliced.value <= exact + 1e-12);
  // Averaging |cos| over directions costs about 2/pi on a pure shift.
  CHECK(sliced.value >= 0.55 * exact);
  const auto tight = bl_distance_sliced(mu, nu, 128, 11, 1, SliceReduction::Max);
  CHECK(tight.value <= exact + 1e-12);
  CHECK(tight.value >= 0.75 * exact);
  CHECK(tight.value >= sliced.value);
}

TEST_CASE("sliced equals exact in one dimension and is reproducible") {
  CounterRng rng(9, 0);
  const auto mu = random_cloud(rng, 50, 1), nu = random_cloud(rng, 40, 1, 0.2);
  CHECK(bl_distance_sliced(mu, nu, 64, 3).value == bl_distance_exact(mu, nu).value);
  const auto a = random_cloud(rng, 50, 3), b = random_cloud(rng, 50, 3, 0.2);
  CHECK(bl_distance_sliced(a, b, 32, 5, 1).value == bl_distance_sliced(a, b, 32, 5, 4).value);
}

TEST_CASE("exact solver enforces the support cap in higher dimensions") {
  CounterRng rng(10, 0);
  const auto a = random_cloud(rng, 300, 2), b = random_cloud(rng, 300, 2);
  CHECK_THROWS_AS(bl_distance_exact(a, b), DomainError);
  const auto r = bl_distance_auto(a, b, DistanceOptions{});
  CHECK(r.method == DistanceMethod::Sliced);
}

TEST_CASE("weights are normalized and validated") {
  Mat s(2, 1);
  s << 0.0, 1.0;
  Vec w(2);
  w << 2.0, 6.0;
  const EmpiricalMeasure m(s, w);
  CHECK(m.weights().sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.weights()[1] == doctest::Approx(0.75));
  w << -1.0, 1.0;
  CHECK_THROWS_AS(EmpiricalMeasure(s, w), DomainError);
  // Weighted two-point law vs its mean of masses: 0.25 delta_0 + 0.75 delta_1 vs delta_1.
  CHECK(bl_distance_exact(m, points_1d({1.0})).value == doctest::Approx(0.25 * 2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("csv reader handles headers and weight columns") {
  std::istringstream is("x,y,w\n0,0,1\n1,0,3\n");
  const auto m = read_measure_csv(is, true);
  CHECK(m.dim() == 2);
  CHECK(m.size() == 2);
  CHECK(m.weights()[1] == doctest::Approx(0.75));
  std::istringstream bad("1,2\n3\n");
  CHECK_THROWS_AS(read_measure_csv(bad, false), DomainError);
}

TEST_CASE("distance report serializes method and bound kind") {
  const auto r = bl_distance_sliced(points_1d({0.0}), points_1d({1.0}));
  const auto j = r.to_json();
  CHECK(j["method"] == "sliced");
  CHECK(j["bound_kind"] == "exact");
  CHECK(j["value"].get<double>() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("convergence curve of the reference against itself is zero") {
  CounterRng rng(12, 0);
  const auto ref = random_cloud(rng, 200, 1);
  DistanceOptions opt;
  opt.bootstrap = 10;
  const auto rows = convergence_curve({{0.1, ref}, {0.01, ref}}, ref, opt);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.report.value < 1e-12);
    CHECK(r.report.ci_half_width >= 0.0);
  }
}

TEST_CASE("uniform sup rejects mismatched grids and finds the worst time") {
  CounterRng rng(13, 0);
  TimedLaws ref{0.0, {0.0, 1.0}, {random_cloud(rng, 50, 1), random_cloud(rng, 50, 1)}};
  TimedLaws near{0.1, {0.0, 1.0}, {ref.laws[0], random_cloud(rng, 50, 1, 2.0)}};
  DistanceOptions opt;
  opt.bootstrap = 0;
  const auto rows = uniform_in_time_sup({near}, ref, opt);
  CHECK(rows[0].argmax == 1);
  CHECK(rows[0].per_time[0] < 1e-12);
  TimedLaws bad{0.1, {0.0, 2.0}, near.laws};
  CHECK_THROWS_AS(uniform_in_time_sup({bad}, ref, opt), DomainError);
}
