#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slowfast/ensemble.hpp"
#include "slowfast/lifting.hpp"
#include "slowfast/measures.hpp"
#include "slowfast/path_io.hpp"
#include "slowfast/sde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace slowfast;

namespace {

void zero(OutSpan o) { std::fill(o.begin(), o.end(), 0.0); }

// d = d1 = n = 1: dI = -a I dt + s dW, dphi = theta/eps dt.
TorusSystem scalar_torus(double a, double s, double theta) {
  TorusSystem sys;
  sys.d = sys.n = sys.d1 = 1;
  sys.theta = [theta](ConstSpan, OutSpan o) { o[0] = theta; };
  sys.drift_I = [a](ConstSpan I, ConstSpan, OutSpan o) { o[0] = -a * I[0]; };
  sys.drift_phi = [](ConstSpan, ConstSpan, OutSpan o) { zero(o); };
  sys.disp_I = [s](ConstSpan, ConstSpan, OutSpan o) { o[0] = s; };
  sys.disp_phi = [](ConstSpan, ConstSpan, OutSpan o) { zero(o); };
  sys.name = "scalar";
  return sys;
}

// n = n1 blocks, W_k = 1 + k/2 + I_k/4, P = -gamma v, B = sigma Id.
BirkhoffSystem linear_birkhoff(int n, double gamma, double sigma) {
  BirkhoffSystem sys;
  sys.n = sys.n1 = n;
  sys.frequencies = [](ConstSpan I, OutSpan o) {
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = 1.0 + 0.5 * k + 0.25 * I[k];
  };
  sys.drift = [gamma](ConstSpan v, OutSpan o) {
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = -gamma * v[i];
  };
  const int m = 2 * n;
  sys.dispersion = [sigma, m](ConstSpan, OutSpan o) {
    zero(o);
    for (int i = 0; i < m; ++i) o[i * m + i] = sigma;
  };
  sys.name = "linear";
  return sys;
}

// Radially modulated noise and a non-equivariant drift for two blocks.
BirkhoffSystem generic_birkhoff() {
  BirkhoffSystem sys = linear_birkhoff(2, 1.0, 1.0);
  sys.drift = [](ConstSpan v, OutSpan o) {
    for (int i = 0; i < 4; ++i) o[i] = -v[i];
    o[0] += 0.5 * std::cos(v[1]);
    o[3] += 0.3 * v[0] * v[2] / (1.0 + v[0] * v[0]);
  };
  sys.dispersion = [](ConstSpan v, OutSpan o) {
    zero(o);
    const double r = v[0] * v[0] + v[1] * v[1];
    o[0] = 1.0 + 0.5 * r / (1.0 + r);
    o[5] = 0.8;
    o[10] = 1.0;
    o[15] = 1.0 + 0.2 * std::sin(v[2]);
    o[2] = 0.3;
  };
  return sys;
}

CartesianState cart(std::initializer_list<double> xs) {
  CartesianState s;
  s.v = Vec(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) s.v[i++] = x;
  return s;
}

IntegratorConfig config(double step, double horizon, std::size_t stride = 0) {
  IntegratorConfig c;
  c.step = step;
  c.horizon = horizon;
  c.record_stride = stride ? stride : static_cast<std::size_t>(std::llround(horizon / step));
  return c;
}

struct Stats {
  double mean = 0.0;
  double var = 0.0;
  double se() const { return std::sqrt(var / n); }
  double n = 0.0;
};

Stats stats(const std::vector<double>& x) {
  Stats s;
  s.n = static_cast<double>(x.size());
  for (double v : x) s.mean += v / s.n;
  for (double v : x) s.var += (v - s.mean) * (v - s.mean) / (s.n - 1);
  return s;
}

std::vector<double> final_column(const PathEnsemble& ens, int col) {
  std::vector<double> out;
  for (const auto& p : ens.paths) out.push_back(p.state(p.size() - 1)[col]);
  return out;
}

}  // namespace

TEST_CASE("integrator configuration is validated") {
  IntegratorConfig c = config(1e-2, 1.0);
  CHECK_NOTHROW(c.validate());
  CHECK(c.steps() == 100);
  c.step = 0.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = config(0.03, 1.0, 1);
  CHECK_THROWS_AS(c.validate(), PreconditionError);
  c = config(1e-2, 1.0);
  c.horizon = -1.0;
  CHECK_THROWS_AS(c.validate(), PreconditionError);

  for (Scheme s : {Scheme::EulerMaruyama, Scheme::RotationSplitEM}) CHECK(parse_scheme(to_string(s)) == s);
  for (BoundaryPolicy b : {BoundaryPolicy::ClampAtZero, BoundaryPolicy::ReflectAtZero})
    CHECK(parse_boundary_policy(to_string(b)) == b);
  CHECK_THROWS_AS(parse_scheme("milstein"), PreconditionError);
  CHECK_THROWS_AS(parse_boundary_policy("absorb"), PreconditionError);
}

TEST_CASE("unperturbed torus flow rotates the angles exactly") {
  TorusSystem sys = scalar_torus(0.0, 0.0, 1.3);
  const double eps = 0.01, T = 1.0;
  const ActionAngleState init{Vec::Constant(1, 0.7), Vec::Constant(1, 0.4)};
  const SdePath p = integrate_torus_system(sys, Epsilon(eps), init, config(1e-3, T, 100));
  REQUIRE(p.size() == 11);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p.state(i)[0] == 0.7);
    const double expect = wrap_angle(0.4 + 1.3 * p.times[i] / eps);
    CHECK(std::abs(std::remainder(p.state(i)[1] - expect, 2 * M_PI)) <= 1e-9);
  }
}

TEST_CASE("torus OU actions match the analytic law") {
  const TorusSystem sys = scalar_torus(1.0, std::sqrt(2.0), 0.9);
  const double I0 = 1.5;
  const ActionAngleState init{Vec::Constant(1, I0), Vec::Zero(1)};
  const auto cfg = config(1e-2, 1.0);
  const auto ens = run_ensemble(
      [&](const IntegratorConfig& c) { return integrate_torus_system(sys, Epsilon(0.05), init, c); }, 10000, cfg, 1);
  const Stats s = stats(final_column(ens, 0));
  CHECK(std::abs(s.mean - I0 * std::exp(-1.0)) <= 3 * s.se());
  // Standard error of the sample variance for a Gaussian: var sqrt(2/(n-1)).
  const double var = 1.0 - std::exp(-2.0);
  CHECK(std::abs(s.var - var) <= 3 * var * std::sqrt(2.0 / (s.n - 1)));
}

TEST_CASE("angle-independent coefficients decouple the actions from eps") {
  const TorusSystem sys = scalar_torus(1.0, 0.7, 2.0);
  const ActionAngleState init{Vec::Constant(1, 1.0), Vec::Zero(1)};
  auto cfg = config(1e-2, 1.0, 10);
  cfg.seed = 99;
  const SdePath a = integrate_torus_system(sys, Epsilon(0.1), init, cfg);
  const SdePath b = integrate_torus_system(sys, Epsilon(0.05), init, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.state(i)[0] == b.state(i)[0]);
}

TEST_CASE("unperturbed Birkhoff runs conserve every action") {
  BirkhoffSystem sys = linear_birkhoff(2, 0.0, 0.0);
  const CartesianState init = cart({0.6, -0.8, 1.1, 0.2});
  const Vec I0 = actions_of(init.v);
  for (double eps : {1e-1, 1e-3}) {
    const SdePath p = integrate_birkhoff_system(sys, Epsilon(eps), init, config(1e-4, 100.0));
    REQUIRE(p.size() == 2);
    const Vec I = actions_of(p.state_vec(1));
    CHECK((I - I0).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((p.state_vec(1) - init.v).norm() > 1e-3);
  }
}

TEST_CASE("a Birkhoff OU block is a rotated OU process") {
  const BirkhoffSystem sys = linear_birkhoff(1, 1.0, 1.0);
  const CartesianState init = cart({1.0, 0.5});
  const auto cfg = config(1e-2, 1.0);
  const auto ens = run_ensemble(
      [&](const IntegratorConfig& c) { return integrate_birkhoff_system(sys, Epsilon(0.01), init, c); }, 10000, cfg, 1);
  std::vector<double> r2;
  for (const auto& p : ens.paths) r2.push_back(p.state_vec(p.size() - 1).squaredNorm());
  const Stats s = stats(r2);
  const double expect = init.v.squaredNorm() * std::exp(-2.0) + (1.0 - std::exp(-2.0));
  CHECK(std::abs(s.mean - expect) <= 3 * s.se());
}

TEST_CASE("the action equation tracks the split path at rate one half") {
  const BirkhoffSystem sys = generic_birkhoff();
  const CartesianState init = cart({1.0, 0.2, -0.5, 0.9});
  const double T = 0.5;
  std::vector<double> coarse, fine;
  for (std::uint64_t path = 0; path < 30; ++path) {
    const CounterNoise base(7, path);
    for (double h : {4e-3, 1e-3}) {
      const AggregatedNoise noise(base, static_cast<unsigned>(std::llround(h / 2.5e-4)));
      auto cfg = config(h, T, 1);
      cfg.keep_increments = true;
      const SdePath v = integrate_birkhoff_system(sys, Epsilon(0.05), init, cfg, {}, &noise);
      const SdePath I = integrate_action_equation(sys, Epsilon(0.05), v);
      REQUIRE(I.size() == v.size());
      double err = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec a = actions_of(v.state_vec(i));
        for (int k = 0; k < 2; ++k) err = std::max(err, std::abs(a[k] - I.state(i)[k]));
      }
      (h > 2e-3 ? coarse : fine).push_back(err);
    }
  }
  std::nth_element(coarse.begin(), coarse.begin() + 15, coarse.end());
  std::nth_element(fine.begin(), fine.begin() + 15, fine.end());
  CHECK(coarse[15] / fine[15] >= 1.3);
}

TEST_CASE("effective equation paths") {
  SUBCASE("no drift, no noise: constant") {
    BirkhoffSystem sys = linear_birkhoff(1, 0.0, 0.0);
    const EffectiveModel model(sys, TorusQuadrature::tensor_trapezoid(1, 8));
    const CartesianState init = cart({0.3, -0.2});
    const SdePath p = integrate_effective(model, init, config(1e-2, 1.0, 10));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.state_vec(i) == init.v);
  }
  SUBCASE("OU stationary law") {
    const EffectiveModel model(linear_birkhoff(1, 1.0, 1.0), TorusQuadrature::tensor_trapezoid(1, 8));
    const auto ens = run_ensemble(
        [&](const IntegratorConfig& c) { return integrate_effective(model, cart({2.0, 0.0}), c); }, 5000,
        config(1e-2, 4.0), 1);
    const Stats x = stats(final_column(ens, 0));
    CHECK(std::abs(x.var - 0.5) <= 3 * 0.5 * std::sqrt(2.0 / (x.n - 1)) + 0.01);
    std::vector<double> I;
    for (const auto& p : ens.paths) I.push_back(actions_of(p.state_vec(p.size() - 1))[0]);
    const Stats s = stats(I);
    // Euler bias of the stationary variance at h = 0.01 is about h/4.
    CHECK(std::abs(s.mean - 0.5) <= 3 * s.se() + 0.005);
  }
}

TEST_CASE("averaged action paths") {
  const auto q = TorusQuadrature::tensor_trapezoid(2, 8);
  SUBCASE("no coefficients: constant") {
    const AveragedActionModel model(linear_birkhoff(2, 0.0, 0.0), q);
    Vec I0(2);
    I0 << 0.4, 0.9;
    const SdePath p = integrate_averaged_actions(model, I0, config(1e-2, 1.0, 10));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.state_vec(i) == I0);
  }
  SUBCASE("stationary mean and positivity under both boundary policies") {
    const AveragedActionModel model(linear_birkhoff(1, 1.0, 1.0), TorusQuadrature::tensor_trapezoid(1, 8));
    const Vec I0 = Vec::Constant(1, 0.05);
    for (BoundaryPolicy b : {BoundaryPolicy::ClampAtZero, BoundaryPolicy::ReflectAtZero}) {
      CAPTURE(to_string(b));
      auto cfg = config(1e-2, 4.0, 1);
      cfg.boundary = b;
      const auto ens = run_ensemble(
          [&](const IntegratorConfig& c) { return integrate_averaged_actions(model, I0, c); }, 3000, cfg, 1);
      double lowest = 1.0;
      for (const auto& p : ens.paths)
        for (double x : p.states) lowest = std::min(lowest, x);
      CHECK(lowest >= 0.0);
      const Stats s = stats(final_column(ens, 0));
      CHECK(std::abs(s.mean - 0.5) <= 3 * s.se() + 0.01);
    }
  }
  SUBCASE("effective and averaged action laws agree") {
    const EffectiveModel eff(linear_birkhoff(1, 1.0, 1.0), TorusQuadrature::tensor_trapezoid(1, 8));
    const AveragedActionModel avg(linear_birkhoff(1, 1.0, 1.0), TorusQuadrature::tensor_trapezoid(1, 8));
    const CartesianState init = cart({1.0, 0.0});
    auto cfg = config(1e-2, 1.0);
    const auto a = run_ensemble([&](const IntegratorConfig& c) { return integrate_effective(eff, init, c); }, 4000,
                                cfg, 1);
    cfg.seed = 1;
    const auto b = run_ensemble(
        [&](const IntegratorConfig& c) { return integrate_averaged_actions(avg, actions_of(init.v), c); }, 4000, cfg,
        1);
    const EmpiricalMeasure la(observe(a, 1, birkhoff_actions(1), 1));
    const EmpiricalMeasure lb(observe(b, 1, leading_coordinates(1), 1));
    CHECK(bl_distance_exact(la, lb).value <= 0.05);
  }
}

TEST_CASE("ensembles are deterministic and scale like Monte Carlo") {
  const TorusSystem sys = scalar_torus(1.0, 1.0, 1.0);
  const ActionAngleState init{Vec::Constant(1, 1.0), Vec::Zero(1)};
  const PathTask task = [&](const IntegratorConfig& c) { return integrate_torus_system(sys, Epsilon(0.1), init, c); };
  auto cfg = config(0.05, 1.0, 5);
  cfg.seed = 1234;
  const auto one = run_ensemble(task, 64, cfg, 1);
  const auto many = run_ensemble(task, 64, cfg, 8);
  REQUIRE(one.size() == 64);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(one.paths[i].states == many.paths[i].states);
    CHECK(one.paths[i].times == many.paths[i].times);
  }
  IntegratorConfig direct = cfg;
  direct.trajectory_id = 0;
  CHECK(run_ensemble(task, 1, cfg, 1).paths[0].states == task(direct).states);
  CHECK(one.paths[0].states != one.paths[1].states);

  // Standard error of the mean over 2000 vs 8000 paths.
  const Stats small = stats(final_column(run_ensemble(task, 2000, cfg, 1), 0));
  const Stats large = stats(final_column(run_ensemble(task, 8000, cfg, 1), 0));
  CHECK(small.se() / large.se() == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("numerical failures carry the step and path index") {
  TorusSystem sys = scalar_torus(1.0, 1.0, 1.0);
  sys.drift_I = [](ConstSpan I, ConstSpan, OutSpan o) { o[0] = I[0] > 2.0 ? std::nan("") : 1.0; };
  const ActionAngleState init{Vec::Constant(1, 0.0), Vec::Zero(1)};
  try {
    integrate_torus_system(scalar_torus(1.0, 0.0, 1.0), Epsilon(0.1), init, config(0.1, 1.0));
    auto cfg = config(0.1, 5.0);
    integrate_torus_system(sys, Epsilon(0.1), init, cfg);
    FAIL("no error");
  } catch (const IntegrationError& e) {
    CHECK(e.step() > 0);
  }
  try {
    run_ensemble([&](const IntegratorConfig& c) { return integrate_torus_system(sys, Epsilon(0.1), init, c); }, 3,
                 config(0.1, 5.0), 1);
    FAIL("no error");
  } catch (const EnsembleError& e) {
    CHECK(e.path_index() == 0);
    CHECK(e.numerical());
  }
}

TEST_CASE("stopping rules freeze the path") {
  const BirkhoffSystem sys = linear_birkhoff(1, -1.0, 1.0);
  const CartesianState init = cart({1.0, 0.0});
  auto cfg = config(1e-2, 5.0, 1);
  cfg.seed = 3;
  const SdePath p = integrate_birkhoff_system(sys, Epsilon(0.1), init, cfg, StoppingRule::exit_action_ball(2.0));
  REQUIRE(p.stopped_at.has_value());
  REQUIRE(p.stop_time.has_value());
  CHECK(actions_of(p.state_vec(*p.stopped_at)).norm() >= 2.0);
  for (std::size_t i = *p.stopped_at; i < p.size(); ++i) CHECK(p.state_vec(i) == p.state_vec(*p.stopped_at));
  CHECK(p.times.back() == doctest::Approx(5.0));

  CHECK(StoppingRule::action_floor(0.1).triggered(std::vector<double>{0.05, 1.0}, std::vector<double>{}));
  CHECK_FALSE(StoppingRule::none().triggered(std::vector<double>{100.0}, std::vector<double>{}));
  CHECK_THROWS_AS(StoppingRule::exit_norm_ball(0.0), PreconditionError);
}

TEST_CASE("exit-time experiment without exits") {
  const BirkhoffSystem sys = linear_birkhoff(1, 1.0, 1.0);
  auto cfg = config(1e-2, 0.1, 5);
  const auto res = exit_time_experiment(sys, {0.1, 0.01}, cart({0.5, 0.0}), 1e6, cfg, 50,
                                        TorusQuadrature::tensor_trapezoid(1, 8), 1);
  REQUIRE(res.per_eps.size() == 2);
  for (const auto* law : {&res.per_eps[0], &res.per_eps[1], &res.reference}) {
    CHECK(std::count(law->exited.begin(), law->exited.end(), 1) == 0);
    for (double t : law->exit_times) CHECK(t == doctest::Approx(0.1));
    CHECK(law->actions.size() == law->times.size());
    CHECK(law->actions.front().rows() == 50);
  }
  CHECK(res.reference.eps == 0.0);
  CHECK_THROWS_AS(exit_time_experiment(sys, {0.1}, cart({3.0, 0.0}), 1.0, cfg, 5,
                                       TorusQuadrature::tensor_trapezoid(1, 8), 1),
                  PreconditionError);
}

TEST_CASE("occupation fractions") {
  const BirkhoffSystem sys = linear_birkhoff(1, 1.0, 1.0);
  const auto ens = run_ensemble(
      [&](const IntegratorConfig& c) { return integrate_birkhoff_system(sys, Epsilon(0.1), cart({1.0, 0.0}), c); },
      500, config(1e-2, 2.0, 1), 1);
  CHECK(occupation_fraction(ens, [](ConstSpan) { return false; }).value == 0.0);
  CHECK(occupation_fraction(ens, [](ConstSpan) { return true; }).value == doctest::Approx(2.0));
  double last = 3.0;
  for (double delta : {0.4, 0.2, 0.1, 0.05, 0.02}) {
    const auto o = occupation_fraction(ens, [delta](ConstSpan v) { return 0.5 * (v[0] * v[0] + v[1] * v[1]) <= delta; });
    CHECK(o.value <= last);
    CHECK(o.n_paths == 500);
    last = o.value;
  }
  CHECK(last < 0.1);
}

TEST_CASE("lifted companion") {
  SUBCASE("unperturbed path: a fixed rotation") {
    const BirkhoffSystem sys = linear_birkhoff(2, 0.0, 0.0);
    auto cfg = config(1e-3, 0.5, 1);
    cfg.keep_increments = true;
    const SdePath p = integrate_birkhoff_system(sys, Epsilon(0.01), cart({0.8, 0.0, 0.0, 1.2}), cfg);
    const auto l = lifted_companion(sys, Epsilon(0.01), p, 1, 0.1);
    CHECK(l.max_norm_mismatch <= 1e-14);
    CHECK(l.tau_minus.empty());
    CHECK(l.states.size() == 2 * p.size());
  }
  SUBCASE("generic path: norm identity at a fine step") {
    const BirkhoffSystem sys = generic_birkhoff();
    auto cfg = config(1e-4, 0.5, 1);
    cfg.keep_increments = true;
    cfg.seed = 21;
    for (double eps : {1e-1, 1e-3}) {
      const SdePath p = integrate_birkhoff_system(sys, Epsilon(eps), cart({1.0, 0.0, 0.0, 1.0}), cfg);
      const auto l = lifted_companion(sys, Epsilon(eps), p, 0, 0.1);
      CHECK(l.relative_norm_mismatch <= 1e-6);
      CHECK(l.lambda_steps + l.delta_steps == p.size() - 1);
      CHECK(l.lambda_drift_bound < l.raw_drift_bound);
    }
  }
  SUBCASE("paths without increments are rejected") {
    const BirkhoffSystem sys = linear_birkhoff(1, 1.0, 1.0);
    const SdePath p = integrate_birkhoff_system(sys, Epsilon(0.1), cart({1.0, 0.0}), config(1e-2, 0.1, 1));
    CHECK_THROWS_AS(lifted_companion(sys, Epsilon(0.1), p, 0, 0.1), PreconditionError);
  }
}

TEST_CASE("paths round-trip through CSV and the binary frame") {
  const BirkhoffSystem sys = linear_birkhoff(1, -1.0, 1.0);
  auto cfg = config(1e-2, 2.0, 1);
  cfg.keep_increments = true;
  cfg.seed = 3;
  const SdePath p = integrate_birkhoff_system(sys, Epsilon(0.1), cart({1.0, 0.0}), cfg, StoppingRule::exit_action_ball(2.0));

  std::stringstream bin;
  write_path_binary(p, bin);
  CHECK(bin.str().substr(0, 5) == "SFAV1");
  const SdePath q = read_path_binary(bin);
  CHECK(q.state_dim == p.state_dim);
  CHECK(q.noise_dim == p.noise_dim);
  CHECK(q.step == p.step);
  CHECK(q.times == p.times);
  CHECK(q.states == p.states);
  CHECK(q.increments == p.increments);
  CHECK(q.stopped_at == p.stopped_at);

  std::stringstream bad("SFAV2 garbage");
  CHECK_THROWS(read_path_binary(bad));

  std::ostringstream csv;
  write_path_csv(p, csv, {"x", "y"});
  std::istringstream in(csv.str());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "time,x,y");
  CHECK(first.rfind("0,1,0", 0) == 0);
  std::size_t lines = 1;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == p.size());
}
