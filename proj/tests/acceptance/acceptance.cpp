// Acceptance checks. Each criterion prints one PASS/FAIL line with its
// measured values and wall time against its budget.

#include "slowfast/builtins.hpp"
#include "slowfast/effective.hpp"
#include "slowfast/ensemble.hpp"
#include "slowfast/measures.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/normal_form.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/scenario.hpp"
#include "slowfast/sde.hpp"
#include "slowfast/torus_averaging.hpp"
#include "support/lp_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a named check; the line lists every measured value.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [violated]");
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<void(Outcome&)> run;
};

fs::path output_dir(int id) {
  const fs::path p = fs::path("acceptance-out") / ("c" + std::to_string(id));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json run_toml(const std::string& text, const fs::path& dir, std::size_t threads) {
  const PreparedScenario p = prepare_scenario(scenario_from_json(parse_toml(text)));
  return run_scenario(p, {dir.string(), threads, nullptr});
}

std::size_t threads() { return default_parallelism(); }

const nlohmann::json* find_row(const nlohmann::json& report, double eps) {
  for (const auto& row : report["distances"])
    if (std::abs(row["eps"].get<double>() - eps) <= 1e-12 * eps) return &row;
  return nullptr;
}

std::string rows_summary(const nlohmann::json& report) {
  std::string s;
  for (const auto& row : report["distances"])
    s += (s.empty() ? "" : " ") + fmt(row["eps"].get<double>()) + ":" + fmt(row["distance"].get<double>()) + "+-" +
         fmt(row["ci_half_width"].get<double>());
  return s;
}

std::shared_ptr<const ActionProfile> duffing_profile() {
  static const auto p = [] {
    const Hamiltonian1D ham = builtin_hamiltonian("duffing");
    return std::make_shared<const ActionProfile>(build_action_profile(ham, default_level_grid(ham)));
  }();
  return p;
}

BirkhoffSystem radial_noise() { return *make_builtin("radial-noise").birkhoff; }

Vec random_state(std::mt19937_64& gen, int m, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = g(gen);
  return v;
}

struct Stats {
  double mean = 0.0, var = 0.0, n = 0.0;
  double se() const { return std::sqrt(var / n); }
};

Stats stats(const std::vector<double>& x) {
  Stats s;
  s.n = static_cast<double>(x.size());
  for (double v : x) s.mean += v / s.n;
  for (double v : x) s.var += (v - s.mean) * (v - s.mean) / (s.n - 1);
  return s;
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

// ---------------------------------------------------------------------------

void c1_square_roots(Outcome& out) {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> dim(1, 8);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = dim(gen);
    Mat G(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) G(i, j) = g(gen);
    const Mat A = G * G.transpose() + 1e-3 * Mat::Identity(m, m);
    const Mat K = principal_sqrt(A);
    worst = std::max(worst, (K * K - A).norm() / A.norm());
  }
  out.check(worst <= 1e-10, "spd sqrt rel residual " + fmt(worst));

  for (const std::string name : {"ou", "constant-shift", "radial-noise", "duffing-chain"}) {
    const BuiltSystem s = make_builtin(name, {}, name == "duffing-chain" ? duffing_profile() : nullptr);
    const BirkhoffSystem& sys = *s.birkhoff;
    const auto qn = TorusQuadrature::tensor_trapezoid(sys.n, 16);
    double w = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Vec v = random_state(gen, 2 * sys.n, 0.6);
      const Mat X = effective_gram(sys, v, qn);
      const Mat D = effective_dispersion(sys, v, qn);
      w = std::max(w, (D * D.transpose() - X).norm() / X.norm());
    }
    out.check(w <= 1e-10, name + " DD^T=X rel " + fmt(w));
  }
}

void c2_equivariance(Outcome& out) {
  const BirkhoffSystem sys = radial_noise();
  const auto r64 = check_equivariance(sys, TorusQuadrature::tensor_trapezoid(sys.n, 64), 100, 202);
  const auto r32 = check_equivariance(sys, TorusQuadrature::tensor_trapezoid(sys.n, 32), 100, 202);
  const double d64 = std::max(r64.drift_defect, r64.dispersion_defect);
  const double d32 = std::max(r32.drift_defect, r32.dispersion_defect);
  out.check(d64 <= 1e-8, "defect(64) " + fmt(d64));
  out.check(d32 >= 4.0 * d64, "defect(32) " + fmt(d32) + " ratio " + fmt(d64 > 0 ? d32 / d64 : INFINITY));
}

void c3_action_consistency(Outcome& out) {
  const BirkhoffSystem sys = radial_noise();
  const auto r = check_action_consistency(sys, TorusQuadrature::tensor_trapezoid(sys.n, 64), 100, 303, 0.01);
  out.check(r.drift_mismatch <= 1e-8, "drift mismatch " + fmt(r.drift_mismatch));
  out.check(r.diffusion_mismatch <= 1e-8, "diffusion mismatch " + fmt(r.diffusion_mismatch));
  out.check(r.trials == 100, "trials " + std::to_string(r.trials));
}

void c4_conservation(Outcome& out) {
  BirkhoffSystem sys = radial_noise();
  sys.drift = [](ConstSpan, OutSpan o) { std::fill(o.begin(), o.end(), 0.0); };
  sys.dispersion = [](ConstSpan, OutSpan o) { std::fill(o.begin(), o.end(), 0.0); };
  CartesianState init;
  init.v = Vec(4);
  init.v << 0.6, -0.8, 1.1, 0.2;
  const Vec I0 = actions_of(init.v);
  IntegratorConfig cfg;
  cfg.step = 1e-4;
  cfg.horizon = 100.0;
  cfg.record_stride = cfg.steps();
  for (double eps : {1e-1, 1e-3}) {
    const SdePath p = integrate_birkhoff_system(sys, Epsilon(eps), init, cfg);
    const double drift = (actions_of(p.state_vec(p.size() - 1)) - I0).cwiseAbs().maxCoeff();
    out.check(drift <= 1e-10, "eps " + fmt(eps) + " steps " + std::to_string(cfg.steps()) + " |dI| " + fmt(drift));
  }
}

void c5_ito_rate(Outcome& out) {
  const BirkhoffSystem sys = radial_noise();
  const Epsilon eps(0.01);
  CartesianState init;
  init.v = Vec(4);
  init.v << 1.0, 0.0, 1.0, 0.0;
  const double T = 1.0, fine = 1e-3;
  const std::vector<double> steps = {4e-3, 2e-3, 1e-3};
  std::vector<std::vector<double>> err(steps.size(), std::vector<double>(100));
  parallel_for(100, threads(), [&](std::size_t path) {
    const CounterNoise base(505, path);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const AggregatedNoise noise(base, static_cast<unsigned>(std::llround(steps[s] / fine)));
      IntegratorConfig cfg;
      cfg.step = steps[s];
      cfg.horizon = T;
      cfg.record_stride = 1;
      cfg.keep_increments = true;
      const SdePath v = integrate_birkhoff_system(sys, eps, init, cfg, {}, &noise);
      const SdePath I = integrate_action_equation(sys, eps, v);
      double e = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec a = actions_of(v.state_vec(i));
        for (int k = 0; k < sys.n; ++k) e = std::max(e, std::abs(a[k] - I.state(i)[k]));
      }
      err[s][path] = e;
    }
  });
  std::vector<double> med;
  for (const auto& e : err) med.push_back(median(e));
  for (std::size_t s = 0; s + 1 < med.size(); ++s) {
    const double ratio = med[s] / med[s + 1];
    out.check(ratio >= 1.3, "h " + fmt(steps[s]) + "->" + fmt(steps[s + 1]) + " median sup err " + fmt(med[s]) + "->" +
                                fmt(med[s + 1]) + " ratio " + fmt(ratio));
  }
}

void c6_effective_ou(Outcome& out) {
  const BirkhoffSystem sys = *make_builtin("ou").birkhoff;
  const EffectiveModel model(sys, TorusQuadrature::tensor_trapezoid(1, 16));
  CartesianState init;
  init.v = Vec(2);
  init.v << 1.0, 0.5;
  IntegratorConfig cfg;
  cfg.step = 5e-3;
  cfg.horizon = 5.0;
  cfg.record_stride = 200;  // tau = 1, 2, ..., 5; the initial law has decayed by e^-10 at tau = 5
  cfg.seed = 606;
  const auto ens =
      run_ensemble([&](const IntegratorConfig& c) { return integrate_effective(model, init, c); }, 10000, cfg, threads());
  const Mat at1 = observe(ens, 1, [](ConstSpan s, OutSpan o) { o[0] = s[0], o[1] = s[1]; }, 2);
  const double decay = std::exp(-1.0), var = 0.5 * (1.0 - std::exp(-2.0));
  for (int c = 0; c < 2; ++c) {
    std::vector<double> x(at1.rows());
    for (Eigen::Index i = 0; i < at1.rows(); ++i) x[i] = at1(i, c);
    const Stats s = stats(x);
    const double z_mean = std::abs(s.mean - init.v[c] * decay) / s.se();
    const double z_var = std::abs(s.var - var) / (s.var * std::sqrt(2.0 / (s.n - 1)));
    out.check(z_mean <= 3.0, "v" + std::to_string(c) + "(1) mean " + fmt(s.mean) + " z " + fmt(z_mean));
    out.check(z_var <= 3.0, "v" + std::to_string(c) + "(1) var " + fmt(s.var) + " z " + fmt(z_var));
  }
  const Mat Iend = observe(ens, ens.paths.front().size() - 1, birkhoff_actions(1), 1);
  std::vector<double> I(Iend.data(), Iend.data() + Iend.size());
  const Stats s = stats(I);
  const double z = std::abs(s.mean - 0.5) / s.se();
  out.check(z <= 3.0, "E I(5) " + fmt(s.mean) + " z " + fmt(z));
}

const char* kC7 = R"(
experiment = "averaging-convergence"
seed = 7
[system]
name = "rotator"
params = { theta = [0.2], gamma = 1.0, b = 0.0, c = 1.0, A = 1.0, sigma = 0.08, sigma_phi = 3.0 }
[run]
eps_grid = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
horizon = 1.0
step = 1e-3
record_every = 0.1
n_paths = 10000
init_actions = [1.0]
init_angles = [1.5707963267948966]
[quadrature]
kind = "tensor-trapezoid"
points_per_dim = 8
)";

void c7_convergence(Outcome& out) {
  const auto report = run_toml(kC7, output_dir(7), threads());
  out.check(report["results"]["decreasing_beyond_ci"].get<bool>(), "decreasing beyond CI: " + rows_summary(report));
  const auto* last = find_row(report, 1e-3);
  out.check(last && (*last)["distance"].get<double>() <= 0.05,
            "d(1e-3) " + (last ? fmt((*last)["distance"].get<double>()) : std::string("missing")) + " <= 0.05");
}

void c8_uniform(Outcome& out) {
  const auto report = run_toml(R"(
experiment = "uniform-in-time"
seed = 8
[system]
name = "constant-shift"
params = { w = 0.2, A = 5.0 }
[run]
eps_grid = [1e-1, 1e-2, 1e-3]
horizon = 10.0
step = 1e-3
record_every = 0.5
n_paths = 5000
init_state = [0.0, 0.0]
[quadrature]
kind = "tensor-trapezoid"
points_per_dim = 16
)",
                               output_dir(8), threads());
  out.check(report["results"]["decreasing_beyond_ci"].get<bool>(), "sup distance decreasing beyond CI: " + rows_summary(report));
}

void c9_exit(Outcome& out) {
  const auto report = run_toml(R"(
experiment = "exit-time"
seed = 9
[system]
name = "ou"
[run]
eps_grid = [1e-1, 1e-2, 1e-3]
horizon = 2.0
step = 1e-3
record_every = 0.1
n_paths = 10000
init_state = [1.0, 0.0]
[exit]
radius = 3.0
s_bar = 0.1
[quadrature]
kind = "tensor-trapezoid"
points_per_dim = 16
)",
                               output_dir(9), threads());
  const auto* last = find_row(report, 1e-3);
  out.check(last && (*last)["distance"].get<double>() <= 0.08,
            "stopped-law d(1e-3) " + (last ? fmt((*last)["distance"].get<double>()) : std::string("missing")) +
                " <= 0.08 (" + rows_summary(report) + ")");
  for (const auto& e : report["results"]["early_exit"]) {
    const double p = e["p_exit_before_s_bar"].get<double>();
    out.check(p < 0.05, "P(exit < s_bar | eps " + fmt(e["eps"].get<double>()) + ") " + fmt(p));
  }
}

EmpiricalMeasure gaussian_cloud(CounterRng& rng, int m, int k, double shift, bool weighted) {
  Mat s(m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) s(i, j) = rng.normal() + (j == 0 ? shift : 0.0);
  if (!weighted) return EmpiricalMeasure(s);
  Vec w(m);
  for (int i = 0; i < m; ++i) w[i] = 0.1 + rng.uniform();
  return EmpiricalMeasure(s, w);
}

double oracle_bl(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  oracle::SignedCloud sc;
  const int m = static_cast<int>(mu.size()), n = static_cast<int>(nu.size());
  sc.x.resize(m + n, mu.dim());
  sc.x.topRows(m) = mu.samples();
  sc.x.bottomRows(n) = nu.samples();
  sc.w.resize(m + n);
  sc.w.head(m) = mu.weights();
  sc.w.tail(n) = -nu.weights();
  return oracle::golden_max([&](double a) { return oracle::transport_dual(sc, a); });
}

void c10_distances(Outcome& out) {
  double worst_point = 0.0;
  for (double x : {0.1, 0.5, 1.0, 2.0, 3.0, 10.0, 1e3}) {
    Mat a(1, 1), b(1, 1);
    a(0, 0) = 0.0;
    b(0, 0) = x;
    const double d = bl_distance_exact(EmpiricalMeasure(a), EmpiricalMeasure(b)).value;
    worst_point = std::max(worst_point, std::abs(d - 2.0 * x / (x + 2.0)));
  }
  out.check(worst_point <= 1e-9, "point masses err " + fmt(worst_point));

  CounterRng rng(1010, 0);
  double worst_lp = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 3;
    const int m = 2 + static_cast<int>(rng.index(31)), n = 2 + static_cast<int>(rng.index(31));
    const auto mu = gaussian_cloud(rng, m, k, 0.0, trial % 2 == 0);
    const auto nu = gaussian_cloud(rng, n, k, 1.5 * rng.uniform(), trial % 4 == 1);
    const double ours = bl_distance_exact(mu, nu).value, ref = oracle_bl(mu, nu);
    worst_lp = std::max(worst_lp, std::abs(ours - ref) / std::max(1.0, ref));
  }
  out.check(worst_lp <= 1e-8, "LP oracle rel err " + fmt(worst_lp) + " over 50 instances");

  const auto a = gaussian_cloud(rng, 10000, 3, 0.0, false), b = gaussian_cloud(rng, 10000, 3, 0.0, false);
  const double sliced = bl_distance_sliced(a, b, kDefaultSlices, 10, threads()).value;
  out.check(sliced <= 0.03, "sliced on identical laws " + fmt(sliced));
}

void c11_lifting(Outcome& out) {
  const auto report = run_toml(R"(
experiment = "lifting-diagnostic"
seed = 11
[system]
name = "radial-noise"
[run]
eps_grid = [1e-1, 1e-2, 1e-3]
horizon = 1.0
step = 1e-4
n_paths = 500
init_state = [1.0, 0.0, 1.0, 0.0]
[lifting]
block = 0
delta = 0.1
)",
                               output_dir(11), threads());
  for (const auto& e : report["results"]["per_eps"]) {
    const double mis = e["max_relative_norm_mismatch"].get<double>();
    out.check(mis <= 1e-6, "eps " + fmt(e["eps"].get<double>()) + " norm mismatch " + fmt(mis) + " drift bound " +
                               fmt(e["mean_lambda_drift_bound"].get<double>()) + " (raw " +
                               fmt(e["mean_raw_drift_bound"].get<double>()) + ")");
  }
  const double var = report["results"]["drift_bound_variation"].get<double>();
  out.check(var <= 0.10, "drift bound variation " + fmt(var));
}

// Point on a random level in (0.05, 0.95) a_max along a random ray.
Eigen::Vector2d random_point(const Hamiltonian1D& ham, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = ham.a_max * (0.05 + 0.9 * u(gen));
  const double psi = kTwoPi * u(gen);
  double lo = 0.0, hi = 1.0;
  while (ham.H(hi * std::cos(psi), hi * std::sin(psi)) < a) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ham.H(mid * std::cos(psi), mid * std::sin(psi)) < a ? lo : hi) = mid;
  }
  return {lo * std::cos(psi), lo * std::sin(psi)};
}

void c12_normal_form(Outcome& out) {
  const auto harmonic = harmonic_hamiltonian();
  double worst_h = 0.0;
  for (double a : {1e-3, 0.1, 0.5, 1.0, 2.5, 4.0})
    worst_h = std::max(worst_h, std::abs(action_of_level(harmonic, a) - a) / a);
  out.check(worst_h <= 1e-8, "harmonic I(a)=a rel " + fmt(worst_h));

  const auto quartic = quartic_radial_hamiltonian();
  const auto pq = build_action_profile(quartic, default_level_grid(quartic));
  double worst_w = 0.0;
  for (double I = 0.0; I <= pq.max_action(); I += 0.01) worst_w = std::max(worst_w, std::abs(pq.omega(I) - (1 + 2 * I)));
  out.check(worst_w <= 1e-4, "quartic omega=1+2I err " + fmt(worst_w));

  const auto duffing = duffing_hamiltonian(1.0);
  const double a = 1.0;
  const double xmax = std::sqrt(std::sqrt(1.0 + 4.0 * a) - 1.0), ymax = std::sqrt(2.0 * a);
  std::mt19937_64 mc(1212);
  std::uniform_real_distribution<double> ux(-xmax, xmax), uy(-ymax, ymax);
  const std::size_t samples = 20000000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i)
    if (duffing.H(ux(mc), uy(mc)) <= a) ++hits;
  const double I_mc = 4.0 * xmax * ymax * static_cast<double>(hits) / static_cast<double>(samples) / kTwoPi;
  const double I_d = action_of_level(duffing, a);
  out.check(std::abs(I_d - I_mc) / I_d <= 1e-3, "duffing I(1) " + fmt(I_d) + " vs MC " + fmt(I_mc));

  for (const auto& ham : {harmonic, quartic, duffing}) {
    const auto p = build_action_profile(ham, default_level_grid(ham));
    std::mt19937_64 gen(12);
    double trip = 0.0, det = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto z = random_point(ham, gen);
      const auto aa = aa_transform_1dof(ham, p, z.x(), z.y());
      trip = std::max(trip, (aa_inverse_1dof(ham, p, aa.I, aa.phi) - z).norm());
      if (i % 10 == 0) {
        const double e = 1e-5;
        const auto px = aa_transform_1dof(ham, p, z.x() + e, z.y());
        const auto mx = aa_transform_1dof(ham, p, z.x() - e, z.y());
        const auto py = aa_transform_1dof(ham, p, z.x(), z.y() + e);
        const auto my = aa_transform_1dof(ham, p, z.x(), z.y() - e);
        const double dIx = (px.I - mx.I) / (2 * e), dIy = (py.I - my.I) / (2 * e);
        const double dpx = std::remainder(px.phi - mx.phi, kTwoPi) / (2 * e);
        const double dpy = std::remainder(py.phi - my.phi, kTwoPi) / (2 * e);
        det = std::max(det, std::abs(dIx * dpy - dIy * dpx - 1.0));
      }
    }
    out.check(trip <= 1e-6, ham.name + " round trip " + fmt(trip));
    out.check(det <= 1e-5, ham.name + " jacobian defect " + fmt(det));
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void c13_reproducible(Outcome& out) {
  const fs::path base = output_dir(13);
  run_toml(kC7, base / "t1", 1);
  run_toml(kC7, base / "t8", 8);
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(base / "t1")) {
    if (!entry.is_regular_file() || entry.path().filename() == "timing.json") continue;
    const fs::path rel = fs::relative(entry.path(), base / "t1");
    ++compared;
    if (!fs::exists(base / "t8" / rel) || slurp(entry.path()) != slurp(base / "t8" / rel)) {
      ++differing;
      out.check(false, "differs: " + rel.string());
    }
  }
  out.check(compared >= 3 && differing == 0,
            std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ");
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "Gram square root and DD^T identity", 10, c1_square_roots},
      {2, "equivariance of the effective coefficients", 30, c2_equivariance},
      {3, "action-level consistency", 30, c3_action_consistency},
      {4, "action conservation of the split scheme", 60, c4_conservation},
      {5, "Ito action equation strong rate", 120, c5_ito_rate},
      {6, "effective OU moments and stationarity", 60, c6_effective_ou},
      {7, "averaging convergence on the rotator", 600, c7_convergence},
      {8, "uniform-in-time convergence, constant shift", 900, c8_uniform},
      {9, "exit-time stopped laws", 600, c9_exit},
      {10, "bounded-Lipschitz distance oracles", 120, c10_distances},
      {11, "lifting diagnostic", 300, c11_lifting},
      {12, "normal-form oracles", 120, c12_normal_form},
      {13, "thread-count reproducibility", 1200, c13_reproducible},
  };
  return all;
}

bool run_one(const Criterion& c) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    c.run(out);
  } catch (const std::exception& e) {
    out.check(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_budget = secs <= c.budget_s;
  const bool pass = out.pass && in_budget;
  std::printf("%s C%d %s: %s [%.1f s / budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
              out.detail.str().c_str(), secs, c.budget_s, in_budget ? "" : ", over budget");
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  bool list = false;
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 13));
  app.add_flag("--list", list, "List the criteria");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : criteria()) std::printf("C%d %s (budget %.0f s)\n", c.id, c.name.c_str(), c.budget_s);
    return 0;
  }
  bool all = true;
  for (const auto& c : criteria())
    if (only == 0 || c.id == only) all = run_one(c) && all;
  return all ? 0 : 1;
}
