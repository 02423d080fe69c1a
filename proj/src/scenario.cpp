#include "slowfast/scenario.hpp"

#include "slowfast/effective.hpp"
#include "slowfast/ensemble.hpp"
#include "slowfast/lifting.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/path_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace slowfast {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const nlohmann::json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(std::string("slowfast ") + kVersion + "\n" + doc.dump())));
  return buf;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream seeds derived from the scenario seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t role, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ (role * 0x632be59bd9b4e019ull)) + index);
}

enum SeedRole : std::uint64_t { kEnsemble = 1, kReference = 2, kDistance = 3, kAlternate = 4, kProbe = 5 };

// Shortest text that round-trips to the same double.
std::string num(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string eps_label(double e) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", e);
  return buf;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw NumericalError("non-finite " + what);
}

struct Row {
  double eps = 0.0;
  double tau = 0.0;
  std::string quantity;
  double distance = 0.0;
  double ci = 0.0;
  DistanceMethod method = DistanceMethod::Chain1d;
  BoundKind bound = BoundKind::Exact;
  std::size_t n_slices = 0;
  SliceReduction reduction = SliceReduction::Mean;
  std::size_t n_paths = 0;

  nlohmann::json to_json() const {
    return {{"eps", eps},
            {"tau", tau},
            {"quantity", quantity},
            {"distance", distance},
            {"ci_half_width", ci},
            {"method", to_string(method)},
            {"bound_kind", to_string(bound)},
            {"n_slices", n_slices},
            {"reduction", to_string(reduction)},
            {"n_paths", n_paths}};
  }
};

Row row_from(double eps, double tau, const std::string& quantity, const DistanceReport& r, std::size_t n_paths) {
  Row row;
  row.eps = eps;
  row.tau = tau;
  row.quantity = quantity;
  row.distance = r.value;
  row.ci = r.ci_half_width;
  row.method = r.method;
  row.bound = r.bound_kind;
  row.n_slices = r.n_slices;
  row.reduction = r.reduction;
  row.n_paths = n_paths;
  check_finite(row.distance, "distance for eps=" + eps_label(eps));
  return row;
}

// A CSV file under construction; written at the end so failed runs leave no
// partial series.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }
  void write(const fs::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
  }
};

class Clock {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct Context {
  const ScenarioConfig& cfg;
  const BuiltSystem* sys;
  std::size_t threads;
  std::ostream* log;
  std::vector<Row> rows;
  std::vector<Table> series;
  nlohmann::json results = nlohmann::json::object();
  nlohmann::json timing = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, content
  std::vector<std::pair<std::string, SdePath>> dumps;             // paths/<name>
  std::size_t paths_simulated = 0;
  Clock clock;

  void note(const std::string& msg) {
    if (log) *log << msg << "\n" << std::flush;
  }
  void time(const std::string& phase) { timing[phase] = clock.lap(); }
  DistanceOptions distance_options(std::uint64_t index) const {
    return cfg.distance.options(derive_seed(cfg.seed, kDistance, index), threads);
  }
};

IntegratorConfig integrator(const ScenarioConfig& c, std::uint64_t seed) {
  IntegratorConfig ic;
  ic.step = c.step;
  ic.horizon = c.horizon;
  ic.scheme = c.scheme;
  ic.boundary = c.boundary;
  ic.seed = seed;
  ic.record_stride = c.record_stride();
  return ic;
}

Vec to_vec(const std::vector<double>& x) { return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())); }

ActionAngleState torus_init(const ScenarioConfig& c, const TorusSystem& sys) {
  ActionAngleState s{to_vec(c.init_actions), Vec::Zero(sys.n)};
  if (!c.init_angles.empty()) s.angles = to_vec(c.init_angles);
  return s;
}

// Laws of the observed actions at every recorded time.
TimedLaws timed_laws(const PathEnsemble& ens, double eps, const Observable& f, int dim) {
  TimedLaws t;
  t.eps = eps;
  t.times = ens.paths.front().times;
  for (std::size_t i = 0; i < t.times.size(); ++i) t.laws.emplace_back(observe(ens, i, f, dim));
  return t;
}

void mean_series(Table& table, const TimedLaws& laws) {
  for (std::size_t i = 0; i < laws.times.size(); ++i) {
    std::vector<std::string> r{num(laws.eps), num(laws.times[i])};
    const Vec m = laws.laws[i].samples().colwise().mean();
    for (Eigen::Index k = 0; k < m.size(); ++k) r.push_back(num(m[k]));
    table.add(std::move(r));
  }
}

Table mean_table(int dim) {
  Table t{"mean_actions", {"eps", "tau"}, {}};
  for (int k = 0; k < dim; ++k) t.header.push_back("mean_I" + std::to_string(k + 1));
  return t;
}

// Ensemble of the perturbed system for one eps and of the reference equation.
struct Simulator {
  Context& ctx;
  Observable observable;
  int dim = 0;
  std::optional<AveragedModel> averaged;
  std::optional<EffectiveModel> effective;

  explicit Simulator(Context& c) : ctx(c) {
    const BuiltSystem& s = *c.sys;
    dim = s.action_dim();
    if (s.kind == SystemKind::Torus) {
      observable = leading_coordinates(dim);
      averaged.emplace(*s.torus, c.cfg.quadrature.build(s.torus->n));
    } else {
      observable = birkhoff_actions(dim);
      effective.emplace(*s.birkhoff, c.cfg.quadrature.build(s.birkhoff->n));
    }
  }

  PathEnsemble perturbed(double e, std::uint64_t seed, const std::vector<double>& init_state,
                         const std::string& tag = "") {
    const Epsilon eps(e);
    const BuiltSystem& s = *ctx.sys;
    const IntegratorConfig ic = integrator(ctx.cfg, seed);
    ctx.paths_simulated += ctx.cfg.n_paths;
    PathEnsemble ens;
    if (s.kind == SystemKind::Torus) {
      const ActionAngleState init = torus_init(ctx.cfg, *s.torus);
      ens = run_ensemble([&](const IntegratorConfig& c) { return integrate_torus_system(*s.torus, eps, init, c); },
                         ctx.cfg.n_paths, ic, ctx.threads);
    } else {
      const CartesianState init{to_vec(init_state)};
      ens = run_ensemble(
          [&](const IntegratorConfig& c) { return integrate_birkhoff_system(*s.birkhoff, eps, init, c); },
          ctx.cfg.n_paths, ic, ctx.threads);
    }
    for (std::size_t p = 0; p < std::min(ctx.cfg.dump_paths, ens.paths.size()); ++p)
      ctx.dumps.emplace_back("eps" + eps_label(e) + tag + "_" + std::to_string(p) + ".sfav", ens.paths[p]);
    return ens;
  }

  PathEnsemble reference(std::uint64_t seed, const std::vector<double>& init_state) {
    const IntegratorConfig ic = integrator(ctx.cfg, seed);
    ctx.paths_simulated += ctx.cfg.n_paths;
    if (averaged) {
      const Vec I0 = to_vec(ctx.cfg.init_actions);
      return run_ensemble([&](const IntegratorConfig& c) { return integrate_averaged_actions(*averaged, I0, c); },
                          ctx.cfg.n_paths, ic, ctx.threads);
    }
    const CartesianState init{to_vec(init_state)};
    return run_ensemble([&](const IntegratorConfig& c) { return integrate_effective(*effective, init, c); },
                        ctx.cfg.n_paths, ic, ctx.threads);
  }
};

// Strictly decreasing in the listed order with non-overlapping 95% intervals.
bool decreasing_beyond_ci(const std::vector<Row>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i - 1].distance - rows[i - 1].ci > rows[i].distance + rows[i].ci)) return false;
  return true;
}

void averaging_convergence(Context& ctx) {
  Simulator sim(ctx);
  Table means = mean_table(sim.dim);
  PathEnsemble ref_ens = sim.reference(derive_seed(ctx.cfg.seed, kReference), ctx.cfg.init_state);
  const TimedLaws ref = timed_laws(ref_ens, 0.0, sim.observable, sim.dim);
  ref_ens = {};
  mean_series(means, ref);
  ctx.time("reference");
  ctx.note("reference: " + std::to_string(ctx.cfg.n_paths) + " paths");

  std::vector<std::pair<double, EmpiricalMeasure>> family;
  for (std::size_t i = 0; i < ctx.cfg.eps_grid.size(); ++i) {
    const double e = ctx.cfg.eps_grid[i];
    PathEnsemble ens = sim.perturbed(e, derive_seed(ctx.cfg.seed, kEnsemble, i), ctx.cfg.init_state);
    const TimedLaws laws = timed_laws(ens, e, sim.observable, sim.dim);
    mean_series(means, laws);
    family.emplace_back(e, laws.laws.back());
    ctx.time("eps=" + eps_label(e));
    ctx.note("eps=" + eps_label(e) + ": " + std::to_string(ctx.cfg.n_paths) + " paths");
  }
  const auto curve = convergence_curve(family, ref.laws.back(), ctx.distance_options(0));
  for (const auto& c : curve) ctx.rows.push_back(row_from(c.eps, ctx.cfg.horizon, "law-vs-reference", c.report, ctx.cfg.n_paths));
  ctx.time("distances");

  std::vector<Row> ordered = ctx.rows;
  std::stable_sort(ordered.begin(), ordered.end(), [](const Row& a, const Row& b) { return a.eps > b.eps; });
  ctx.results["decreasing_beyond_ci"] = decreasing_beyond_ci(ordered);
  ctx.results["reference"] = sim.averaged ? "averaged-equation" : "effective-equation";
  ctx.series.push_back(std::move(means));
}

void stationary_mixing(Context& ctx) {
  Simulator sim(ctx);
  const auto& alt_json = ctx.cfg.section.at("alt_state");
  std::vector<double> alt = alt_json.get<std::vector<double>>();
  if (alt.empty()) alt.assign(ctx.cfg.init_state.size(), 0.0);
  Table mix{"mixing", {"eps", "tau", "distance"}, {}};
  Table means = mean_table(sim.dim);
  Table occupation{"occupation", {"eps", "start", "fraction", "half_width"}, {}};
  const double radius = ctx.cfg.section.at("occupation_radius").get<double>();
  const auto inside = [radius](ConstSpan v) {
    return actions_of(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()))).norm() <= radius;
  };
  const auto occupy = [&](double e, const std::string& start, const PathEnsemble& ens) {
    const OccupationEstimate o = occupation_fraction(ens, inside);
    occupation.add({num(e), start, num(o.value), num(o.half_width)});
  };

  PathEnsemble ref_ens = sim.reference(derive_seed(ctx.cfg.seed, kReference), ctx.cfg.init_state);
  const TimedLaws ref = timed_laws(ref_ens, 0.0, sim.observable, sim.dim);
  occupy(0.0, "init", ref_ens);
  ref_ens = {};
  mean_series(means, ref);
  ctx.time("reference");

  for (std::size_t i = 0; i < ctx.cfg.eps_grid.size(); ++i) {
    const double e = ctx.cfg.eps_grid[i];
    PathEnsemble a = sim.perturbed(e, derive_seed(ctx.cfg.seed, kEnsemble, i), ctx.cfg.init_state);
    const TimedLaws la = timed_laws(a, e, sim.observable, sim.dim);
    occupy(e, "init", a);
    a = {};
    PathEnsemble b = sim.perturbed(e, derive_seed(ctx.cfg.seed, kAlternate, i), alt, "_alt");
    const TimedLaws lb = timed_laws(b, e, sim.observable, sim.dim);
    occupy(e, "alt", b);
    b = {};
    mean_series(means, la);
    DistanceOptions quick = ctx.distance_options(1 + i);
    quick.bootstrap = 0;
    for (std::size_t t = 0; t < la.times.size(); ++t)
      mix.add({num(e), num(la.times[t]), num(bl_distance_auto(la.laws[t], lb.laws[t], quick).value)});
    const DistanceOptions opt = ctx.distance_options(1000 + i);
    const auto mixing = convergence_curve({{e, la.laws.back()}}, lb.laws.back(), opt).front().report;
    const auto to_ref = convergence_curve({{e, la.laws.back()}}, ref.laws.back(), opt).front().report;
    ctx.rows.push_back(row_from(e, ctx.cfg.horizon, "mixing", mixing, ctx.cfg.n_paths));
    ctx.rows.push_back(row_from(e, ctx.cfg.horizon, "law-vs-reference", to_ref, ctx.cfg.n_paths));
    ctx.time("eps=" + eps_label(e));
    ctx.note("eps=" + eps_label(e) + ": 2 x " + std::to_string(ctx.cfg.n_paths) + " paths");
  }
  ctx.results["alt_state"] = alt;
  ctx.results["occupation_radius"] = radius;
  ctx.series.push_back(std::move(mix));
  ctx.series.push_back(std::move(occupation));
  ctx.series.push_back(std::move(means));
}

void uniform_rows(Context& ctx, const std::vector<TimedLaws>& laws, const TimedLaws& ref, const std::string& quantity,
                  const std::string& table_name) {
  const auto rows = uniform_in_time_sup(laws, ref, ctx.distance_options(0));
  Table per_time{table_name, {"eps", "tau", "distance"}, {}};
  std::vector<Row> ordered;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& u = rows[i];
    DistanceReport r;
    r.value = u.sup_distance;
    r.ci_half_width = u.ci_half_width;
    r.method = u.method;
    r.bound_kind = u.bound_kind;
    r.n_slices = u.method == DistanceMethod::Sliced ? ctx.cfg.distance.slices : 0;
    r.reduction = ctx.cfg.distance.reduction;
    ctx.rows.push_back(row_from(u.eps, ref.times[u.argmax], quantity, r, ctx.cfg.n_paths));
    ordered.push_back(ctx.rows.back());
    for (std::size_t t = 0; t < u.per_time.size(); ++t) per_time.add({num(u.eps), num(ref.times[t]), num(u.per_time[t])});
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const Row& a, const Row& b) { return a.eps > b.eps; });
  ctx.results["decreasing_beyond_ci"] = decreasing_beyond_ci(ordered);
  ctx.series.push_back(std::move(per_time));
}

void uniform_in_time(Context& ctx) {
  Simulator sim(ctx);
  PathEnsemble ref_ens = sim.reference(derive_seed(ctx.cfg.seed, kReference), ctx.cfg.init_state);
  const TimedLaws ref = timed_laws(ref_ens, 0.0, sim.observable, sim.dim);
  ref_ens = {};
  ctx.time("reference");
  std::vector<TimedLaws> laws;
  for (std::size_t i = 0; i < ctx.cfg.eps_grid.size(); ++i) {
    const double e = ctx.cfg.eps_grid[i];
    PathEnsemble ens = sim.perturbed(e, derive_seed(ctx.cfg.seed, kEnsemble, i), ctx.cfg.init_state);
    laws.push_back(timed_laws(ens, e, sim.observable, sim.dim));
    ctx.time("eps=" + eps_label(e));
    ctx.note("eps=" + eps_label(e) + ": " + std::to_string(ctx.cfg.n_paths) + " paths");
  }
  uniform_rows(ctx, laws, ref, "sup-over-tau", "distance_vs_tau");
  ctx.time("distances");
}

void exit_time(Context& ctx) {
  const BirkhoffSystem& sys = *ctx.sys->birkhoff;
  const double R = ctx.cfg.section.at("radius").get<double>();
  const double s_bar = ctx.cfg.section.at("s_bar").get<double>();
  const TorusQuadrature quad = ctx.cfg.quadrature.build(sys.n);
  const CartesianState init{to_vec(ctx.cfg.init_state)};
  const IntegratorConfig ic = integrator(ctx.cfg, derive_seed(ctx.cfg.seed, kEnsemble));
  const ExitTimeResult res = exit_time_experiment(sys, ctx.cfg.eps_grid, init, R, ic, ctx.cfg.n_paths, quad, ctx.threads);
  ctx.paths_simulated += ctx.cfg.n_paths * (ctx.cfg.eps_grid.size() + 1);
  ctx.time("simulation");

  const auto as_timed = [](const ExitTimeLaw& l) {
    TimedLaws t;
    t.eps = l.eps;
    t.times = l.times;
    for (const Mat& m : l.actions) t.laws.emplace_back(m);
    return t;
  };
  std::vector<TimedLaws> laws;
  for (const auto& l : res.per_eps) laws.push_back(as_timed(l));
  uniform_rows(ctx, laws, as_timed(res.reference), "stopped-law", "stopped_distance_vs_tau");

  Table hist{"exit_time_histogram", {"eps", "bin_lo", "bin_hi", "count"}, {}};
  nlohmann::json early = nlohmann::json::array();
  const int bins = 20;
  auto summarize = [&](const ExitTimeLaw& l) {
    std::vector<std::size_t> counts(bins, 0);
    std::size_t before = 0, exited = 0;
    for (std::size_t i = 0; i < l.exit_times.size(); ++i) {
      if (!l.exited[i]) continue;
      ++exited;
      if (l.exit_times[i] < s_bar) ++before;
      const int b = std::min(bins - 1, static_cast<int>(l.exit_times[i] / ctx.cfg.horizon * bins));
      ++counts[b];
    }
    for (int b = 0; b < bins; ++b)
      hist.add({num(l.eps), num(ctx.cfg.horizon * b / bins), num(ctx.cfg.horizon * (b + 1) / bins),
                std::to_string(counts[b])});
    const double n = static_cast<double>(l.exit_times.size());
    const double p = before / n;
    early.push_back({{"eps", l.eps},
                     {"p_exit_before_s_bar", p},
                     {"ci_half_width", 1.96 * std::sqrt(std::max(p * (1 - p), 1.0 / n) / n)},
                     {"exited_fraction", exited / n}});
  };
  for (const auto& l : res.per_eps) summarize(l);
  summarize(res.reference);
  ctx.results["radius"] = R;
  ctx.results["s_bar"] = s_bar;
  ctx.results["early_exit"] = early;
  ctx.series.push_back(std::move(hist));
  ctx.time("distances");
}

void lifting_diagnostic(Context& ctx) {
  const BirkhoffSystem& sys = *ctx.sys->birkhoff;
  const std::size_t block = ctx.cfg.section.at("block").get<std::size_t>();
  const double delta = ctx.cfg.section.at("delta").get<double>();
  const CartesianState init{to_vec(ctx.cfg.init_state)};
  Table per_path{"lifting",
                 {"eps", "path", "relative_norm_mismatch", "lambda_drift_bound", "raw_drift_bound", "lambda_steps",
                  "delta_steps"},
                 {}};
  nlohmann::json summary = nlohmann::json::array();
  std::vector<double> bounds;
  for (std::size_t i = 0; i < ctx.cfg.eps_grid.size(); ++i) {
    const double e = ctx.cfg.eps_grid[i];
    const Epsilon eps(e);
    // Same noise for every eps, so differences across eps are not sampling noise.
    IntegratorConfig ic = integrator(ctx.cfg, derive_seed(ctx.cfg.seed, kEnsemble));
    ic.scheme = Scheme::RotationSplitEM;
    ic.record_stride = 1;
    ic.keep_increments = true;
    std::vector<LiftedCompanion> lifts(ctx.cfg.n_paths);
    parallel_for(ctx.cfg.n_paths, ctx.threads, [&](std::size_t p) {
      IntegratorConfig c = ic;
      c.trajectory_id = p;
      const SdePath path = integrate_birkhoff_system(sys, eps, init, c);
      lifts[p] = lifted_companion(sys, eps, path, block, delta);
      lifts[p].times.clear();
      lifts[p].states.clear();
    });
    ctx.paths_simulated += ctx.cfg.n_paths;
    double worst = 0.0, mean_bound = 0.0, mean_raw = 0.0;
    for (std::size_t p = 0; p < lifts.size(); ++p) {
      const auto& l = lifts[p];
      worst = std::max(worst, l.relative_norm_mismatch);
      mean_bound += l.lambda_drift_bound / lifts.size();
      mean_raw += l.raw_drift_bound / lifts.size();
      per_path.add({num(e), std::to_string(p), num(l.relative_norm_mismatch), num(l.lambda_drift_bound),
                    num(l.raw_drift_bound), std::to_string(l.lambda_steps), std::to_string(l.delta_steps)});
    }
    check_finite(worst + mean_bound + mean_raw, "lifting diagnostic");
    bounds.push_back(mean_bound);
    summary.push_back({{"eps", e},
                       {"max_relative_norm_mismatch", worst},
                       {"mean_lambda_drift_bound", mean_bound},
                       {"mean_raw_drift_bound", mean_raw}});
    ctx.time("eps=" + eps_label(e));
    ctx.note("eps=" + eps_label(e) + ": " + std::to_string(ctx.cfg.n_paths) + " lifted paths");
  }
  const auto [lo, hi] = std::minmax_element(bounds.begin(), bounds.end());
  double mean = 0.0;
  for (double b : bounds) mean += b / bounds.size();
  ctx.results["block"] = block;
  ctx.results["delta"] = delta;
  ctx.results["per_eps"] = summary;
  ctx.results["drift_bound_variation"] = mean > 0.0 ? (*hi - *lo) / mean : 0.0;
  ctx.series.push_back(std::move(per_path));
}

void resonance_scan(Context& ctx) {
  const TorusSystem& sys = *ctx.sys->torus;
  const auto& s = ctx.cfg.section;
  const auto windows = s.at("windows").get<std::vector<double>>();
  const double delta = s.at("delta").get<double>(), R = s.at("radius").get<double>();
  const std::size_t samples = s.at("samples").get<std::size_t>();
  const int angle_points = s.at("angle_points").get<int>();
  const TorusQuadrature grid = TorusQuadrature::tensor_trapezoid(sys.n, angle_points);
  const TorusQuadrature quad = ctx.cfg.quadrature.build(sys.n);
  Table t{"resonance", {"N", "estimate", "half_width", "ball_volume", "samples", "hits"}, {}};
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto d = resonant_set_measure(sys, windows[i], delta, R, samples, grid, quad, derive_seed(ctx.cfg.seed, kProbe));
    check_finite(d.estimate, "resonant set estimate");
    t.add({num(d.N), num(d.estimate), num(d.half_width), num(d.ball_volume), std::to_string(d.samples),
           std::to_string(d.hits)});
    out.push_back({{"N", d.N}, {"estimate", d.estimate}, {"half_width", d.half_width}});
    ctx.time("N=" + eps_label(windows[i]));
    ctx.note("N=" + eps_label(windows[i]) + ": estimate " + num(d.estimate));
  }
  const std::size_t hits = probe_rational_dependence(sys.theta, sys.d, sys.n, s.at("k_max").get<int>(), samples, R,
                                                     s.at("tol").get<double>(), derive_seed(ctx.cfg.seed, kProbe, 1));
  ctx.results["windows"] = out;
  ctx.results["rational_dependence_hits"] = hits;
  ctx.results["ball_volume"] = ball_volume(sys.d, R);
  ctx.series.push_back(std::move(t));
}

void normal_form_build(Context& ctx) {
  const auto& s = ctx.cfg.section;
  const Hamiltonian1D ham = builtin_hamiltonian(s.at("hamiltonian").get<std::string>(), s.at("params"));
  const ActionProfile profile = build_action_profile(ham, default_level_grid(ham, s.at("levels").get<int>()));
  ctx.time("profile");
  Table t{"profile", {"level", "action", "period", "omega", "omega_period_defect"}, {}};
  double worst_cross = 0.0;
  for (std::size_t i = 0; i < profile.levels().size(); ++i) {
    const double w = profile.omega(profile.actions()[i]);
    const double defect = w * profile.periods()[i] / kTwoPi - 1.0;
    worst_cross = std::max(worst_cross, std::abs(defect));
    t.add({num(profile.levels()[i]), num(profile.actions()[i]), num(profile.periods()[i]), num(w), num(defect)});
  }
  // Round trip and Jacobian on random points of the energy range.
  const std::size_t checks = s.at("check_points").get<std::size_t>();
  CounterRng rng(ctx.cfg.seed, kProbe);
  double worst_trip = 0.0, worst_det = 0.0;
  const double h0 = ham.minimum();
  for (std::size_t i = 0; i < checks; ++i) {
    const double a = h0 + (ham.a_max - h0) * (0.05 + 0.9 * rng.uniform());
    const Eigen::Vector2d z = aa_inverse_1dof(ham, profile, profile.action_of(a), kTwoPi * rng.uniform());
    const ActionAngle1D aa = aa_transform_1dof(ham, profile, z.x(), z.y());
    worst_trip = std::max(worst_trip, (aa_inverse_1dof(ham, profile, aa.I, aa.phi) - z).norm());
    const double e = 1e-5;
    const auto px = aa_transform_1dof(ham, profile, z.x() + e, z.y());
    const auto mx = aa_transform_1dof(ham, profile, z.x() - e, z.y());
    const auto py = aa_transform_1dof(ham, profile, z.x(), z.y() + e);
    const auto my = aa_transform_1dof(ham, profile, z.x(), z.y() - e);
    const double det = (px.I - mx.I) * std::remainder(py.phi - my.phi, kTwoPi) -
                       (py.I - my.I) * std::remainder(px.phi - mx.phi, kTwoPi);
    worst_det = std::max(worst_det, std::abs(det / (4 * e * e) - 1.0));
  }
  check_finite(worst_trip + worst_det + worst_cross, "normal-form check");
  ctx.results["hamiltonian"] = ham.name;
  ctx.results["levels"] = profile.levels().size();
  ctx.results["max_action"] = profile.max_action();
  ctx.results["omega_period_max_defect"] = worst_cross;
  ctx.results["round_trip_max_error"] = worst_trip;
  ctx.results["jacobian_max_defect"] = worst_det;
  ctx.results["check_points"] = checks;
  ctx.extra_files.emplace_back("profile.json", profile.to_json().dump(2) + "\n");
  ctx.series.push_back(std::move(t));
  ctx.time("checks");
}

}  // namespace

PreparedScenario prepare_scenario(const ScenarioConfig& c) {
  PreparedScenario out{c, std::nullopt};
  const auto& s = c.section;
  if (c.experiment == "normal-form-build") {
    try {
      const Hamiltonian1D ham = builtin_hamiltonian(s.at("hamiltonian").get<std::string>(), s.at("params"));
      require(s.at("levels").get<double>() >= 8, "normal_form.levels must be >= 8");
      require(s.at("check_points").get<double>() >= 0, "normal_form.check_points must be >= 0");
      (void)ham.base_frequency();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("normal_form: ") + e.what());
    }
    return out;
  }
  try {
    out.system = make_builtin(c.system, c.system_params);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  const BuiltSystem& sys = *out.system;
  const bool torus = sys.kind == SystemKind::Torus;
  const bool birkhoff_only = c.experiment == "stationary-mixing" || c.experiment == "uniform-in-time" ||
                             c.experiment == "exit-time" || c.experiment == "lifting-diagnostic";
  require(!(birkhoff_only && torus), c.experiment + " needs a Birkhoff system; '" + c.system + "' is a torus system");
  require(!(c.experiment == "resonance-scan" && !torus), "resonance-scan needs a torus system");
  if (torus) {
    const TorusSystem& t = *sys.torus;
    if (c.experiment != "resonance-scan") {
      require(static_cast<int>(c.init_actions.size()) == t.d,
              "run.init_actions must have " + std::to_string(t.d) + " entries for system '" + c.system + "'");
      require(c.init_angles.empty() || static_cast<int>(c.init_angles.size()) == t.n,
              "run.init_angles must have " + std::to_string(t.n) + " entries for system '" + c.system + "'");
    }
    require(c.init_state.empty(), "run.init_state applies to Birkhoff systems; use init_actions/init_angles");
  } else {
    const int n = sys.birkhoff->n;
    require(static_cast<int>(c.init_state.size()) == 2 * n,
            "run.init_state must have " + std::to_string(2 * n) + " entries (2n) for system '" + c.system + "'");
    require(c.init_actions.empty() && c.init_angles.empty(),
            "run.init_actions/init_angles apply to torus systems; use init_state");
  }
  try {
    const int qn = torus ? sys.torus->n : sys.birkhoff->n;
    (void)c.quadrature.build(qn);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("quadrature: ") + e.what());
  }
  const ProbeReport probe =
      torus ? probe_torus_system(*sys.torus, 64, c.seed) : probe_birkhoff_system(*sys.birkhoff, 64, c.seed);
  require(probe.ok, "system '" + c.system + "' failed the probe check: " + probe.message);

  if (c.experiment == "exit-time") {
    const double R = s.at("radius").get<double>(), s_bar = s.at("s_bar").get<double>();
    require(R > 0.0, "exit.radius must be positive");
    require(s_bar > 0.0 && s_bar <= c.horizon, "exit.s_bar must lie in (0, horizon]");
    require(actions_of(to_vec(c.init_state)).norm() < R, "the initial actions must lie inside exit.radius");
  } else if (c.experiment == "lifting-diagnostic") {
    const double b = s.at("block").get<double>();
    require(b >= 0 && b == std::floor(b) && b < sys.birkhoff->n, "lifting.block must index a block");
    require(s.at("delta").get<double>() > 0.0, "lifting.delta must be positive");
  } else if (c.experiment == "stationary-mixing") {
    const auto alt = s.at("alt_state");
    require(alt.empty() || alt.size() == c.init_state.size(), "mixing.alt_state must match run.init_state in size");
    for (const auto& x : alt) require(x.is_number(), "mixing.alt_state must hold numbers");
    require(s.at("occupation_radius").get<double>() > 0.0, "mixing.occupation_radius must be positive");
  } else if (c.experiment == "resonance-scan") {
    for (const auto& w : s.at("windows")) require(w.is_number() && w.get<double>() > 0.0, "resonance.windows must be positive");
    require(!s.at("windows").empty(), "resonance.windows must be non-empty");
    require(s.at("delta").get<double>() > 0.0 && s.at("radius").get<double>() > 0.0,
            "resonance.delta and resonance.radius must be positive");
    require(s.at("samples").get<double>() >= 1 && s.at("angle_points").get<double>() >= 1 &&
                s.at("k_max").get<double>() >= 1,
            "resonance.samples, angle_points and k_max must be >= 1");
  }
  return out;
}

nlohmann::json run_scenario(const PreparedScenario& scenario, const RunOptions& options) {
  const ScenarioConfig& cfg = scenario.config;
  const std::size_t threads = options.threads ? *options.threads : cfg.threads ? *cfg.threads : default_parallelism();
  const fs::path out_dir = options.output_dir ? fs::path(*options.output_dir) : fs::path(cfg.output_dir);
  Context ctx{cfg, scenario.system ? &*scenario.system : nullptr, std::max<std::size_t>(1, threads), options.log, {}, {}, {}, {}, {}, {}, 0, {}};

  if (cfg.experiment == "averaging-convergence") averaging_convergence(ctx);
  else if (cfg.experiment == "stationary-mixing") stationary_mixing(ctx);
  else if (cfg.experiment == "uniform-in-time") uniform_in_time(ctx);
  else if (cfg.experiment == "exit-time") exit_time(ctx);
  else if (cfg.experiment == "lifting-diagnostic") lifting_diagnostic(ctx);
  else if (cfg.experiment == "resonance-scan") resonance_scan(ctx);
  else normal_form_build(ctx);

  nlohmann::json report;
  report["version"] = kVersion;
  report["experiment"] = cfg.experiment;
  report["config_hash"] = config_hash(cfg.source);
  report["config"] = cfg.source;
  if (scenario.system) {
    report["system"] = {{"name", scenario.system->name},
                        {"kind", to_string(scenario.system->kind)},
                        {"params", scenario.system->params}};
  }
  if (scenario.system) report["settings"] = {{"eps_grid", cfg.eps_grid},
                        {"horizon", cfg.horizon},
                        {"step", cfg.step},
                        {"record_stride", cfg.record_stride()},
                        {"n_paths", cfg.n_paths},
                        {"seed", cfg.seed},
                        {"scheme", to_string(cfg.scheme)},
                        {"boundary_policy", to_string(cfg.boundary)},
                        {"quadrature", cfg.quadrature.to_json()},
                        {"distance", cfg.distance.to_json()}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : ctx.rows) rows.push_back(r.to_json());
  report["distances"] = rows;
  report["results"] = ctx.results;
  report["paths_simulated"] = ctx.paths_simulated;
  nlohmann::json files = {"report.json", "distances.csv", "timing.json"};
  for (const auto& t : ctx.series) files.push_back("series/" + t.name + ".csv");
  for (const auto& f : ctx.extra_files) files.push_back(f.first);
  for (const auto& d : ctx.dumps) files.push_back("paths/" + d.first);
  report["files"] = files;

  fs::create_directories(out_dir / "series");
  Table dist{"distances",
             {"eps", "tau", "quantity", "distance", "ci_half_width", "method", "bound_kind", "n_slices", "reduction",
              "n_paths"},
             {}};
  for (const auto& r : ctx.rows)
    dist.add({num(r.eps), num(r.tau), r.quantity, num(r.distance), num(r.ci), to_string(r.method), to_string(r.bound),
              std::to_string(r.n_slices), to_string(r.reduction), std::to_string(r.n_paths)});
  dist.write(out_dir / "distances.csv");
  for (const auto& t : ctx.series) t.write(out_dir / "series" / (t.name + ".csv"));
  if (!ctx.dumps.empty()) fs::create_directories(out_dir / "paths");
  for (const auto& [name, path] : ctx.dumps) {
    std::ofstream os(out_dir / "paths" / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out_dir / "paths" / name).string());
    write_path_binary(path, os);
  }
  for (const auto& [name, content] : ctx.extra_files) {
    std::ofstream os(out_dir / name);
    if (!os) throw std::runtime_error("cannot write " + (out_dir / name).string());
    os << content;
  }
  {
    std::ofstream os(out_dir / "report.json");
    if (!os) throw std::runtime_error("cannot write " + (out_dir / "report.json").string());
    os << report.dump(2) << "\n";
  }
  {
    double total = 0.0;
    for (auto it = ctx.timing.begin(); it != ctx.timing.end(); ++it) total += it.value().get<double>();
    nlohmann::json timing = {{"threads", ctx.threads},
                             {"paths_simulated", ctx.paths_simulated},
                             {"phases_seconds", ctx.timing},
                             {"total_seconds", total}};
    std::ofstream os(out_dir / "timing.json");
    os << timing.dump(2) << "\n";
  }
  return report;
}

int validate_config_file(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    const PreparedScenario p = prepare_scenario(load_scenario(path));
    out << path << ": ok (" << p.config.experiment;
    if (p.system) out << ", system " << p.system->name;
    out << ", hash " << config_hash(p.config.source) << ")\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run_config_file(const std::string& path, const RunOptions& options, std::ostream& err) {
  PreparedScenario p;
  try {
    p = prepare_scenario(load_scenario(path));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  }
  try {
    run_scenario(p, options);
    return kExitOk;
  } catch (const EnsembleError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IntegrationError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace slowfast
