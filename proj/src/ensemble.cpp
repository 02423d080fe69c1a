#include "slowfast/ensemble.hpp"

#include "slowfast/parallel.hpp"

#include <cmath>

namespace slowfast {

PathEnsemble run_ensemble(const PathTask& task, std::size_t n_paths, const IntegratorConfig& base,
                          std::size_t parallelism) {
  if (n_paths < 1) throw PreconditionError("run_ensemble: n_paths must be >= 1");
  PathEnsemble out;
  out.paths.resize(n_paths);
  parallel_for(n_paths, parallelism, [&](std::size_t i) {
    IntegratorConfig cfg = base;
    cfg.trajectory_id = i;
    try {
      out.paths[i] = task(cfg);
    } catch (const IntegrationError& e) {
      throw EnsembleError("path " + std::to_string(i) + ": " + e.what(), i, true);
    } catch (const std::exception& e) {
      throw EnsembleError("path " + std::to_string(i) + ": " + e.what(), i, false);
    }
  });
  return out;
}

Observable birkhoff_actions(int n) {
  return [n](ConstSpan s, OutSpan out) {
    for (int k = 0; k < n; ++k) out[k] = 0.5 * (s[2 * k] * s[2 * k] + s[2 * k + 1] * s[2 * k + 1]);
  };
}

Observable leading_coordinates(int d) {
  return [d](ConstSpan s, OutSpan out) {
    for (int k = 0; k < d; ++k) out[k] = s[k];
  };
}

Mat observe(const PathEnsemble& ens, std::size_t time_index, const Observable& f, int out_dim) {
  Mat out(ens.size(), out_dim);
  Vec buf(out_dim);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const SdePath& p = ens.paths[i];
    if (time_index >= p.size()) throw PreconditionError("observe: time index out of range");
    f(p.state(time_index), as_span(buf));
    out.row(i) = buf.transpose();
  }
  return out;
}

OccupationEstimate occupation_fraction(const PathEnsemble& ens, const std::function<bool(ConstSpan)>& pred) {
  OccupationEstimate est;
  est.n_paths = ens.size();
  if (ens.size() == 0) return est;
  double sum = 0.0, sum2 = 0.0;
  for (const SdePath& p : ens.paths) {
    double occ = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      if (pred(p.state(i))) occ += p.times[i + 1] - p.times[i];
    sum += occ;
    sum2 += occ * occ;
  }
  const double n = static_cast<double>(ens.size());
  est.value = sum / n;
  if (ens.size() > 1) {
    const double var = std::max(0.0, (sum2 - n * est.value * est.value) / (n - 1));
    est.half_width = 1.96 * std::sqrt(var / n);
  }
  return est;
}

namespace {

ExitTimeLaw collect(const PathEnsemble& ens, double eps, int n, double horizon) {
  ExitTimeLaw law;
  law.eps = eps;
  law.times = ens.paths.front().times;
  const auto f = birkhoff_actions(n);
  for (std::size_t t = 0; t < law.times.size(); ++t) law.actions.push_back(observe(ens, t, f, n));
  for (const SdePath& p : ens.paths) {
    law.exited.push_back(p.stop_time.has_value());
    law.exit_times.push_back(p.stop_time.value_or(horizon));
  }
  return law;
}

}  // namespace

ExitTimeResult exit_time_experiment(const BirkhoffSystem& sys, const std::vector<double>& eps_list,
                                    const CartesianState& init, double R, const IntegratorConfig& cfg,
                                    std::size_t n_paths, const TorusQuadrature& quad, std::size_t parallelism) {
  if (actions_of(init.v).norm() >= R)
    throw PreconditionError("exit_time_experiment: initial actions must lie inside the ball");
  const StoppingRule stop = StoppingRule::exit_action_ball(R);
  ExitTimeResult res;
  for (double e : eps_list) {
    const Epsilon eps(e);
    PathEnsemble ens = run_ensemble(
        [&](const IntegratorConfig& c) { return integrate_birkhoff_system(sys, eps, init, c, stop); }, n_paths, cfg,
        parallelism);
    res.per_eps.push_back(collect(ens, e, sys.n, cfg.horizon));
  }
  const EffectiveModel model(sys, quad);
  IntegratorConfig ref_cfg = cfg;
  ref_cfg.seed = cfg.seed ^ 0x5eed0f5eed0f5eedull;
  PathEnsemble ref = run_ensemble(
      [&](const IntegratorConfig& c) { return integrate_effective(model, init, c, stop); }, n_paths, ref_cfg,
      parallelism);
  res.reference = collect(ref, 0.0, sys.n, cfg.horizon);
  return res;
}

}  // namespace slowfast
