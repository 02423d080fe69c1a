#include "slowfast/sde.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

std::string to_string(Scheme s) {
  return s == Scheme::EulerMaruyama ? "euler-maruyama" : "rotation-split-em";
}

std::string to_string(BoundaryPolicy p) {
  return p == BoundaryPolicy::ClampAtZero ? "clamp-at-zero" : "reflect-at-zero";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "euler-maruyama") return Scheme::EulerMaruyama;
  if (s == "rotation-split-em") return Scheme::RotationSplitEM;
  throw PreconditionError("unknown scheme '" + s + "' (expected euler-maruyama or rotation-split-em)");
}

BoundaryPolicy parse_boundary_policy(const std::string& s) {
  if (s == "clamp-at-zero") return BoundaryPolicy::ClampAtZero;
  if (s == "reflect-at-zero") return BoundaryPolicy::ReflectAtZero;
  throw PreconditionError("unknown boundary policy '" + s + "' (expected clamp-at-zero or reflect-at-zero)");
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw PreconditionError("integrator step must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw PreconditionError("horizon must be >= 0");
  if (record_stride < 1) throw PreconditionError("record_stride must be >= 1");
  (void)steps();
}

std::size_t IntegratorConfig::steps() const {
  const double r = horizon / step;
  const double m = std::round(r);
  if (std::abs(r - m) > 1e-8 * std::max(1.0, r))
    throw PreconditionError("horizon must be an integer multiple of the step");
  return static_cast<std::size_t>(m);
}

StoppingRule StoppingRule::exit_action_ball(double R) {
  if (!(R > 0.0)) throw PreconditionError("stopping threshold must be positive");
  return {Kind::ExitActionBall, R};
}

StoppingRule StoppingRule::exit_norm_ball(double R) {
  if (!(R > 0.0)) throw PreconditionError("stopping threshold must be positive");
  return {Kind::ExitNormBall, R};
}

StoppingRule StoppingRule::action_floor(double delta) {
  if (!(delta > 0.0)) throw PreconditionError("stopping threshold must be positive");
  return {Kind::ActionFloor, delta};
}

bool StoppingRule::triggered(ConstSpan actions, ConstSpan cartesian) const {
  switch (kind) {
    case Kind::None:
      return false;
    case Kind::ExitActionBall: {
      double s = 0.0;
      for (double x : actions) s += x * x;
      return std::sqrt(s) >= threshold;
    }
    case Kind::ExitNormBall: {
      const ConstSpan z = cartesian.empty() ? actions : cartesian;
      double s = 0.0;
      for (double x : z) s += x * x;
      return std::sqrt(s) >= threshold;
    }
    case Kind::ActionFloor:
      for (double x : actions)
        if (x <= threshold) return true;
      return false;
  }
  return false;
}

Vec SdePath::state_vec(std::size_t i) const {
  Vec out(state_dim);
  for (int j = 0; j < state_dim; ++j) out[j] = states[i * state_dim + j];
  return out;
}

namespace {

class Recorder {
 public:
  Recorder(SdePath& p, const IntegratorConfig& cfg, std::size_t steps)
      : p_(p), stride_(cfg.record_stride), steps_(steps), h_(cfg.step) {
    const std::size_t n = steps / stride_ + (steps % stride_ ? 2 : 1);
    p_.times.reserve(n);
    p_.states.reserve(n * p_.state_dim);
  }

  bool on_grid(std::size_t m) const { return m % stride_ == 0 || m == steps_; }

  void record(std::size_t m, ConstSpan s) {
    if (!on_grid(m)) return;
    p_.times.push_back(static_cast<double>(m) * h_);
    p_.states.insert(p_.states.end(), s.begin(), s.end());
  }

  // Freezes the path at step m: the stopped state is held on all later grid times.
  void stop(std::size_t m, ConstSpan s) {
    p_.stop_time = static_cast<double>(m) * h_;
    std::size_t next = on_grid(m) ? m : std::min(steps_, (m / stride_ + 1) * stride_);
    if (on_grid(m) && !p_.times.empty() && p_.times.back() == static_cast<double>(m) * h_) {
      p_.stopped_at = p_.times.size() - 1;
      next = m + 1;
    } else {
      p_.stopped_at = p_.times.size();
    }
    for (std::size_t k = next; k <= steps_; ++k) record(k, s);
  }

 private:
  SdePath& p_;
  std::size_t stride_, steps_;
  double h_;
};

bool finite(ConstSpan s) {
  for (double x : s)
    if (!std::isfinite(x)) return false;
  return true;
}

// Generic fixed-step driver. step_fn(m, state, dW) advances state in place;
// actions_fn(state, I) extracts the actions used by stopping rules.
template <class StepFn, class ActionsFn>
SdePath drive(int dim, int noise_dim, int n_actions, bool cartesian, const IntegratorConfig& cfg, Vec state,
              const StoppingRule& stop, const NoiseSource* noise, StepFn step_fn, ActionsFn actions_fn) {
  cfg.validate();
  const std::size_t M = cfg.steps();
  SdePath path;
  path.state_dim = dim;
  path.noise_dim = noise_dim;
  path.step = cfg.step;
  if (cfg.keep_increments) path.increments.reserve(M * noise_dim);
  CounterNoise own(cfg.seed, cfg.trajectory_id);
  const NoiseSource& src = noise ? *noise : static_cast<const NoiseSource&>(own);
  Vec dW(noise_dim), I(n_actions);
  Recorder rec(path, cfg, M);

  auto stopped = [&]() {
    if (stop.kind == StoppingRule::Kind::None) return false;
    actions_fn(state, I);
    return stop.triggered(as_span(I), cartesian ? as_span(state) : ConstSpan{});
  };

  rec.record(0, as_span(state));
  if (stopped()) {
    path.times.clear();
    path.states.clear();
    rec.stop(0, as_span(state));
    return path;
  }
  for (std::size_t m = 0; m < M; ++m) {
    src.increments(m, cfg.step, as_span(dW));
    step_fn(m, state, dW);
    if (!finite(as_span(state))) throw IntegrationError("non-finite state", m);
    if (cfg.keep_increments) path.increments.insert(path.increments.end(), dW.data(), dW.data() + noise_dim);
    if (stopped()) {
      rec.stop(m + 1, as_span(state));
      return path;
    }
    rec.record(m + 1, as_span(state));
  }
  return path;
}

void check_finite_coeffs(ConstSpan a, std::size_t m, const char* what) {
  if (!finite(a)) throw IntegrationError(std::string("non-finite ") + what, m);
}

}  // namespace

SdePath integrate_torus_system(const TorusSystem& sys, Epsilon eps, const ActionAngleState& init,
                               const IntegratorConfig& cfg, const StoppingRule& stop, const NoiseSource* noise) {
  sys.validate();
  const int d = sys.d, n = sys.n, d1 = sys.d1;
  if (init.actions.size() != d || init.angles.size() != n)
    throw PreconditionError("integrate_torus_system: initial state dimension mismatch");
  Vec state(d + n);
  state.head(d) = init.actions;
  for (int j = 0; j < n; ++j) state[d + j] = wrap_angle(init.angles[j]);

  const double h = cfg.step, inv_eps = 1.0 / eps.value();
  const bool split = cfg.scheme == Scheme::RotationSplitEM;
  std::vector<double> th(n), pI(d), pphi(n), psiI(d * d1), psiphi(n * d1);

  auto step_fn = [&](std::size_t m, Vec& s, const Vec& dW) {
    const ConstSpan I{s.data(), static_cast<std::size_t>(d)};
    OutSpan phi{s.data() + d, static_cast<std::size_t>(n)};
    sys.theta(I, th);
    check_finite_coeffs(th, m, "frequency");
    if (split)
      for (int j = 0; j < n; ++j) phi[j] = wrap_angle(phi[j] + th[j] * h * inv_eps);
    sys.drift_I(I, phi, pI);
    sys.drift_phi(I, phi, pphi);
    sys.disp_I(I, phi, psiI);
    sys.disp_phi(I, phi, psiphi);
    check_finite_coeffs(pI, m, "action drift");
    check_finite_coeffs(psiI, m, "action dispersion");
    for (int j = 0; j < n; ++j) {
      double inc = pphi[j] * h;
      if (!split) inc += th[j] * h * inv_eps;
      for (int r = 0; r < d1; ++r) inc += psiphi[j * d1 + r] * dW[r];
      phi[j] = wrap_angle(phi[j] + inc);
    }
    for (int i = 0; i < d; ++i) {
      double inc = pI[i] * h;
      for (int r = 0; r < d1; ++r) inc += psiI[i * d1 + r] * dW[r];
      s[i] += inc;
    }
  };
  auto actions_fn = [d](const Vec& s, Vec& I) { I = s.head(d); };
  return drive(d + n, d1, d, false, cfg, std::move(state), stop, noise, step_fn, actions_fn);
}

void rotation_substep(const BirkhoffSystem& sys, double angle_scale, OutSpan v, OutSpan w) {
  const int n = sys.n;
  double I[64];
  std::vector<double> Iheap;
  double* Ip = I;
  if (n > 64) {
    Iheap.resize(n);
    Ip = Iheap.data();
  }
  for (int k = 0; k < n; ++k) Ip[k] = 0.5 * (v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1]);
  sys.frequencies(ConstSpan{Ip, static_cast<std::size_t>(n)}, w);
  for (int k = 0; k < n; ++k) {
    const double x = v[2 * k], y = v[2 * k + 1];
    const double r_old = std::sqrt(x * x + y * y);
    if (r_old == 0.0) continue;
    const double a = w[k] * angle_scale;
    const double c = std::cos(a), s = std::sin(a);
    double nx = c * x - s * y, ny = s * x + c * y;
    const double scale = r_old / std::sqrt(nx * nx + ny * ny);
    v[2 * k] = nx * scale;
    v[2 * k + 1] = ny * scale;
  }
}

SdePath integrate_birkhoff_system(const BirkhoffSystem& sys, Epsilon eps, const CartesianState& init,
                                  const IntegratorConfig& cfg, const StoppingRule& stop, const NoiseSource* noise) {
  sys.validate();
  const int n = sys.n, m2 = 2 * n, c = 2 * sys.n1;
  if (init.v.size() != m2) throw PreconditionError("integrate_birkhoff_system: initial state dimension mismatch");
  const double h = cfg.step, inv_eps = 1.0 / eps.value();
  const bool split = cfg.scheme == Scheme::RotationSplitEM;
  std::vector<double> w(n), p(m2), B(m2 * c), I(n);

  auto step_fn = [&](std::size_t m, Vec& v, const Vec& dW) {
    const OutSpan vs = as_span(v);
    if (split) {
      rotation_substep(sys, h * inv_eps, vs, w);
      check_finite_coeffs(w, m, "frequency");
    } else {
      for (int k = 0; k < n; ++k) I[k] = 0.5 * (v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1]);
      sys.frequencies(I, w);
      check_finite_coeffs(w, m, "frequency");
    }
    sys.drift(vs, p);
    sys.dispersion(vs, B);
    check_finite_coeffs(p, m, "drift");
    check_finite_coeffs(B, m, "dispersion");
    Vec next(m2);
    for (int i = 0; i < m2; ++i) {
      double inc = p[i] * h;
      for (int j = 0; j < c; ++j) inc += B[i * c + j] * dW[j];
      next[i] = v[i] + inc;
    }
    if (!split) {
      for (int k = 0; k < n; ++k) {
        const double a = w[k] * h * inv_eps;
        next[2 * k] -= a * v[2 * k + 1];
        next[2 * k + 1] += a * v[2 * k];
      }
    }
    v = next;
  };
  auto actions_fn = [n](const Vec& v, Vec& I) {
    for (int k = 0; k < n; ++k) I[k] = 0.5 * (v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1]);
  };
  return drive(m2, c, n, true, cfg, init.v, stop, noise, step_fn, actions_fn);
}

SdePath integrate_effective(const EffectiveModel& model, const CartesianState& init, const IntegratorConfig& cfg,
                            const StoppingRule& stop, const NoiseSource* noise) {
  const int m2 = model.dim(), n = m2 / 2;
  if (init.v.size() != m2) throw PreconditionError("integrate_effective: initial state dimension mismatch");
  const double h = cfg.step;
  Vec R;
  Mat D;
  auto step_fn = [&](std::size_t m, Vec& v, const Vec& dW) {
    model.evaluate(v, R, D);
    check_finite_coeffs(as_span(R), m, "effective drift");
    v += R * h + D * dW;
  };
  auto actions_fn = [n](const Vec& v, Vec& I) {
    for (int k = 0; k < n; ++k) I[k] = 0.5 * (v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1]);
  };
  return drive(m2, m2, n, true, cfg, init.v, stop, noise, step_fn, actions_fn);
}

SdePath integrate_averaged_actions(const AveragedActionModel& model, const Vec& init, const IntegratorConfig& cfg,
                                   const StoppingRule& stop, const NoiseSource* noise) {
  const int n = model.dim();
  if (init.size() != n) throw PreconditionError("integrate_averaged_actions: initial state dimension mismatch");
  if (init.minCoeff() < 0.0) throw PreconditionError("integrate_averaged_actions: negative initial action");
  const double h = cfg.step;
  const bool reflect = cfg.boundary == BoundaryPolicy::ReflectAtZero;
  Vec F;
  Mat K;
  auto step_fn = [&](std::size_t m, Vec& I, const Vec& dW) {
    model.evaluate(I, F, K);
    check_finite_coeffs(as_span(F), m, "averaged drift");
    I += F * h + K * dW;
    for (int k = 0; k < n; ++k) I[k] = reflect ? std::abs(I[k]) : std::max(0.0, I[k]);
  };
  auto actions_fn = [](const Vec& s, Vec& I) { I = s; };
  return drive(n, n, n, false, cfg, init, stop, noise, step_fn, actions_fn);
}

SdePath integrate_averaged_actions(const AveragedModel& model, const Vec& init, const IntegratorConfig& cfg,
                                   const StoppingRule& stop, const NoiseSource* noise) {
  const int d = model.dim();
  if (init.size() != d) throw PreconditionError("integrate_averaged_actions: initial state dimension mismatch");
  const double h = cfg.step;
  Vec b;
  Mat K;
  auto step_fn = [&](std::size_t m, Vec& I, const Vec& dW) {
    model.evaluate(I, b, K);
    check_finite_coeffs(as_span(b), m, "averaged drift");
    I += b * h + K * dW;
  };
  auto actions_fn = [](const Vec& s, Vec& I) { I = s; };
  return drive(d, d, d, false, cfg, init, stop, noise, step_fn, actions_fn);
}

SdePath integrate_action_equation(const BirkhoffSystem& sys, Epsilon eps, const SdePath& vpath) {
  const int n = sys.n, m2 = 2 * n, c = 2 * sys.n1;
  if (vpath.state_dim != m2 || vpath.noise_dim != c)
    throw PreconditionError("integrate_action_equation: path does not belong to this system");
  const std::size_t steps = vpath.increment_count();
  if (steps == 0 || vpath.size() != steps + 1)
    throw PreconditionError("integrate_action_equation: path must be recorded at every step with increments");
  const double h = vpath.step, scale = h / eps.value();
  SdePath out;
  out.state_dim = n;
  out.noise_dim = c;
  out.step = h;
  out.times = vpath.times;
  out.states.reserve(vpath.size() * n);
  Vec v(m2), I(n);
  std::vector<double> w(n), p(m2), B(m2 * c);
  for (int k = 0; k < n; ++k) {
    const ConstSpan s0 = vpath.state(0);
    I[k] = 0.5 * (s0[2 * k] * s0[2 * k] + s0[2 * k + 1] * s0[2 * k + 1]);
  }
  out.states.insert(out.states.end(), I.data(), I.data() + n);
  for (std::size_t m = 0; m < steps; ++m) {
    const ConstSpan s = vpath.state(m);
    for (int i = 0; i < m2; ++i) v[i] = s[i];
    rotation_substep(sys, scale, as_span(v), w);
    sys.drift(as_span(v), p);
    sys.dispersion(as_span(v), B);
    const ConstSpan dW = vpath.increment(m);
    for (int k = 0; k < n; ++k) {
      double hs = 0.0, mart = 0.0;
      for (int j = 0; j < c; ++j) {
        const double b0 = B[(2 * k) * c + j], b1 = B[(2 * k + 1) * c + j];
        hs += b0 * b0 + b1 * b1;
        mart += (v[2 * k] * b0 + v[2 * k + 1] * b1) * dW[j];
      }
      I[k] += (v[2 * k] * p[2 * k] + v[2 * k + 1] * p[2 * k + 1] + 0.5 * hs) * h + mart;
    }
    out.states.insert(out.states.end(), I.data(), I.data() + n);
  }
  return out;
}

}  // namespace slowfast
