#include "slowfast/normal_form.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace slowfast {

Eigen::Vector2d Hamiltonian1D::gradient(double x, double y) const {
  if (grad) return grad(x, y);
  const double hx = 1e-6 * (1.0 + std::abs(x)), hy = 1e-6 * (1.0 + std::abs(y));
  return {(H(x + hx, y) - H(x - hx, y)) / (2 * hx), (H(x, y + hy) - H(x, y - hy)) / (2 * hy)};
}

double Hamiltonian1D::base_frequency() const {
  const double e = 1e-4;
  const double h0 = H(0, 0);
  const double hxx = (H(e, 0) - 2 * h0 + H(-e, 0)) / (e * e);
  const double hyy = (H(0, e) - 2 * h0 + H(0, -e)) / (e * e);
  const double hxy = (H(e, e) - H(e, -e) - H(-e, e) + H(-e, -e)) / (4 * e * e);
  const double det = hxx * hyy - hxy * hxy;
  if (!(det > 0.0)) throw DomainError(name + ": Hessian at the origin is not positive definite");
  return std::sqrt(det);
}

Hamiltonian1D harmonic_hamiltonian(double a_max) {
  Hamiltonian1D h;
  h.name = "harmonic";
  h.H = [](double x, double y) { return 0.5 * (x * x + y * y); };
  h.grad = [](double x, double y) { return Eigen::Vector2d(x, y); };
  h.a_max = a_max;
  return h;
}

Hamiltonian1D quartic_radial_hamiltonian(double a_max) {
  Hamiltonian1D h;
  h.name = "quartic-radial";
  h.H = [](double x, double y) {
    const double rho = x * x + y * y;
    return 0.5 * rho + 0.25 * rho * rho;
  };
  h.grad = [](double x, double y) {
    const double f = 1.0 + (x * x + y * y);
    return Eigen::Vector2d(f * x, f * y);
  };
  h.a_max = a_max;
  return h;
}

Hamiltonian1D duffing_hamiltonian(double beta, double a_max) {
  if (!(beta >= 0.0)) throw DomainError("duffing: beta must be >= 0");
  Hamiltonian1D h;
  h.name = "duffing";
  h.H = [beta](double x, double y) { return 0.5 * y * y + 0.5 * x * x + 0.25 * beta * x * x * x * x; };
  h.grad = [beta](double x, double y) { return Eigen::Vector2d(x + beta * x * x * x, y); };
  h.a_max = a_max;
  return h;
}

std::vector<std::string> hamiltonian_names() { return {"harmonic", "quartic-radial", "duffing"}; }

Hamiltonian1D builtin_hamiltonian(const std::string& name, const nlohmann::json& given) {
  const nlohmann::json params = given.is_null() ? nlohmann::json::object() : given;
  if (!params.is_object()) throw DomainError("hamiltonian '" + name + "': parameters must be a table");
  for (auto it = params.begin(); it != params.end(); ++it)
    if (it.key() != "a_max" && !(name == "duffing" && it.key() == "beta"))
      throw DomainError("hamiltonian '" + name + "': unknown parameter '" + it.key() + "'");
  const double a_max = params.value("a_max", 4.0);
  if (!(a_max > 0.0)) throw DomainError("hamiltonian: a_max must be positive");
  if (name == "harmonic") return harmonic_hamiltonian(a_max);
  if (name == "quartic-radial") return quartic_radial_hamiltonian(a_max);
  if (name == "duffing") return duffing_hamiltonian(params.value("beta", 1.0), a_max);
  throw DomainError("unknown hamiltonian '" + name + "' (known: harmonic, quartic-radial, duffing)");
}

namespace {

// Root of H(r c, r s) = a on the ray, verifying the ray crosses the level once.
double radial_root(const Hamiltonian1D& ham, double a, double c, double s, double guess) {
  const auto f = [&](double r) { return ham.H(r * c, r * s) - a; };
  double lo = 0.0, hi = guess > 0.0 ? guess : 1.0;
  double flo = f(lo), fhi = f(hi);
  if (!(flo < 0.0)) throw DomainError(ham.name + ": level is not above the minimum");
  for (int it = 0; fhi <= 0.0; ++it) {
    if (it > 200 || !std::isfinite(fhi)) throw DomainError(ham.name + ": level curve is not closed");
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    fhi = f(hi);
  }
  std::uintmax_t max_iter = 200;
  const auto br = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                    boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (br.first + br.second);
}

bool ray_is_simple(const Hamiltonian1D& ham, double a, double c, double s, double r) {
  const Eigen::Vector2d g = ham.gradient(r * c, r * s);
  if (!(r * (c * g.x() + s * g.y()) > 0.0)) return false;
  for (int j = 1; j < 32; ++j) {
    const double t = r * j / 32.0;
    if (ham.H(t * c, t * s) >= a) return false;
  }
  return true;
}

struct MarchResult {
  double area = 0.0;
  double period = 0.0;
};

// RK4 along the flow until the winding about the origin reaches 2pi.
MarchResult march_level(const Hamiltonian1D& ham, double a) {
  // Starting point: first crossing on the positive x-axis.
  double r0 = 0.0;
  {
    double lo = 0.0, step = 1e-3;
    double r = step;
    for (int it = 0; it < 1000000; ++it, r += step) {
      if (ham.H(r, 0.0) >= a) break;
      lo = r;
      step *= 1.01;
    }
    if (!(ham.H(r, 0.0) >= a)) throw DomainError(ham.name + ": contour marching found no crossing");
    std::uintmax_t max_iter = 200;
    const auto f = [&](double t) { return ham.H(t, 0.0) - a; };
    const auto br = boost::math::tools::toms748_solve(f, lo, r, boost::math::tools::eps_tolerance<double>(52),
                                                      max_iter);
    r0 = 0.5 * (br.first + br.second);
  }
  const auto field = [&](const Eigen::Vector2d& p) {
    const Eigen::Vector2d g = ham.gradient(p.x(), p.y());
    return Eigen::Vector2d(-g.y(), g.x());
  };
  Eigen::Vector2d p(r0, 0.0);
  const double speed0 = field(p).norm();
  if (!(speed0 > 0.0)) throw DomainError(ham.name + ": critical point on the level curve");
  const double dt = 2.0 * kPi * r0 / speed0 / 20000.0;
  double t = 0.0, winding = 0.0, area = 0.0;
  for (int it = 0; it < 4000000; ++it) {
    const Eigen::Vector2d k1 = field(p), k2 = field(p + 0.5 * dt * k1), k3 = field(p + 0.5 * dt * k2),
                          k4 = field(p + dt * k3);
    const Eigen::Vector2d q = p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    double dw = std::atan2(q.y(), q.x()) - std::atan2(p.y(), p.x());
    if (dw > kPi) dw -= kTwoPi;
    if (dw < -kPi) dw += kTwoPi;
    const double darea = 0.5 * (p.x() * q.y() - p.y() * q.x());
    if (winding + dw >= kTwoPi) {
      const double frac = (kTwoPi - winding) / dw;
      return {area + frac * darea, t + frac * dt};
    }
    winding += dw;
    area += darea;
    t += dt;
    p = q;
    if (!p.allFinite()) break;
  }
  throw DomainError(ham.name + ": contour marching did not close the level curve");
}

// First derivative at x0 of the interpolating polynomial through (x_j, y_j)
// by Fornberg's recursion.
double derivative_weights_dot(const double* x, const double* y, std::size_t m, double x0) {
  std::vector<double> c0(m, 0.0), c1(m, 0.0);
  c0[0] = 1.0;
  double prod = 1.0;
  for (std::size_t i = 1; i < m; ++i) {
    double prod_i = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double dx = x[i] - x[j];
      prod_i *= dx;
      if (j == i - 1) {
        c1[i] = prod / prod_i * (c0[i - 1] - (x[i - 1] - x0) * c1[i - 1]);
        c0[i] = -prod / prod_i * (x[i - 1] - x0) * c0[i - 1];
      }
      c1[j] = ((x[i] - x0) * c1[j] - c0[j]) / dx;
      c0[j] = (x[i] - x0) * c0[j] / dx;
    }
    prod = prod_i;
  }
  double d = 0.0;
  for (std::size_t j = 0; j < m; ++j) d += c1[j] * y[j];
  return d;
}

}  // namespace

double LevelLoop::speed_at(double psi) const {
  double v = cos_coef[0];
  for (std::size_t k = 1; k < cos_coef.size(); ++k)
    v += cos_coef[k] * std::cos(k * psi) + sin_coef[k] * std::sin(k * psi);
  return v;
}

double LevelLoop::time_of_flight(double psi) const {
  double t = cos_coef[0] * psi;
  for (std::size_t k = 1; k < cos_coef.size(); ++k)
    t += (cos_coef[k] * std::sin(k * psi) + sin_coef[k] * (1.0 - std::cos(k * psi))) / static_cast<double>(k);
  return t;
}

LevelLoop trace_level(const Hamiltonian1D& ham, double a, int N) {
  if (N < 8 || N % 2) throw PreconditionError("trace_level: resolution must be even and >= 8");
  LevelLoop L;
  L.level = a;
  L.psi.resize(N);
  L.radius.resize(N);
  L.speed.resize(N);
  double guess = std::sqrt(2.0 * std::max(a - ham.minimum(), 1e-300));
  for (int i = 0; i < N; ++i) {
    const double psi = kTwoPi * i / N;
    const double c = std::cos(psi), s = std::sin(psi);
    const double r = radial_root(ham, a, c, s, guess);
    if (!ray_is_simple(ham, a, c, s, r)) throw DomainError(ham.name + ": level set is not starlike about the origin");
    const Eigen::Vector2d g = ham.gradient(r * c, r * s);
    L.psi[i] = psi;
    L.radius[i] = r;
    L.speed[i] = r / (c * g.x() + s * g.y());
    guess = r;
  }
  double area = 0.0;
  for (double r : L.radius) area += r * r;
  L.area = 0.5 * area * kTwoPi / N;
  // Real DFT of the speed; the Nyquist cosine is halved.
  const int K = N / 2;
  std::vector<double> ctab(N), stab(N);
  for (int i = 0; i < N; ++i) {
    ctab[i] = std::cos(kTwoPi * i / N);
    stab[i] = std::sin(kTwoPi * i / N);
  }
  L.cos_coef.assign(K + 1, 0.0);
  L.sin_coef.assign(K + 1, 0.0);
  for (int k = 0; k <= K; ++k) {
    double cs = 0.0, sn = 0.0;
    for (int i = 0, idx = 0; i < N; ++i, idx = (idx + k) % N) {
      cs += L.speed[i] * ctab[idx];
      sn += L.speed[i] * stab[idx];
    }
    L.cos_coef[k] = (k == 0 ? 1.0 : 2.0) * cs / N;
    L.sin_coef[k] = 2.0 * sn / N;
  }
  L.cos_coef[K] *= 0.5;
  L.sin_coef[K] = 0.0;
  L.period = kTwoPi * L.cos_coef[0];
  return L;
}

double action_of_level(const Hamiltonian1D& ham, double a) {
  if (!(a > ham.minimum()) || a > ham.a_max * (1 + 1e-12))
    throw DomainError(ham.name + ": level outside the energy range");
  try {
    return trace_level(ham, a).area / kTwoPi;
  } catch (const DomainError&) {
    return march_level(ham, a).area / kTwoPi;
  }
}

double period_of_level(const Hamiltonian1D& ham, double a) {
  if (!(a > ham.minimum()) || a > ham.a_max * (1 + 1e-12))
    throw DomainError(ham.name + ": level outside the energy range");
  try {
    return trace_level(ham, a).period;
  } catch (const DomainError&) {
    return march_level(ham, a).period;
  }
}

ActionProfile::ActionProfile(std::string name, std::vector<double> levels, std::vector<double> actions,
                             std::vector<double> periods, double h0, double base_frequency)
    : name_(std::move(name)), levels_(std::move(levels)), actions_(std::move(actions)), periods_(std::move(periods)) {
  if (levels_.size() != actions_.size() || levels_.size() != periods_.size() || levels_.empty())
    throw PreconditionError("ActionProfile: table sizes differ");
  build_interpolant(h0, base_frequency);
}

void ActionProfile::build_interpolant(double h0, double base_frequency) {
  const std::size_t m = levels_.size();
  if (!(actions_[0] > 0.0) || !(levels_[0] > h0)) throw DomainError("ActionProfile: first knot must lie above the minimum");
  for (std::size_t i = 1; i < m; ++i)
    if (!(actions_[i] > actions_[i - 1]))
      throw DomainError("ActionProfile: I(a) is not strictly increasing at level " + std::to_string(levels_[i]));
  knot_I_.assign(1, 0.0);
  knot_a_.assign(1, h0);
  knot_I_.insert(knot_I_.end(), actions_.begin(), actions_.end());
  knot_a_.insert(knot_a_.end(), levels_.begin(), levels_.end());
  const std::size_t K = knot_I_.size();
  std::vector<double> delta(K - 1), step(K - 1);
  for (std::size_t i = 0; i + 1 < K; ++i) {
    step[i] = knot_I_[i + 1] - knot_I_[i];
    delta[i] = (knot_a_[i + 1] - knot_a_[i]) / step[i];
  }
  // Five-point finite-difference slopes (fourth order on the nonuniform
  // grid), centered where the table allows; the origin uses the
  // small-oscillation frequency.
  knot_slope_.assign(K, 0.0);
  knot_slope_[0] = base_frequency;
  const std::size_t width = std::min<std::size_t>(5, K);
  for (std::size_t i = 1; i < K; ++i) {
    const std::size_t first = std::min(i >= width / 2 ? i - width / 2 : 0, K - width);
    knot_slope_[i] = derivative_weights_dot(knot_I_.data() + first, knot_a_.data() + first, width, knot_I_[i]);
  }
  // Hyman filter keeps the interpolant monotone.
  for (std::size_t i = 0; i < K; ++i) {
    double bound = std::numeric_limits<double>::infinity();
    if (i > 0) bound = std::min(bound, 3.0 * delta[i - 1]);
    if (i + 1 < K) bound = std::min(bound, 3.0 * delta[i]);
    knot_slope_[i] = std::clamp(knot_slope_[i], 0.0, bound);
  }
}

std::size_t ActionProfile::interval(double I) const {
  const auto it = std::upper_bound(knot_I_.begin(), knot_I_.end(), I);
  const std::size_t i = static_cast<std::size_t>(it - knot_I_.begin());
  return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, knot_I_.size() - 2);
}

double ActionProfile::h(double I) const {
  if (knot_I_.size() < 2) throw PreconditionError("ActionProfile: empty profile");
  if (I >= knot_I_.back()) return knot_a_.back() + knot_slope_.back() * (I - knot_I_.back());
  if (I <= 0.0) return knot_a_[0] + knot_slope_[0] * I;
  const std::size_t i = interval(I);
  const double dI = knot_I_[i + 1] - knot_I_[i];
  const double t = (I - knot_I_[i]) / dI;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * knot_a_[i] + (t3 - 2 * t2 + t) * dI * knot_slope_[i] +
         (-2 * t3 + 3 * t2) * knot_a_[i + 1] + (t3 - t2) * dI * knot_slope_[i + 1];
}

double ActionProfile::omega(double I) const {
  if (knot_I_.size() < 2) throw PreconditionError("ActionProfile: empty profile");
  if (I >= knot_I_.back()) return knot_slope_.back();
  if (I <= 0.0) return knot_slope_[0];
  const std::size_t i = interval(I);
  const double dI = knot_I_[i + 1] - knot_I_[i];
  const double t = (I - knot_I_[i]) / dI;
  const double t2 = t * t;
  return (6 * t2 - 6 * t) * (knot_a_[i] - knot_a_[i + 1]) / dI + (3 * t2 - 4 * t + 1) * knot_slope_[i] +
         (3 * t2 - 2 * t) * knot_slope_[i + 1];
}

double ActionProfile::action_of(double a) const {
  if (a <= knot_a_[0]) return 0.0;
  if (a >= knot_a_.back()) return knot_I_.back() + (a - knot_a_.back()) / knot_slope_.back();
  const auto it = std::upper_bound(knot_a_.begin(), knot_a_.end(), a);
  const std::size_t i = static_cast<std::size_t>(it - knot_a_.begin()) - 1;
  double lo = knot_I_[i], hi = knot_I_[i + 1];
  double I = lo + (hi - lo) * (a - knot_a_[i]) / (knot_a_[i + 1] - knot_a_[i]);
  for (int it2 = 0; it2 < 100; ++it2) {
    const double f = h(I) - a;
    if (f > 0) hi = I;
    else lo = I;
    const double w = omega(I);
    double next = w > 0 ? I - f / w : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - I) <= 1e-15 * std::max(1.0, I)) return next;
    I = next;
  }
  return I;
}

nlohmann::json ActionProfile::to_json() const {
  nlohmann::json j;
  j["hamiltonian"] = name_;
  j["levels"] = levels_;
  j["actions"] = actions_;
  j["periods"] = periods_;
  j["knots"] = {{"I", knot_I_}, {"a", knot_a_}, {"slope", knot_slope_}};
  return j;
}

ActionProfile ActionProfile::from_json(const nlohmann::json& j) {
  ActionProfile p;
  try {
    p.name_ = j.at("hamiltonian").get<std::string>();
    p.levels_ = j.at("levels").get<std::vector<double>>();
    p.actions_ = j.at("actions").get<std::vector<double>>();
    p.periods_ = j.at("periods").get<std::vector<double>>();
    const auto& k = j.at("knots");
    p.knot_I_ = k.at("I").get<std::vector<double>>();
    p.knot_a_ = k.at("a").get<std::vector<double>>();
    p.knot_slope_ = k.at("slope").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("ActionProfile: malformed JSON: ") + e.what());
  }
  const std::size_t K = p.knot_I_.size();
  if (K < 2 || p.knot_a_.size() != K || p.knot_slope_.size() != K)
    throw DomainError("ActionProfile: knot tables are inconsistent");
  for (std::size_t i = 1; i < K; ++i)
    if (!(p.knot_I_[i] > p.knot_I_[i - 1]) || !(p.knot_a_[i] > p.knot_a_[i - 1]))
      throw DomainError("ActionProfile: knots are not strictly increasing");
  return p;
}

ActionProfile build_action_profile(const Hamiltonian1D& ham, const std::vector<double>& level_grid) {
  if (level_grid.size() < 8) throw PreconditionError("build_action_profile: need at least 8 levels");
  const double h0 = ham.minimum();
  for (std::size_t i = 0; i < level_grid.size(); ++i) {
    if (!(level_grid[i] > h0) || level_grid[i] > ham.a_max * (1 + 1e-12))
      throw PreconditionError("build_action_profile: level " + std::to_string(level_grid[i]) +
                              " outside the energy range");
    if (i > 0 && !(level_grid[i] > level_grid[i - 1]))
      throw PreconditionError("build_action_profile: levels must be strictly increasing");
  }
  std::vector<double> actions, periods;
  for (double a : level_grid) {
    try {
      const LevelLoop L = trace_level(ham, a);
      actions.push_back(L.area / kTwoPi);
      periods.push_back(L.period);
    } catch (const DomainError&) {
      const MarchResult m = march_level(ham, a);
      actions.push_back(m.area / kTwoPi);
      periods.push_back(m.period);
    }
  }
  return ActionProfile(ham.name, level_grid, std::move(actions), std::move(periods), h0, ham.base_frequency());
}

std::vector<double> default_level_grid(const Hamiltonian1D& ham, int count) {
  if (count < 8) throw PreconditionError("default_level_grid: need at least 8 levels");
  const double h0 = ham.minimum();
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = h0 + (ham.a_max - h0) * (i + 1) / count;
  return g;
}

ActionAngle1D aa_transform_1dof(const Hamiltonian1D& ham, const ActionProfile& profile, double x, double y) {
  (void)profile;
  if (x == 0.0 && y == 0.0) return {};
  const double a = ham.H(x, y);
  if (!(a > ham.minimum())) return {};
  if (a > ham.a_max * (1 + 1e-12)) throw DomainError(ham.name + ": point outside the energy range");
  const LevelLoop L = trace_level(ham, a);
  const double psi = wrap_angle(std::atan2(y, x));
  return {L.area / kTwoPi, wrap_angle(kTwoPi * L.time_of_flight(psi) / L.period)};
}

Eigen::Vector2d aa_inverse_1dof(const Hamiltonian1D& ham, const ActionProfile& profile, double I, double phi) {
  if (I < 0.0) throw DomainError("aa_inverse_1dof: negative action");
  if (I == 0.0) return Eigen::Vector2d::Zero();
  // Energy: Newton on I(a) - I with dI/da = T / 2pi.
  const double h0 = ham.minimum();
  double a = std::clamp(profile.h(I), std::nextafter(h0, ham.a_max), ham.a_max);
  LevelLoop L = trace_level(ham, a);
  for (int it = 0; it < 50; ++it) {
    const double f = L.area / kTwoPi - I;
    double next = a - f * kTwoPi / L.period;
    if (!(next > h0)) next = 0.5 * (a + h0);
    if (next > ham.a_max * (1 + 1e-12)) throw DomainError(ham.name + ": action outside the energy range");
    const bool done = std::abs(next - a) <= 1e-15 * std::max(1.0, std::abs(a));
    a = next;
    L = trace_level(ham, a);
    if (done) break;
  }
  // Polar angle: Newton on 2pi t(psi) / T - phi, bracketed in [0, 2pi].
  const double target = wrap_angle(phi) * L.period / kTwoPi;
  double lo = 0.0, hi = kTwoPi, psi = wrap_angle(phi);
  for (int it = 0; it < 100; ++it) {
    const double f = L.time_of_flight(psi) - target;
    if (f > 0) hi = psi;
    else lo = psi;
    double next = psi - f / L.speed_at(psi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - psi) <= 1e-15;
    psi = next;
    if (done) break;
  }
  const double c = std::cos(psi), s = std::sin(psi);
  const double r = radial_root(ham, a, c, s, 1.0);
  return {r * c, r * s};
}

BirkhoffSystem build_oscillator_chain(std::shared_ptr<const ActionProfile> profile, int n, PhaseField coupling,
                                      PhaseField noise, int n1) {
  if (!profile) throw PreconditionError("build_oscillator_chain: action profile required");
  if (n < 1 || n1 < 1) throw PreconditionError("build_oscillator_chain: dimensions must be >= 1");
  BirkhoffSystem sys;
  sys.n = n;
  sys.n1 = n1;
  sys.name = "chain(" + profile->name() + ")";
  sys.frequencies = [profile](ConstSpan I, OutSpan out) {
    for (std::size_t k = 0; k < I.size(); ++k) out[k] = profile->omega(I[k]);
  };
  sys.drift = std::move(coupling);
  sys.dispersion = std::move(noise);
  const ProbeReport rep = probe_birkhoff_system(sys, 64, 0x636861696eull);
  if (!rep.ok) throw DomainError("build_oscillator_chain: " + rep.message);
  return sys;
}

}  // namespace slowfast
