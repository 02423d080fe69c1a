#include "slowfast/model_core.hpp"

#include "slowfast/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace slowfast {

Epsilon::Epsilon(double value) : value_(value) {
  if (!(value > 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os << "epsilon must lie in (0, 1], got " << value;
    throw DomainError(os.str());
  }
}

void TorusSystem::validate() const {
  if (d < 1 || n < 1 || d1 < 1) throw PreconditionError("TorusSystem: dimensions must be >= 1");
  if (!theta || !drift_I || !drift_phi || !disp_I || !disp_phi)
    throw PreconditionError("TorusSystem: all coefficient maps must be set");
}

void BirkhoffSystem::validate() const {
  if (n < 1 || n1 < 1) throw PreconditionError("BirkhoffSystem: dimensions must be >= 1");
  if (!frequencies || !drift || !dispersion)
    throw PreconditionError("BirkhoffSystem: all coefficient maps must be set");
}

Vec eval_theta(const TorusSystem& sys, const Vec& I) {
  Vec out(sys.n);
  sys.theta(as_span(I), as_span(out));
  return out;
}

Vec eval_drift_I(const TorusSystem& sys, const Vec& I, const Vec& phi) {
  Vec out(sys.d);
  sys.drift_I(as_span(I), as_span(phi), as_span(out));
  return out;
}

Mat eval_disp_I(const TorusSystem& sys, const Vec& I, const Vec& phi) {
  RowMat out(sys.d, sys.d1);
  sys.disp_I(as_span(I), as_span(phi), {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

Vec eval_frequencies(const BirkhoffSystem& sys, const Vec& I) {
  Vec out(sys.n);
  sys.frequencies(as_span(I), as_span(out));
  return out;
}

Vec eval_drift(const BirkhoffSystem& sys, const Vec& v) {
  Vec out(2 * sys.n);
  sys.drift(as_span(v), as_span(out));
  return out;
}

Mat eval_dispersion(const BirkhoffSystem& sys, const Vec& v) {
  RowMat out(2 * sys.n, 2 * sys.n1);
  sys.dispersion(as_span(v), {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

ActionAngleState action_angle_of(const CartesianState& s) {
  const int n = s.blocks();
  ActionAngleState out{Vec(n), Vec(n)};
  for (int k = 0; k < n; ++k) {
    const double x = s.v[2 * k];
    const double y = s.v[2 * k + 1];
    out.actions[k] = 0.5 * (x * x + y * y);
    out.angles[k] = (x == 0.0 && y == 0.0) ? 0.0 : wrap_angle(std::atan2(y, x));
  }
  return out;
}

CartesianState cartesian_of(const ActionAngleState& s) {
  const auto n = s.actions.size();
  if (s.angles.size() != n) throw PreconditionError("cartesian_of: actions/angles size mismatch");
  CartesianState out{Vec(2 * n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    if (s.actions[k] < 0.0) throw DomainError("cartesian_of: negative action");
    const double r = std::sqrt(2.0 * s.actions[k]);
    out.v[2 * k] = r * std::cos(s.angles[k]);
    out.v[2 * k + 1] = r * std::sin(s.angles[k]);
  }
  return out;
}

Vec actions_of(const Vec& v) {
  const auto n = v.size() / 2;
  Vec I(n);
  for (Eigen::Index k = 0; k < n; ++k) I[k] = 0.5 * (v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1]);
  return I;
}

Eigen::Matrix2d rotation(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2d U;
  U << c, -s, s, c;
  return U;
}

void rotate_blocks(ConstSpan theta, OutSpan v) {
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double c = std::cos(theta[k]), s = std::sin(theta[k]);
    const double x = v[2 * k], y = v[2 * k + 1];
    v[2 * k] = c * x - s * y;
    v[2 * k + 1] = s * x + c * y;
  }
}

CartesianState torus_rotate(const Vec& theta, const CartesianState& s) {
  if (theta.size() != s.blocks()) throw PreconditionError("torus_rotate: dimension mismatch");
  CartesianState out = s;
  rotate_blocks(as_span(theta), as_span(out.v));
  return out;
}

Eigen::Matrix2d planar_aligner(const Eigen::Vector2d& z1, const Eigen::Vector2d& z2) {
  const double n1 = z1.norm(), n2 = z2.norm();
  if (n1 == 0.0 || n2 == 0.0) throw DomainError("planar_aligner: zero vector");
  const Eigen::Vector2d a = z2 / n2, b = z1 / n1;
  double c = a.dot(b);
  double s = a.x() * b.y() - a.y() * b.x();
  const double r = std::hypot(c, s);
  c /= r;
  s /= r;
  Eigen::Matrix2d U;
  U << c, -s, s, c;
  return U;
}

double min_action(const Vec& I) {
  if (I.size() == 0) throw PreconditionError("min_action: empty action vector");
  return I.minCoeff();
}

namespace {

void gram_extremes(const Mat& G, ProbeReport& rep) {
  Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
  rep.max_eigenvalue = std::max(rep.max_eigenvalue, es.eigenvalues().maxCoeff());
}

bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

}  // namespace

ProbeReport probe_torus_system(const TorusSystem& sys, std::size_t points, std::uint64_t seed,
                               double action_scale) {
  sys.validate();
  ProbeReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_eigenvalue = 0.0;
  CounterRng rng(seed, 0x70726f6265ull);
  for (std::size_t p = 0; p < points; ++p) {
    Vec I(sys.d), phi(sys.n);
    for (int i = 0; i < sys.d; ++i) I[i] = action_scale * rng.uniform();
    for (int i = 0; i < sys.n; ++i) phi[i] = kTwoPi * rng.uniform();
    Vec th = eval_theta(sys, I);
    Vec pI = eval_drift_I(sys, I, phi);
    Vec pphi(sys.n);
    sys.drift_phi(as_span(I), as_span(phi), as_span(pphi));
    Mat psi = eval_disp_I(sys, I, phi);
    RowMat psiphi(sys.n, sys.d1);
    sys.disp_phi(as_span(I), as_span(phi), {psiphi.data(), static_cast<std::size_t>(psiphi.size())});
    if (!all_finite(th) || !all_finite(pI) || !all_finite(pphi) || !all_finite(psi) ||
        !all_finite(psiphi)) {
      rep.ok = false;
      rep.message = "non-finite coefficient at probe point " + std::to_string(p);
      return rep;
    }
    gram_extremes(psi * psi.transpose(), rep);
    ++rep.points;
  }
  if (!(rep.min_eigenvalue > 1e-12)) {
    rep.ok = false;
    rep.message = "action dispersion Gram is degenerate at a probe point";
  }
  return rep;
}

ProbeReport probe_birkhoff_system(const BirkhoffSystem& sys, std::size_t points, std::uint64_t seed,
                                  double state_scale) {
  sys.validate();
  ProbeReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_eigenvalue = 0.0;
  CounterRng rng(seed, 0x70726f6265ull + 1);
  for (std::size_t p = 0; p < points; ++p) {
    Vec v(2 * sys.n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = state_scale * rng.normal();
    Vec W = eval_frequencies(sys, actions_of(v));
    Vec P = eval_drift(sys, v);
    Mat B = eval_dispersion(sys, v);
    if (!all_finite(W) || !all_finite(P) || !all_finite(B)) {
      rep.ok = false;
      rep.message = "non-finite coefficient at probe point " + std::to_string(p);
      return rep;
    }
    gram_extremes(B * B.transpose(), rep);
    ++rep.points;
  }
  if (!(rep.min_eigenvalue > 1e-12)) {
    rep.ok = false;
    rep.message = "dispersion Gram B B^T is degenerate at a probe point";
  }
  return rep;
}

}  // namespace slowfast
