#include "slowfast/effective.hpp"

#include "slowfast/noise.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

namespace {

void require_dims(const BirkhoffSystem& sys, const TorusQuadrature& q, Eigen::Index size, Eigen::Index expected,
                  const char* what) {
  if (q.dim() != sys.n) throw PreconditionError(std::string(what) + ": quadrature dimension != n");
  if (size != expected) throw PreconditionError(std::string(what) + ": state dimension mismatch");
}

// Rotates row-block k of M (2 rows) by angle -theta_k.
void unrotate_rows(ConstSpan theta, RowMat& M) {
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double c = std::cos(theta[k]), s = std::sin(theta[k]);
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double x = M(2 * k, j), y = M(2 * k + 1, j);
      M(2 * k, j) = c * x + s * y;
      M(2 * k + 1, j) = -s * x + c * y;
    }
  }
}

void unrotate_vec(ConstSpan theta, Vec& p) {
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double c = std::cos(theta[k]), s = std::sin(theta[k]);
    const double x = p[2 * k], y = p[2 * k + 1];
    p[2 * k] = c * x + s * y;
    p[2 * k + 1] = -s * x + c * y;
  }
}

struct GroupAverages {
  Vec R;
  Mat X;
};

GroupAverages group_average(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q, bool drift,
                            bool gram) {
  const int m = 2 * sys.n;
  GroupAverages out{Vec::Zero(m), Mat::Zero(m, m)};
  Vec u(m), p(m);
  RowMat B(m, 2 * sys.n1);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const ConstSpan th = q.node(i);
    u = v;
    rotate_blocks(th, as_span(u));
    if (drift) {
      sys.drift(as_span(u), as_span(p));
      unrotate_vec(th, p);
      out.R += p;
    }
    if (gram) {
      sys.dispersion(as_span(u), {B.data(), static_cast<std::size_t>(B.size())});
      unrotate_rows(th, B);
      out.X.noalias() += B * B.transpose();
    }
  }
  out.R *= q.weight();
  out.X *= q.weight();
  if (gram) {
    const double scale = std::max(1.0, out.X.cwiseAbs().maxCoeff());
    if ((out.X - out.X.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw InternalError("effective_gram: result is not symmetric");
    out.X = 0.5 * (out.X + out.X.transpose());
  }
  return out;
}

Vec point_on_torus(const Vec& I, ConstSpan phi) {
  Vec v(2 * I.size());
  for (Eigen::Index k = 0; k < I.size(); ++k) {
    const double r = std::sqrt(2.0 * I[k]);
    v[2 * k] = r * std::cos(phi[k]);
    v[2 * k + 1] = r * std::sin(phi[k]);
  }
  return v;
}

void check_actions(const Vec& I, const char* what) {
  for (Eigen::Index k = 0; k < I.size(); ++k)
    if (!(I[k] >= 0.0)) throw DomainError(std::string(what) + ": negative action");
}

// Accumulates F and S over the torus {V_phi(I)}.
void action_averages(const BirkhoffSystem& sys, const Vec& I, const TorusQuadrature& q, Vec* F, Mat* S) {
  const int n = sys.n, m = 2 * n, c = 2 * sys.n1;
  Vec p(m);
  RowMat B(m, c);
  Eigen::RowVectorXd rows(c);
  Mat rk(n, c);
  if (F) *F = Vec::Zero(n);
  if (S) *S = Mat::Zero(n, n);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec v = point_on_torus(I, q.node(i));
    sys.dispersion(as_span(v), {B.data(), static_cast<std::size_t>(B.size())});
    if (F) {
      sys.drift(as_span(v), as_span(p));
      for (int k = 0; k < n; ++k) {
        (*F)[k] += v[2 * k] * p[2 * k] + v[2 * k + 1] * p[2 * k + 1] +
                   0.5 * (B.row(2 * k).squaredNorm() + B.row(2 * k + 1).squaredNorm());
      }
    }
    if (S) {
      for (int k = 0; k < n; ++k) rk.row(k) = v[2 * k] * B.row(2 * k) + v[2 * k + 1] * B.row(2 * k + 1);
      S->noalias() += rk * rk.transpose();
    }
  }
  if (F) *F *= q.weight();
  if (S) {
    *S *= q.weight();
    *S = 0.5 * (*S + S->transpose());
  }
}

}  // namespace

Vec effective_drift(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q) {
  require_dims(sys, q, v.size(), 2 * sys.n, "effective_drift");
  return group_average(sys, v, q, true, false).R;
}

Mat effective_gram(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q) {
  require_dims(sys, q, v.size(), 2 * sys.n, "effective_gram");
  return group_average(sys, v, q, false, true).X;
}

Mat effective_dispersion(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q) {
  return principal_sqrt(effective_gram(sys, v, q));
}

Vec averaged_action_drift(const BirkhoffSystem& sys, const Vec& I, const TorusQuadrature& q) {
  require_dims(sys, q, I.size(), sys.n, "averaged_action_drift");
  check_actions(I, "averaged_action_drift");
  Vec F;
  action_averages(sys, I, q, &F, nullptr);
  return F;
}

ActionDiffusion averaged_action_diffusion(const BirkhoffSystem& sys, const Vec& I, const TorusQuadrature& q) {
  require_dims(sys, q, I.size(), sys.n, "averaged_action_diffusion");
  check_actions(I, "averaged_action_diffusion");
  ActionDiffusion out;
  action_averages(sys, I, q, nullptr, &out.S);
  out.K = principal_sqrt(out.S);
  return out;
}

EffectiveModel::EffectiveModel(BirkhoffSystem sys, TorusQuadrature q) : sys_(std::move(sys)), q_(std::move(q)) {
  sys_.validate();
  if (q_.dim() != sys_.n) throw PreconditionError("EffectiveModel: quadrature dimension != n");
}

void EffectiveModel::evaluate(const Vec& v, Vec& drift, Mat& dispersion) const {
  GroupAverages g = group_average(sys_, v, q_, true, true);
  drift = std::move(g.R);
  dispersion = principal_sqrt(g.X);
}

AveragedActionModel::AveragedActionModel(BirkhoffSystem sys, TorusQuadrature q)
    : sys_(std::move(sys)), q_(std::move(q)) {
  sys_.validate();
  if (q_.dim() != sys_.n) throw PreconditionError("AveragedActionModel: quadrature dimension != n");
}

void AveragedActionModel::evaluate(const Vec& I, Vec& drift, Mat& dispersion) const {
  check_actions(I, "AveragedActionModel");
  Mat S;
  action_averages(sys_, I, q_, &drift, &S);
  dispersion = principal_sqrt(S);
}

EquivarianceReport check_equivariance(const BirkhoffSystem& sys, const TorusQuadrature& q, std::size_t trials,
                                      std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("check_equivariance: trials must be >= 1");
  EquivarianceReport rep;
  CounterRng rng(seed, 0x6571756976ull);
  const int n = sys.n, m = 2 * n;
  for (std::size_t t = 0; t < trials; ++t) {
    Vec v(m), th(n);
    for (int i = 0; i < m; ++i) v[i] = rng.normal();
    for (int i = 0; i < n; ++i) th[i] = kTwoPi * rng.uniform();
    Mat Phi = Mat::Zero(m, m);
    for (int k = 0; k < n; ++k) Phi.block<2, 2>(2 * k, 2 * k) = rotation(th[k]);
    const Vec u = Phi * v;
    GroupAverages at_v = group_average(sys, v, q, true, true);
    GroupAverages at_u = group_average(sys, u, q, true, true);
    rep.drift_defect = std::max(rep.drift_defect, (at_u.R - Phi * at_v.R).cwiseAbs().maxCoeff());
    const Mat Bv = principal_sqrt(at_v.X), Bu = principal_sqrt(at_u.X);
    rep.dispersion_defect =
        std::max(rep.dispersion_defect, (Bu - Phi * Bv * Phi.transpose()).cwiseAbs().maxCoeff());
    ++rep.trials;
  }
  return rep;
}

ActionConsistencyReport check_action_consistency(const BirkhoffSystem& sys, const TorusQuadrature& q,
                                                 std::size_t trials, std::uint64_t seed,
                                                 double min_action_floor) {
  ActionConsistencyReport rep;
  CounterRng rng(seed, 0x616374636full);
  const int n = sys.n, m = 2 * n, c = 2 * sys.n1;
  RowMat B(m, c);
  for (std::size_t t = 0; t < trials; ++t) {
    Vec v(m);
    do {
      for (int i = 0; i < m; ++i) v[i] = rng.normal();
    } while (min_action(actions_of(v)) < min_action_floor);
    const Vec I = actions_of(v);

    // Ito drift of I_k along the effective equation.
    GroupAverages g = group_average(sys, v, q, true, true);
    Vec hs = Vec::Zero(n), u(m);
    for (std::size_t i = 0; i < q.size(); ++i) {
      u = v;
      rotate_blocks(q.node(i), as_span(u));
      sys.dispersion(as_span(u), {B.data(), static_cast<std::size_t>(B.size())});
      for (int k = 0; k < n; ++k) hs[k] += B.row(2 * k).squaredNorm() + B.row(2 * k + 1).squaredNorm();
    }
    hs *= q.weight();
    Vec lhs(n);
    for (int k = 0; k < n; ++k) lhs[k] = v[2 * k] * g.R[2 * k] + v[2 * k + 1] * g.R[2 * k + 1] + 0.5 * hs[k];
    const Vec F = averaged_action_drift(sys, I, q);
    rep.drift_mismatch = std::max(rep.drift_mismatch, (lhs - F).cwiseAbs().maxCoeff());

    // Gram of the rows v_k^T <<B>>_k against S(I).
    const Mat D = principal_sqrt(g.X);
    Mat M(n, m);
    for (int k = 0; k < n; ++k) M.row(k) = v[2 * k] * D.row(2 * k) + v[2 * k + 1] * D.row(2 * k + 1);
    const Mat G = M * M.transpose();
    const ActionDiffusion ad = averaged_action_diffusion(sys, I, q);
    rep.diffusion_mismatch = std::max(rep.diffusion_mismatch, (G - ad.S).cwiseAbs().maxCoeff());
    ++rep.trials;
  }
  return rep;
}

}  // namespace slowfast
