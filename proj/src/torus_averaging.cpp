#include "slowfast/torus_averaging.hpp"

#include "slowfast/noise.hpp"
#include "slowfast/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slowfast {

namespace {

long korobov_default(int n) {
  // Searched offline for M = 4096: maximizes the smallest product norm of a
  // dual lattice vector with small entries.
  switch (n) {
    case 4: return 871;
    case 5: return 219;
    case 6: return 7;
    case 8: return 213;
    default: return 871;
  }
}

}  // namespace

TorusQuadrature TorusQuadrature::tensor_trapezoid(int n, int ppd) {
  if (n < 1 || ppd < 1) throw PreconditionError("tensor_trapezoid: n and points_per_dim must be >= 1");
  TorusQuadrature q;
  q.kind_ = QuadratureKind::TensorTrapezoid;
  q.n_ = n;
  q.points_per_dim_ = ppd;
  std::size_t count = 1;
  for (int i = 0; i < n; ++i) {
    count *= static_cast<std::size_t>(ppd);
    if (count > (std::size_t{1} << 26)) throw PreconditionError("tensor_trapezoid: too many nodes");
  }
  q.count_ = count;
  q.nodes_.resize(count * n);
  const double step = kTwoPi / ppd;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t r = i;
    for (int j = 0; j < n; ++j) {
      q.nodes_[i * n + j] = step * static_cast<double>(r % ppd);
      r /= ppd;
    }
  }
  q.weight_ = 1.0 / static_cast<double>(count);
  return q;
}

TorusQuadrature TorusQuadrature::rank1_lattice(int n, int size, std::vector<long> gen) {
  if (n < 1 || size < 1) throw PreconditionError("rank1_lattice: n and size must be >= 1");
  if (gen.empty()) {
    const long a = korobov_default(n);
    long z = 1;
    for (int j = 0; j < n; ++j) {
      gen.push_back(z);
      z = (z * a) % size;
    }
  }
  if (static_cast<int>(gen.size()) != n) throw PreconditionError("rank1_lattice: generator length != n");
  TorusQuadrature q;
  q.kind_ = QuadratureKind::Rank1Lattice;
  q.n_ = n;
  q.generator_ = gen;
  q.count_ = static_cast<std::size_t>(size);
  q.nodes_.resize(q.count_ * n);
  for (std::size_t i = 0; i < q.count_; ++i) {
    for (int j = 0; j < n; ++j) {
      const long r = static_cast<long>((static_cast<long long>(i) * gen[j]) % size);
      q.nodes_[i * n + j] = kTwoPi * static_cast<double>((r + size) % size) / size;
    }
  }
  q.weight_ = 1.0 / static_cast<double>(size);
  return q;
}

TorusQuadrature TorusQuadrature::default_for(int n) {
  if (n <= 3) return tensor_trapezoid(n, 64);
  return rank1_lattice(n, 4096);
}

Vec average_over_torus(const AngleFunction& f, int m, const TorusQuadrature& q) {
  Vec acc = Vec::Zero(m), buf(m);
  for (std::size_t i = 0; i < q.size(); ++i) {
    f(q.node(i), as_span(buf));
    acc += buf;
  }
  return acc * q.weight();
}

Vec averaged_drift(const TorusSystem& sys, const Vec& I, const TorusQuadrature& q) {
  if (q.dim() != sys.n) throw PreconditionError("averaged_drift: quadrature dimension != n");
  return average_over_torus([&](ConstSpan phi, OutSpan out) { sys.drift_I(as_span(I), phi, out); },
                            sys.d, q);
}

namespace {

void check_symmetric(const Mat& A, const char* what) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InternalError(std::string(what) + ": result is not symmetric");
}

}  // namespace

Mat averaged_diffusion(const TorusSystem& sys, const Vec& I, const TorusQuadrature& q) {
  if (q.dim() != sys.n) throw PreconditionError("averaged_diffusion: quadrature dimension != n");
  RowMat psi(sys.d, sys.d1);
  Mat acc = Mat::Zero(sys.d, sys.d);
  for (std::size_t i = 0; i < q.size(); ++i) {
    sys.disp_I(as_span(I), q.node(i), {psi.data(), static_cast<std::size_t>(psi.size())});
    acc.noalias() += psi * psi.transpose();
  }
  acc *= q.weight();
  check_symmetric(acc, "averaged_diffusion");
  return 0.5 * (acc + acc.transpose());
}

Mat principal_sqrt(const Mat& A) {
  if (A.rows() != A.cols()) throw DomainError("principal_sqrt: matrix is not square");
  if (A.size() == 0) return A;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw DomainError("principal_sqrt: matrix is not symmetric");
  if (A.rows() == 1) {
    if (A(0, 0) < -1e-12 * scale) throw DomainError("principal_sqrt: matrix is indefinite");
    return Mat::Constant(1, 1, std::sqrt(std::max(0.0, A(0, 0))));
  }
  const Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) throw DomainError("principal_sqrt: eigendecomposition failed");
  Vec lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-12 * scale) throw DomainError("principal_sqrt: matrix is indefinite");
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  const Mat& Q = es.eigenvectors();
  Mat K = Q * lam.asDiagonal() * Q.transpose();
  return 0.5 * (K + K.transpose());
}

Vec flow_time_average(const TorusSystem& sys, const Vec& I, const Vec& phi0, double N) {
  if (!(N > 0.0)) throw PreconditionError("flow_time_average: N must be positive");
  using GL = boost::math::quadrature::gauss<double, 16>;
  const auto& xa = GL::abscissa();
  const auto& wa = GL::weights();
  // Full node list on [-1, 1].
  std::vector<double> x, w;
  for (std::size_t i = 0; i < xa.size(); ++i) {
    x.push_back(xa[i]);
    w.push_back(wa[i]);
    if (xa[i] != 0.0) {
      x.push_back(-xa[i]);
      w.push_back(wa[i]);
    }
  }
  const Vec th = eval_theta(sys, I);
  const double speed = th.size() ? th.cwiseAbs().maxCoeff() : 0.0;
  const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(N * speed / (kPi / 2))));
  const double width = N / static_cast<double>(panels);
  Vec acc = Vec::Zero(sys.d), buf(sys.d), phi(sys.n);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * width;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = mid + 0.5 * width * x[i];
      for (int j = 0; j < sys.n; ++j) phi[j] = wrap_angle(phi0[j] + t * th[j]);
      sys.drift_I(as_span(I), as_span(phi), as_span(buf));
      acc += (0.5 * width * w[i]) * buf;
    }
  }
  return acc / N;
}

double ball_volume(int d, double R) {
  return std::pow(kPi, 0.5 * d) * std::pow(R, d) / std::tgamma(0.5 * d + 1.0);
}

ResonanceDiagnostic resonant_set_measure(const TorusSystem& sys, double N, double delta, double R,
                                         std::size_t samples, const TorusQuadrature& angle_grid,
                                         const TorusQuadrature& average_quad, std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("resonant_set_measure: samples must be >= 1");
  if (angle_grid.dim() != sys.n || average_quad.dim() != sys.n)
    throw PreconditionError("resonant_set_measure: quadrature dimension != n");
  std::vector<char> hit(samples, 0);
  parallel_for(samples, default_parallelism(), [&](std::size_t s) {
    CounterRng rng(seed, s);
    Vec I(sys.d);
    for (int i = 0; i < sys.d; ++i) I[i] = rng.normal();
    const double u = rng.uniform();
    I *= R * std::pow(u, 1.0 / sys.d) / I.norm();
    const Vec avg = averaged_drift(sys, I, average_quad);
    Vec phi0(sys.n);
    for (std::size_t g = 0; g < angle_grid.size(); ++g) {
      for (int j = 0; j < sys.n; ++j) phi0[j] = angle_grid.node(g)[j];
      if ((flow_time_average(sys, I, phi0, N) - avg).norm() > delta) {
        hit[s] = 1;
        return;
      }
    }
  });
  ResonanceDiagnostic out;
  out.N = N;
  out.delta = delta;
  out.R = R;
  out.samples = samples;
  out.hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  out.ball_volume = ball_volume(sys.d, R);
  const double n = static_cast<double>(samples);
  const double p = static_cast<double>(out.hits) / n;
  const double z = 1.96;
  // Wilson score half-width, non-degenerate at p = 0 or 1.
  const double hw = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n);
  out.estimate = p * out.ball_volume;
  out.half_width = hw * out.ball_volume;
  return out;
}

std::size_t probe_rational_dependence(const FrequencyMap& theta, int d, int n, int k_max,
                                      std::size_t draws, double action_scale, double tol,
                                      std::uint64_t seed) {
  CounterRng rng(seed, 0x616e6f736f76ull);
  std::vector<double> I(d), th(n);
  std::vector<int> k(n);
  std::size_t near = 0;
  for (std::size_t s = 0; s < draws; ++s) {
    for (double& x : I) x = action_scale * rng.uniform();
    theta(I, th);
    // Enumerate k in [-k_max, k_max]^n \ {0}, up to sign.
    std::fill(k.begin(), k.end(), -k_max);
    bool found = false;
    for (;;) {
      bool zero = true;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) {
        zero = zero && k[j] == 0;
        dot += k[j] * th[j];
      }
      if (!zero && std::abs(dot) < tol) {
        found = true;
        break;
      }
      int j = 0;
      while (j < n && k[j] == k_max) k[j++] = -k_max;
      if (j == n) break;
      ++k[j];
    }
    if (found) ++near;
  }
  return near;
}

AveragedModel::AveragedModel(TorusSystem sys, TorusQuadrature q) : sys_(std::move(sys)), q_(std::move(q)) {
  sys_.validate();
  if (q_.dim() != sys_.n) throw PreconditionError("AveragedModel: quadrature dimension != n");
}

Vec AveragedModel::drift(const Vec& I) const { return averaged_drift(sys_, I, q_); }

Mat AveragedModel::diffusion(const Vec& I) const { return averaged_diffusion(sys_, I, q_); }

Mat AveragedModel::dispersion(const Vec& I) const { return principal_sqrt(diffusion(I)); }

void AveragedModel::evaluate(const Vec& I, Vec& drift, Mat& dispersion) const {
  const int d = sys_.d;
  Vec acc = Vec::Zero(d), buf(d);
  RowMat psi(d, sys_.d1);
  Mat a = Mat::Zero(d, d);
  for (std::size_t i = 0; i < q_.size(); ++i) {
    sys_.drift_I(as_span(I), q_.node(i), as_span(buf));
    acc += buf;
    sys_.disp_I(as_span(I), q_.node(i), {psi.data(), static_cast<std::size_t>(psi.size())});
    a.noalias() += psi * psi.transpose();
  }
  drift = acc * q_.weight();
  a *= q_.weight();
  dispersion = principal_sqrt(0.5 * (a + a.transpose()));
}

}  // namespace slowfast
