#pragma once

#include "slowfast/torus_averaging.hpp"

#include <cstdint>

namespace slowfast {

// Group averages over the torus action v -> Phi_theta v (blockwise rotations).
Vec effective_drift(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q);
Mat effective_gram(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q);
Mat effective_dispersion(const BirkhoffSystem& sys, const Vec& v, const TorusQuadrature& q);

// Coefficients of the averaged action equation, averaged over v = V_phi(I).
Vec averaged_action_drift(const BirkhoffSystem& sys, const Vec& I, const TorusQuadrature& q);
struct ActionDiffusion {
  Mat S;
  Mat K;
};
ActionDiffusion averaged_action_diffusion(const BirkhoffSystem& sys, const Vec& I, const TorusQuadrature& q);

// dv = R(v) dt + <<B>>(v) dbeta.
class EffectiveModel {
 public:
  EffectiveModel(BirkhoffSystem sys, TorusQuadrature q);
  const BirkhoffSystem& source() const { return sys_; }
  const TorusQuadrature& quadrature() const { return q_; }
  int dim() const { return 2 * sys_.n; }
  Vec drift(const Vec& v) const { return effective_drift(sys_, v, q_); }
  Mat gram(const Vec& v) const { return effective_gram(sys_, v, q_); }
  Mat dispersion(const Vec& v) const { return effective_dispersion(sys_, v, q_); }
  // R and <<B>> in one pass over the nodes.
  void evaluate(const Vec& v, Vec& drift, Mat& dispersion) const;

 private:
  BirkhoffSystem sys_;
  TorusQuadrature q_;
};

// dI = F(I) dt + K(I) dW on the closed positive orthant.
class AveragedActionModel {
 public:
  AveragedActionModel(BirkhoffSystem sys, TorusQuadrature q);
  const BirkhoffSystem& source() const { return sys_; }
  int dim() const { return sys_.n; }
  Vec drift(const Vec& I) const { return averaged_action_drift(sys_, I, q_); }
  ActionDiffusion diffusion(const Vec& I) const { return averaged_action_diffusion(sys_, I, q_); }
  void evaluate(const Vec& I, Vec& drift, Mat& dispersion) const;

 private:
  BirkhoffSystem sys_;
  TorusQuadrature q_;
};

struct EquivarianceReport {
  double drift_defect = 0.0;
  double dispersion_defect = 0.0;
  std::size_t trials = 0;
};
EquivarianceReport check_equivariance(const BirkhoffSystem& sys, const TorusQuadrature& q,
                                      std::size_t trials, std::uint64_t seed);

struct ActionConsistencyReport {
  double drift_mismatch = 0.0;
  double diffusion_mismatch = 0.0;
  std::size_t trials = 0;
};
// Probes random v with min_action(I(v)) >= min_action_floor.
ActionConsistencyReport check_action_consistency(const BirkhoffSystem& sys, const TorusQuadrature& q,
                                                 std::size_t trials, std::uint64_t seed,
                                                 double min_action_floor = 0.01);

}  // namespace slowfast
