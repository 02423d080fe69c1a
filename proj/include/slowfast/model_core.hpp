#pragma once

#include "slowfast/types.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace slowfast {

// Small parameter in (0, 1].
class Epsilon {
 public:
  explicit Epsilon(double value);
  double value() const { return value_; }

 private:
  double value_;
};

struct ActionAngleState {
  Vec actions;
  Vec angles;  // each in [0, 2pi)
};

// 2n coordinates, block k stored as (v[2k], v[2k+1]).
struct CartesianState {
  Vec v;
  int blocks() const { return static_cast<int>(v.size() / 2); }
};

// Coefficient callables write into caller-owned buffers so the integrators
// never allocate per step. Matrices are written row-major.
using FrequencyMap = std::function<void(ConstSpan actions, OutSpan out)>;
using TorusField = std::function<void(ConstSpan actions, ConstSpan angles, OutSpan out)>;
using PhaseField = std::function<void(ConstSpan v, OutSpan out)>;

// dI = P^I dt + Psi^I dbeta,  dphi = (theta(I)/eps + P^phi) dt + Psi^phi dbeta  (slow time).
struct TorusSystem {
  int d = 0;
  int n = 0;
  int d1 = 0;
  FrequencyMap theta;      // R^d -> R^n
  TorusField drift_I;      // R^d
  TorusField drift_phi;    // R^n
  TorusField disp_I;       // d x d1
  TorusField disp_phi;     // n x d1
  double growth_q = 0.0;
  std::string name;

  void validate() const;
};

// dv_k = (W_k(I)/eps) v_k^perp dt + P_k(v) dt + sum_j B_kj(v) dbeta_j.
struct BirkhoffSystem {
  int n = 0;
  int n1 = 0;
  FrequencyMap frequencies;  // W: R^n_+ -> R^n
  PhaseField drift;          // P: R^2n -> R^2n
  PhaseField dispersion;     // B: R^2n -> 2n x 2n1
  double growth_q = 0.0;
  std::string name;

  void validate() const;
};

// Convenience evaluators returning Eigen objects (allocate; not for inner loops).
Vec eval_theta(const TorusSystem& sys, const Vec& I);
Vec eval_drift_I(const TorusSystem& sys, const Vec& I, const Vec& phi);
Mat eval_disp_I(const TorusSystem& sys, const Vec& I, const Vec& phi);
Vec eval_frequencies(const BirkhoffSystem& sys, const Vec& I);
Vec eval_drift(const BirkhoffSystem& sys, const Vec& v);
Mat eval_dispersion(const BirkhoffSystem& sys, const Vec& v);

double wrap_angle(double a);

ActionAngleState action_angle_of(const CartesianState& s);
CartesianState cartesian_of(const ActionAngleState& s);
Vec actions_of(const Vec& v);

Eigen::Matrix2d rotation(double angle);
CartesianState torus_rotate(const Vec& theta, const CartesianState& s);
// In-place block rotation, used by integrators.
void rotate_blocks(ConstSpan theta, OutSpan v);

Eigen::Matrix2d planar_aligner(const Eigen::Vector2d& z1, const Eigen::Vector2d& z2);

double min_action(const Vec& I);

struct ProbeReport {
  bool ok = true;
  std::size_t points = 0;
  double min_eigenvalue = 0.0;  // of the diffusion Gram over probed points
  double max_eigenvalue = 0.0;
  std::string message;
};

// Samples random states and checks finiteness, dimensions and ellipticity of
// the dispersion Gram (Psi^I Psi^I^T, resp. B B^T).
ProbeReport probe_torus_system(const TorusSystem& sys, std::size_t points, std::uint64_t seed,
                               double action_scale = 1.0);
ProbeReport probe_birkhoff_system(const BirkhoffSystem& sys, std::size_t points, std::uint64_t seed,
                                  double state_scale = 1.0);

}  // namespace slowfast
