#pragma once

#include "slowfast/effective.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/torus_averaging.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slowfast {

enum class Scheme { EulerMaruyama, RotationSplitEM };
enum class BoundaryPolicy { ClampAtZero, ReflectAtZero };

std::string to_string(Scheme s);
std::string to_string(BoundaryPolicy p);
Scheme parse_scheme(const std::string& s);
BoundaryPolicy parse_boundary_policy(const std::string& s);

struct IntegratorConfig {
  double step = 1e-3;
  Scheme scheme = Scheme::RotationSplitEM;
  double horizon = 1.0;
  BoundaryPolicy boundary = BoundaryPolicy::ClampAtZero;
  std::uint64_t seed = 0;
  std::uint64_t trajectory_id = 0;
  std::size_t record_stride = 1;  // record every k-th step (the final time is always recorded)
  bool keep_increments = false;

  void validate() const;
  // Number of steps; the horizon must be a multiple of the step.
  std::size_t steps() const;
};

struct StoppingRule {
  enum class Kind { None, ExitActionBall, ExitNormBall, ActionFloor };
  Kind kind = Kind::None;
  double threshold = 0.0;

  static StoppingRule none() { return {}; }
  static StoppingRule exit_action_ball(double R);  // |I| >= R
  static StoppingRule exit_norm_ball(double R);    // |v| >= R (|I| for torus systems)
  static StoppingRule action_floor(double delta);  // min_k I_k <= delta

  bool triggered(ConstSpan actions, ConstSpan cartesian) const;
};

struct SdePath {
  int state_dim = 0;
  int noise_dim = 0;
  double step = 0.0;
  std::vector<double> times;
  std::vector<double> states;      // times.size() x state_dim, row-major
  std::vector<double> increments;  // steps x noise_dim when retained
  std::optional<std::size_t> stopped_at;
  std::optional<double> stop_time;

  std::size_t size() const { return times.size(); }
  ConstSpan state(std::size_t i) const {
    return {states.data() + i * state_dim, static_cast<std::size_t>(state_dim)};
  }
  Vec state_vec(std::size_t i) const;
  std::size_t increment_count() const { return noise_dim ? increments.size() / noise_dim : 0; }
  ConstSpan increment(std::size_t m) const {
    return {increments.data() + m * noise_dim, static_cast<std::size_t>(noise_dim)};
  }
};

// Torus system state layout: (I_1..I_d, phi_1..phi_n).
SdePath integrate_torus_system(const TorusSystem& sys, Epsilon eps, const ActionAngleState& init,
                               const IntegratorConfig& cfg, const StoppingRule& stop = {},
                               const NoiseSource* noise = nullptr);

// Birkhoff state layout: v (2n). Noise: n1 planar drivers (2 n1 components).
SdePath integrate_birkhoff_system(const BirkhoffSystem& sys, Epsilon eps, const CartesianState& init,
                                  const IntegratorConfig& cfg, const StoppingRule& stop = {},
                                  const NoiseSource* noise = nullptr);

// Euler-Maruyama for the effective equation (noise dimension 2n).
SdePath integrate_effective(const EffectiveModel& model, const CartesianState& init, const IntegratorConfig& cfg,
                            const StoppingRule& stop = {}, const NoiseSource* noise = nullptr);

// Averaged Birkhoff action equation, boundary policy applied after each step.
SdePath integrate_averaged_actions(const AveragedActionModel& model, const Vec& init, const IntegratorConfig& cfg,
                                   const StoppingRule& stop = {}, const NoiseSource* noise = nullptr);
// Averaged equation of a torus system (no boundary).
SdePath integrate_averaged_actions(const AveragedModel& model, const Vec& init, const IntegratorConfig& cfg,
                                   const StoppingRule& stop = {}, const NoiseSource* noise = nullptr);

// The exact fast substep of the split scheme: rotates block k by W_k(I) h / eps
// and restores each block norm so actions are unchanged up to one rounding.
void rotation_substep(const BirkhoffSystem& sys, double angle_scale, OutSpan v, OutSpan w_buf);

// Integrates the Ito action equation dI_k = (v_k.P_k + 1/2 |B_k|^2) dt + v_k^T B_k dbeta
// along a stored split-scheme path, reusing its increments. Requires a path
// recorded at every step with increments retained.
SdePath integrate_action_equation(const BirkhoffSystem& sys, Epsilon eps, const SdePath& vpath);

}  // namespace slowfast
