#pragma once

#include "slowfast/sde.hpp"

#include <vector>

namespace slowfast {

// Rotated companion of block k along a stored Birkhoff path. On good segments
// it follows the slow coefficients rotated into its own frame; on bad segments
// (some block small or the state large) it is a frozen rotation of v_k.
struct LiftedCompanion {
  std::size_t block = 0;
  double delta = 0.0;
  std::vector<double> times;
  std::vector<double> states;  // 2 per time
  std::vector<double> tau_minus;
  std::vector<double> tau_plus;
  double max_norm_mismatch = 0.0;       // max_t | |vbar| - |v_k| |
  double relative_norm_mismatch = 0.0;  // divided by max_t |v_k|
  double lambda_drift_bound = 0.0;      // max |P_k| over good steps (drift of vbar)
  double raw_drift_bound = 0.0;         // max |W_k v_k^perp / eps + P_k| over the same steps
  std::size_t lambda_steps = 0;
  std::size_t delta_steps = 0;
};

// Requires a rotation-split path recorded at every step with increments.
LiftedCompanion lifted_companion(const BirkhoffSystem& sys, Epsilon eps, const SdePath& path, std::size_t k,
                                 double delta);

}  // namespace slowfast
