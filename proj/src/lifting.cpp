#include "slowfast/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slowfast {

namespace {

struct Segmenter {
  double delta;
  // Leaves a good segment when some block is small or the state is large.
  bool bad(ConstSpan v, int n) const {
    double mn = std::numeric_limits<double>::infinity(), sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double r2 = v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1];
      mn = std::min(mn, std::sqrt(r2));
      sq += r2;
    }
    return mn <= delta || std::sqrt(sq) >= 1.0 / delta;
  }
  // Re-enters once all blocks are at least 2 delta and the state at most 1/(2 delta).
  bool good(ConstSpan v, int n) const {
    double mn = std::numeric_limits<double>::infinity(), sq = 0.0;
    for (int k = 0; k < n; ++k) {
      const double r2 = v[2 * k] * v[2 * k] + v[2 * k + 1] * v[2 * k + 1];
      mn = std::min(mn, std::sqrt(r2));
      sq += r2;
    }
    return mn >= 2.0 * delta && std::sqrt(sq) <= 0.5 / delta;
  }
};

Eigen::Matrix2d safe_aligner(const Eigen::Vector2d& z1, const Eigen::Vector2d& z2) {
  if (z1.squaredNorm() == 0.0 || z2.squaredNorm() == 0.0) return Eigen::Matrix2d::Identity();
  return planar_aligner(z1, z2);
}

}  // namespace

LiftedCompanion lifted_companion(const BirkhoffSystem& sys, Epsilon eps, const SdePath& path, std::size_t k,
                                 double delta) {
  const int n = sys.n, m2 = 2 * n, c = 2 * sys.n1;
  if (k >= static_cast<std::size_t>(n)) throw PreconditionError("lifted_companion: block index out of range");
  if (!(delta > 0.0 && delta < 0.5)) throw PreconditionError("lifted_companion: delta must lie in (0, 1/2)");
  if (path.state_dim != m2 || path.noise_dim != c)
    throw PreconditionError("lifted_companion: path does not belong to this system");
  const std::size_t steps = path.increment_count();
  if (steps == 0 || path.size() != steps + 1)
    throw PreconditionError("lifted_companion: path must be recorded at every step with retained increments");

  LiftedCompanion out;
  out.block = k;
  out.delta = delta;
  out.times = path.times;
  out.states.reserve(2 * path.size());

  const double h = path.step, inv_eps = 1.0 / eps.value();
  const Segmenter seg{delta};
  Vec v(m2);
  std::vector<double> w(n), p(m2), B(m2 * c);
  auto block_of = [&](ConstSpan s) { return Eigen::Vector2d(s[2 * k], s[2 * k + 1]); };

  Eigen::Vector2d vbar = block_of(path.state(0));
  bool on_lambda = !seg.bad(path.state(0), n);
  Eigen::Matrix2d U_frozen = Eigen::Matrix2d::Identity();
  if (!on_lambda) out.tau_minus.push_back(0.0);
  double max_vk = 0.0;

  auto note = [&](std::size_t m) {
    const Eigen::Vector2d vk = block_of(path.state(m));
    max_vk = std::max(max_vk, vk.norm());
    out.max_norm_mismatch = std::max(out.max_norm_mismatch, std::abs(vbar.norm() - vk.norm()));
    out.states.push_back(vbar.x());
    out.states.push_back(vbar.y());
  };
  note(0);

  for (std::size_t m = 0; m < steps; ++m) {
    if (on_lambda) {
      const ConstSpan s = path.state(m);
      for (int i = 0; i < m2; ++i) v[i] = s[i];
      const Eigen::Vector2d vk_before(v[2 * k], v[2 * k + 1]);
      rotation_substep(sys, h * inv_eps, as_span(v), w);
      sys.drift(as_span(v), p);
      sys.dispersion(as_span(v), B);
      const ConstSpan dW = path.increment(m);
      Eigen::Vector2d x(p[2 * k] * h, p[2 * k + 1] * h);
      for (int j = 0; j < c; ++j) {
        x.x() += B[(2 * k) * c + j] * dW[j];
        x.y() += B[(2 * k + 1) * c + j] * dW[j];
      }
      const Eigen::Vector2d vstar(v[2 * k], v[2 * k + 1]);
      vbar += safe_aligner(vbar, vstar) * x;
      const Eigen::Vector2d pk(p[2 * k], p[2 * k + 1]);
      const Eigen::Vector2d fast(-vk_before.y() * w[k] * inv_eps, vk_before.x() * w[k] * inv_eps);
      out.lambda_drift_bound = std::max(out.lambda_drift_bound, pk.norm());
      out.raw_drift_bound = std::max(out.raw_drift_bound, (fast + pk).norm());
      ++out.lambda_steps;
      if (seg.bad(path.state(m + 1), n)) {
        on_lambda = false;
        out.tau_minus.push_back(path.times[m + 1]);
        U_frozen = safe_aligner(vbar, block_of(path.state(m + 1)));
      }
    } else {
      vbar = U_frozen * block_of(path.state(m + 1));
      ++out.delta_steps;
      if (seg.good(path.state(m + 1), n)) {
        on_lambda = true;
        out.tau_plus.push_back(path.times[m + 1]);
      }
    }
    note(m + 1);
  }
  out.relative_norm_mismatch = max_vk > 0.0 ? out.max_norm_mismatch / max_vk : 0.0;
  return out;
}

}  // namespace slowfast
