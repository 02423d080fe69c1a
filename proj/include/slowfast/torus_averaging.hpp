#pragma once

#include "slowfast/model_core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace slowfast {

enum class QuadratureKind { TensorTrapezoid, Rank1Lattice };

// Equal-weight node set on the n-torus.
class TorusQuadrature {
 public:
  static TorusQuadrature tensor_trapezoid(int n, int points_per_dim);
  // Korobov-type lattice; an empty generator picks a tabulated default.
  static TorusQuadrature rank1_lattice(int n, int size, std::vector<long> generator = {});
  // 64 points/dim for n <= 3, a 4096-node lattice otherwise.
  static TorusQuadrature default_for(int n);

  QuadratureKind kind() const { return kind_; }
  int dim() const { return n_; }
  std::size_t size() const { return count_; }
  int points_per_dim() const { return points_per_dim_; }
  const std::vector<long>& generator() const { return generator_; }
  ConstSpan node(std::size_t i) const { return {nodes_.data() + i * n_, static_cast<std::size_t>(n_)}; }
  double weight() const { return weight_; }

 private:
  QuadratureKind kind_ = QuadratureKind::TensorTrapezoid;
  int n_ = 0;
  int points_per_dim_ = 0;
  std::vector<long> generator_;
  std::size_t count_ = 0;
  std::vector<double> nodes_;
  double weight_ = 0.0;
};

using AngleFunction = std::function<void(ConstSpan angles, OutSpan out)>;

Vec average_over_torus(const AngleFunction& f, int m, const TorusQuadrature& q);

Vec averaged_drift(const TorusSystem& sys, const Vec& I, const TorusQuadrature& q);
Mat averaged_diffusion(const TorusSystem& sys, const Vec& I, const TorusQuadrature& q);

// Symmetric PSD square root by eigendecomposition. Eigenvalues down to
// -1e-12 * max(1, |A|) are clamped to zero.
Mat principal_sqrt(const Mat& A);

// (1/N) int_0^N P^I(I, phi0 + t theta(I)) dt by composite Gauss-Legendre.
Vec flow_time_average(const TorusSystem& sys, const Vec& I, const Vec& phi0, double N);

struct ResonanceDiagnostic {
  double N = 0.0;
  double delta = 0.0;
  double R = 0.0;
  double estimate = 0.0;
  double half_width = 0.0;
  double ball_volume = 0.0;
  std::size_t samples = 0;
  std::size_t hits = 0;
};

double ball_volume(int d, double R);

// Monte Carlo measure of the actions in B_R whose time averages over [0, N]
// deviate from the torus average by more than delta for some start angle on
// the grid `angle_grid`.
ResonanceDiagnostic resonant_set_measure(const TorusSystem& sys, double N, double delta, double R,
                                         std::size_t samples, const TorusQuadrature& angle_grid,
                                         const TorusQuadrature& average_quad, std::uint64_t seed);

// Nearly rational frequency vectors among random actions: counts draws where
// |k . theta(I)| < tol for some integer 0 < |k|_inf <= k_max.
std::size_t probe_rational_dependence(const FrequencyMap& theta, int d, int n, int k_max,
                                      std::size_t draws, double action_scale, double tol,
                                      std::uint64_t seed);

// Averaged equation dI = <P^I> dt + <<Psi^I>> dW for a torus system.
class AveragedModel {
 public:
  AveragedModel(TorusSystem sys, TorusQuadrature q);
  const TorusSystem& source() const { return sys_; }
  const TorusQuadrature& quadrature() const { return q_; }
  int dim() const { return sys_.d; }
  Vec drift(const Vec& I) const;
  Mat diffusion(const Vec& I) const;
  Mat dispersion(const Vec& I) const;
  // Drift and dispersion in one pass over the nodes.
  void evaluate(const Vec& I, Vec& drift, Mat& dispersion) const;

 private:
  TorusSystem sys_;
  TorusQuadrature q_;
};

}  // namespace slowfast
