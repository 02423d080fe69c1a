#pragma once

// Numerical action-angle normal form of one-degree-of-freedom Hamiltonians
// with a nondegenerate minimum at the origin and closed level curves.
// The flow is x' = -dH/dy, y' = dH/dx (counterclockwise), so the harmonic
// oscillator reduces to the polar map with phi = atan2(y, x).

#include "slowfast/model_core.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace slowfast {

struct Hamiltonian1D {
  std::function<double(double, double)> H;
  std::function<Eigen::Vector2d(double, double)> grad;  // optional; central differences otherwise
  double a_min = 0.0;  // energies in (H(0), a_max] are admissible; a_min records the profile floor
  double a_max = 1.0;
  std::string name;

  double value(double x, double y) const { return H(x, y); }
  Eigen::Vector2d gradient(double x, double y) const;
  double minimum() const { return H(0.0, 0.0); }
  // sqrt(det d^2H(0)), the small-oscillation frequency.
  double base_frequency() const;
};

// H = (x^2 + y^2) / 2.
Hamiltonian1D harmonic_hamiltonian(double a_max = 4.0);
// H = rho/2 + rho^2/4 with rho = x^2 + y^2, so h(I) = I + I^2.
Hamiltonian1D quartic_radial_hamiltonian(double a_max = 4.0);
// H = y^2/2 + x^2/2 + beta x^4/4.
Hamiltonian1D duffing_hamiltonian(double beta = 1.0, double a_max = 4.0);
// Lookup by name: harmonic, quartic-radial, duffing (params: beta, a_max).
Hamiltonian1D builtin_hamiltonian(const std::string& name, const nlohmann::json& params = {});
std::vector<std::string> hamiltonian_names();

// Level curve H = a sampled on a uniform polar grid about the origin.
struct LevelLoop {
  double level = 0.0;
  std::vector<double> psi;
  std::vector<double> radius;
  std::vector<double> speed;  // d t / d psi = r^2 / (r . grad H)
  double area = 0.0;
  double period = 0.0;
  std::vector<double> cos_coef;  // Fourier coefficients of speed
  std::vector<double> sin_coef;

  // Time of flight from the positive x-axis to polar angle psi in [0, 2pi).
  double time_of_flight(double psi) const;
  double speed_at(double psi) const;
};

inline constexpr int kLoopResolution = 256;

// Traces by radial root finding; throws DomainError if the level is not
// starlike about the origin.
LevelLoop trace_level(const Hamiltonian1D& ham, double a, int resolution = kLoopResolution);

// Enclosed area / 2pi. Falls back to contour marching when the level is not
// starlike; DomainError if that fails as well.
double action_of_level(const Hamiltonian1D& ham, double a);
double period_of_level(const Hamiltonian1D& ham, double a);

// Monotone cubic Hermite table of h: I -> a with a knot at (0, H(0)).
class ActionProfile {
 public:
  ActionProfile() = default;
  ActionProfile(std::string name, std::vector<double> levels, std::vector<double> actions,
                std::vector<double> periods, double h0, double base_frequency);

  const std::string& name() const { return name_; }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& actions() const { return actions_; }
  const std::vector<double>& periods() const { return periods_; }
  double max_action() const { return knot_I_.back(); }

  double h(double I) const;      // energy of the action; linear beyond the last knot
  double omega(double I) const;  // h'(I)
  double action_of(double a) const;  // inverse of h by Newton on the interpolant

  nlohmann::json to_json() const;
  static ActionProfile from_json(const nlohmann::json& j);

 private:
  void build_interpolant(double h0, double base_frequency);
  std::size_t interval(double I) const;

  std::string name_;
  std::vector<double> levels_, actions_, periods_;
  std::vector<double> knot_I_, knot_a_, knot_slope_;
};

// Requires at least 8 strictly increasing levels in (H(0), a_max].
ActionProfile build_action_profile(const Hamiltonian1D& ham, const std::vector<double>& level_grid);

// Uniform level grid of `count` levels on (H(0), a_max] skipping the minimum.
std::vector<double> default_level_grid(const Hamiltonian1D& ham, int count = 64);

struct ActionAngle1D {
  double I = 0.0;
  double phi = 0.0;
};

// phi = 2pi (time of flight from the positive x-axis) / period.
ActionAngle1D aa_transform_1dof(const Hamiltonian1D& ham, const ActionProfile& profile, double x, double y);
Eigen::Vector2d aa_inverse_1dof(const Hamiltonian1D& ham, const ActionProfile& profile, double I, double phi);

// Chain of n oscillators in Cartesian normal-form coordinates with W_k = omega(I_k).
// `coupling` gives P (2n), `noise` gives B (2n x 2 n1, row-major).
BirkhoffSystem build_oscillator_chain(std::shared_ptr<const ActionProfile> profile, int n, PhaseField coupling,
                                      PhaseField noise, int n1);

}  // namespace slowfast
