#pragma once

#include "slowfast/sde.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace slowfast {

struct PathEnsemble {
  std::vector<SdePath> paths;
  std::size_t size() const { return paths.size(); }
};

// A worker failed; carries the index of the offending path.
class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(const std::string& what, std::size_t path_index, bool numerical)
      : std::runtime_error(what), path_index_(path_index), numerical_(numerical) {}
  std::size_t path_index() const { return path_index_; }
  bool numerical() const { return numerical_; }

 private:
  std::size_t path_index_;
  bool numerical_;
};

// Integrates one path for the given config (seed and trajectory id filled in).
using PathTask = std::function<SdePath(const IntegratorConfig& cfg)>;

// Path i runs with cfg.trajectory_id = i and cfg.seed = base.seed. Output is
// in path order and bitwise independent of the parallelism degree.
PathEnsemble run_ensemble(const PathTask& task, std::size_t n_paths, const IntegratorConfig& base,
                          std::size_t parallelism);

using Observable = std::function<void(ConstSpan state, OutSpan out)>;

// Observable extracting Birkhoff actions I_k = |v_k|^2 / 2 from a state of size 2n.
Observable birkhoff_actions(int n);
// Observable extracting the first d coordinates (torus actions).
Observable leading_coordinates(int d);

// Rows are paths, columns the observable at the given recorded time index.
Mat observe(const PathEnsemble& ens, std::size_t time_index, const Observable& f, int out_dim);

struct OccupationEstimate {
  double value = 0.0;
  double half_width = 0.0;
  std::size_t n_paths = 0;
};

// E int_0^T 1{pred(state(t))} dt with the left-point rule on the recorded grid;
// 95% normal CI from the spread across paths.
OccupationEstimate occupation_fraction(const PathEnsemble& ens, const std::function<bool(ConstSpan)>& pred);

struct ExitTimeLaw {
  double eps = 0.0;  // 0 marks the effective reference
  std::vector<double> exit_times;  // min(tau_R, T) per path
  std::vector<char> exited;
  std::vector<double> times;       // recorded grid
  std::vector<Mat> actions;        // per grid time: n_paths x n stopped actions
};

struct ExitTimeResult {
  std::vector<ExitTimeLaw> per_eps;
  ExitTimeLaw reference;
};

// Runs the Birkhoff system for each eps and the stopped effective equation as
// reference (independent seed), all stopped on leaving {|I| < R}.
ExitTimeResult exit_time_experiment(const BirkhoffSystem& sys, const std::vector<double>& eps_list,
                                    const CartesianState& init, double R, const IntegratorConfig& cfg,
                                    std::size_t n_paths, const TorusQuadrature& quad, std::size_t parallelism);

}  // namespace slowfast
