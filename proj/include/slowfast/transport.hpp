#pragma once

// Exact solvers behind the bounded-Lipschitz distance.
//
// For signed weights w on points x, BL = max_alpha g(alpha) with
//   g(alpha) = max { sum w_a f_a : |f_a - f_b| <= alpha d(a,b), |f_a| <= 1 - alpha }.
// In 1-D only neighbouring constraints matter and g(alpha) is the value of
//   min_U sum_a alpha Delta_a |W_a - U_a| + (1 - alpha) sum_a |U_a - U_{a-1}|,
// W the cumulative weights and U_0 = U_m = 0, solved by a slope-trick DP.
// In any dimension BL = min_m max(C(m), 2(P - m)) with C the partial
// transport cost curve and P the positive mass.

#include "slowfast/types.hpp"

#include <vector>

namespace slowfast {

// Sorted distinct support with net (signed) weights.
struct PooledLine {
  std::vector<double> x;
  std::vector<double> w;
};

PooledLine pool_1d(ConstSpan xa, ConstSpan wa, ConstSpan xb, ConstSpan wb);

struct ChainEval {
  double value = 0.0;   // g(alpha)
  double transport = 0.0;  // sum Delta_a |W_a - U_a| at the minimizer
  double disposal = 0.0;   // sum |U_a - U_{a-1}| at the minimizer
};

ChainEval chain_dual_eval(const PooledLine& line, double alpha);

struct ChainMax {
  double value = 0.0;
  double alpha = 0.0;
  int evaluations = 0;
};

// Maximizes the concave piecewise-linear g by cutting planes: every evaluation
// yields the affine majorant alpha*transport + (1-alpha)*disposal.
ChainMax chain_bl_max(const PooledLine& line);

// Exact BL between two weighted point clouds in R^k via successive shortest
// paths on the transport graph. Points with equal coordinates cancel first.
double bl_partial_transport(const Mat& xa, const Vec& wa, const Mat& xb, const Vec& wb);

// W1 on the line: sum Delta_a |W_a|.
double kantorovich_line(const PooledLine& line);

}  // namespace slowfast
