#pragma once

#include "slowfast/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace slowfast {

class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(Mat samples);  // uniform weights
  EmpiricalMeasure(Mat samples, Vec weights);

  std::size_t size() const { return static_cast<std::size_t>(samples_.rows()); }
  int dim() const { return static_cast<int>(samples_.cols()); }
  const Mat& samples() const { return samples_; }
  const Vec& weights() const { return weights_; }

  // Samples projected on a direction (length dim()).
  std::vector<double> project(const Vec& direction) const;
  // Draws rows by index with uniform weights (bootstrap resample).
  EmpiricalMeasure resample(const std::vector<std::size_t>& rows) const;

 private:
  Mat samples_;
  Vec weights_;
};

enum class DistanceMethod { ExactLp, Chain1d, Sliced };
enum class BoundKind { Exact, LowerEstimate };
// How per-direction values combine in the sliced estimator. Both are lower
// estimates; Max is tighter, Mean has lower variance.
enum class SliceReduction { Mean, Max };
std::string to_string(DistanceMethod m);
std::string to_string(BoundKind b);
std::string to_string(SliceReduction r);
SliceReduction parse_slice_reduction(const std::string& s);

struct DistanceReport {
  double value = 0.0;
  DistanceMethod method = DistanceMethod::Chain1d;
  BoundKind bound_kind = BoundKind::Exact;
  std::size_t n_slices = 0;
  SliceReduction reduction = SliceReduction::Mean;
  double ci_half_width = 0.0;

  nlohmann::json to_json() const;
};

inline constexpr std::size_t kDefaultSupportCap = 512;
inline constexpr std::size_t kDefaultSlices = 128;

// Exact bounded-Lipschitz distance. In 1-D the chain solver handles any size;
// in k > 1 the pooled support must not exceed support_cap.
DistanceReport bl_distance_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                 std::size_t support_cap = kDefaultSupportCap);

// Mean (or max) over random directions of the exact 1-D distance of the projections.
// A lower estimate of the true distance for k > 1; exact for k = 1.
DistanceReport bl_distance_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                  std::size_t n_slices = kDefaultSlices, std::uint64_t seed = 0,
                                  std::size_t parallelism = 1, SliceReduction reduction = SliceReduction::Mean);

double kantorovich_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct DistanceOptions {
  std::size_t n_slices = kDefaultSlices;
  std::uint64_t seed = 0;
  std::size_t bootstrap = 20;  // replicates for the CI; 0 disables
  std::size_t support_cap = kDefaultSupportCap;
  std::size_t parallelism = 1;
  SliceReduction reduction = SliceReduction::Mean;
};

// Exact when k = 1 or the pooled support is small, sliced otherwise.
DistanceReport bl_distance_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const DistanceOptions& opt);

struct CurveRow {
  double eps = 0.0;
  DistanceReport report;
};

// Distance of each law to the reference with a bootstrap 95% half-width
// (both clouds resampled).
std::vector<CurveRow> convergence_curve(const std::vector<std::pair<double, EmpiricalMeasure>>& family,
                                        const EmpiricalMeasure& reference, const DistanceOptions& opt);

struct UniformRow {
  double eps = 0.0;
  double sup_distance = 0.0;
  double ci_half_width = 0.0;
  std::size_t argmax = 0;
  std::vector<double> per_time;
  DistanceMethod method = DistanceMethod::Chain1d;
  BoundKind bound_kind = BoundKind::Exact;
};

struct TimedLaws {
  double eps = 0.0;
  std::vector<double> times;
  std::vector<EmpiricalMeasure> laws;  // row i of every law belongs to path i
};

// Per eps the max over the time grid of the distance to the reference.
// Bootstrap resamples path indices jointly across times.
std::vector<UniformRow> uniform_in_time_sup(const std::vector<TimedLaws>& laws, const TimedLaws& reference,
                                            const DistanceOptions& opt);

// CSV: one sample per row; with weight_column the last column is a weight.
// A non-numeric first line is treated as a header.
EmpiricalMeasure read_measure_csv(std::istream& is, bool weight_column);

}  // namespace slowfast
