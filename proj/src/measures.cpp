#include "slowfast/measures.hpp"

#include "slowfast/noise.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/transport.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>

namespace slowfast {

EmpiricalMeasure::EmpiricalMeasure(Mat samples)
    : EmpiricalMeasure(std::move(samples), Vec()) {}

EmpiricalMeasure::EmpiricalMeasure(Mat samples, Vec weights) : samples_(std::move(samples)) {
  const auto m = samples_.rows();
  if (m < 1) throw DomainError("EmpiricalMeasure: no samples");
  if (!samples_.allFinite()) throw DomainError("EmpiricalMeasure: non-finite sample");
  if (weights.size() == 0) {
    weights_ = Vec::Constant(m, 1.0 / static_cast<double>(m));
    return;
  }
  if (weights.size() != m) throw DomainError("EmpiricalMeasure: weight count != sample count");
  if (!weights.allFinite() || weights.minCoeff() < 0.0) throw DomainError("EmpiricalMeasure: negative weight");
  const double s = weights.sum();
  if (!(s > 0.0)) throw DomainError("EmpiricalMeasure: weights sum to zero");
  weights_ = weights / s;
}

std::vector<double> EmpiricalMeasure::project(const Vec& u) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = samples_.row(i).dot(u);
  return out;
}

EmpiricalMeasure EmpiricalMeasure::resample(const std::vector<std::size_t>& rows) const {
  Mat s(rows.size(), samples_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) s.row(i) = samples_.row(rows[i]);
  return EmpiricalMeasure(std::move(s));
}

std::string to_string(DistanceMethod m) {
  switch (m) {
    case DistanceMethod::ExactLp: return "exact-lp";
    case DistanceMethod::Chain1d: return "chain-1d";
    case DistanceMethod::Sliced: return "sliced";
  }
  return "?";
}

std::string to_string(BoundKind b) { return b == BoundKind::Exact ? "exact" : "lower-estimate"; }

std::string to_string(SliceReduction r) { return r == SliceReduction::Mean ? "mean" : "max"; }

SliceReduction parse_slice_reduction(const std::string& s) {
  if (s == "mean") return SliceReduction::Mean;
  if (s == "max") return SliceReduction::Max;
  throw DomainError("unknown slice reduction '" + s + "' (expected mean or max)");
}

nlohmann::json DistanceReport::to_json() const {
  nlohmann::json j;
  j["value"] = value;
  j["method"] = to_string(method);
  j["bound_kind"] = to_string(bound_kind);
  if (method == DistanceMethod::Sliced) {
    j["n_slices"] = n_slices;
    j["reduction"] = to_string(reduction);
  }
  j["ci_half_width"] = ci_half_width;
  return j;
}

namespace {

void require_same_dim(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != nu.dim()) throw DomainError("distance: measures live in different dimensions");
}

double chain_value(const std::vector<double>& xa, const Vec& wa, const std::vector<double>& xb, const Vec& wb) {
  const PooledLine line = pool_1d(xa, as_span(wa), xb, as_span(wb));
  return std::clamp(chain_bl_max(line).value, 0.0, 2.0);
}

std::vector<double> column(const EmpiricalMeasure& m) {
  std::vector<double> x(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) x[i] = m.samples()(i, 0);
  return x;
}

std::vector<std::size_t> bootstrap_rows(const Vec& w, CounterRng& rng) {
  const std::size_t n = static_cast<std::size_t>(w.size());
  std::vector<std::size_t> rows(n);
  const double w0 = w[0];
  const bool uniform = (w.array() == w0).all();
  if (uniform) {
    for (auto& r : rows) r = rng.index(n);
    return rows;
  }
  std::vector<double> cdf(n);
  std::partial_sum(w.data(), w.data() + n, cdf.begin());
  for (auto& r : rows) {
    const double u = rng.uniform() * cdf.back();
    r = std::min<std::size_t>(n - 1, std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
  return rows;
}

double half_width(const std::vector<double>& reps) {
  if (reps.size() < 2) return 0.0;
  const double n = static_cast<double>(reps.size());
  const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : reps) ss += (r - mean) * (r - mean);
  return 1.96 * std::sqrt(ss / (n - 1));
}

}  // namespace

DistanceReport bl_distance_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap) {
  require_same_dim(mu, nu);
  DistanceReport rep;
  rep.bound_kind = BoundKind::Exact;
  if (mu.dim() == 1) {
    rep.method = DistanceMethod::Chain1d;
    rep.value = chain_value(column(mu), mu.weights(), column(nu), nu.weights());
    return rep;
  }
  if (mu.size() + nu.size() > cap)
    throw DomainError("bl_distance_exact: pooled support of " + std::to_string(mu.size() + nu.size()) +
                      " points exceeds the cap of " + std::to_string(cap) + "; use bl_distance_sliced instead");
  rep.method = DistanceMethod::ExactLp;
  rep.value = bl_partial_transport(mu.samples(), mu.weights(), nu.samples(), nu.weights());
  return rep;
}

DistanceReport bl_distance_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t n_slices,
                                  std::uint64_t seed, std::size_t parallelism, SliceReduction reduction) {
  require_same_dim(mu, nu);
  DistanceReport rep;
  rep.method = DistanceMethod::Sliced;
  if (mu.dim() == 1) {
    rep.value = chain_value(column(mu), mu.weights(), column(nu), nu.weights());
    rep.n_slices = 1;
    rep.bound_kind = BoundKind::Exact;
    return rep;
  }
  if (n_slices < 1) throw PreconditionError("bl_distance_sliced: n_slices must be >= 1");
  rep.bound_kind = BoundKind::LowerEstimate;
  rep.n_slices = n_slices;
  rep.reduction = reduction;
  std::vector<double> vals(n_slices);
  parallel_for(n_slices, parallelism, [&](std::size_t s) {
    CounterRng rng(seed, s);
    Vec u(mu.dim());
    do {
      for (int j = 0; j < mu.dim(); ++j) u[j] = rng.normal();
    } while (u.norm() == 0.0);
    u.normalize();
    vals[s] = chain_value(mu.project(u), mu.weights(), nu.project(u), nu.weights());
  });
  if (reduction == SliceReduction::Max) {
    rep.value = *std::max_element(vals.begin(), vals.end());
    return rep;
  }
  rep.value = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(n_slices);
  rep.ci_half_width = half_width(vals) / std::sqrt(static_cast<double>(n_slices));
  return rep;
}

double kantorovich_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw DomainError("kantorovich_1d: measures must be one-dimensional");
  const std::vector<double> xa = column(mu), xb = column(nu);
  return kantorovich_line(pool_1d(xa, as_span(mu.weights()), xb, as_span(nu.weights())));
}

DistanceReport bl_distance_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const DistanceOptions& opt) {
  if (mu.dim() == 1 || mu.size() + nu.size() <= opt.support_cap) return bl_distance_exact(mu, nu, opt.support_cap);
  return bl_distance_sliced(mu, nu, opt.n_slices, opt.seed, opt.parallelism, opt.reduction);
}

std::vector<CurveRow> convergence_curve(const std::vector<std::pair<double, EmpiricalMeasure>>& family,
                                        const EmpiricalMeasure& reference, const DistanceOptions& opt) {
  std::vector<CurveRow> rows;
  for (std::size_t f = 0; f < family.size(); ++f) {
    const auto& [eps, law] = family[f];
    if (law.dim() != reference.dim()) throw DomainError("convergence_curve: dimension mismatch");
    CurveRow row{eps, bl_distance_auto(law, reference, opt)};
    if (opt.bootstrap > 1) {
      std::vector<double> reps(opt.bootstrap);
      DistanceOptions inner = opt;
      inner.parallelism = 1;
      parallel_for(opt.bootstrap, opt.parallelism, [&](std::size_t b) {
        CounterRng rng(opt.seed ^ 0xb0075742a9ull, f * 1000003ull + b);
        const EmpiricalMeasure a = law.resample(bootstrap_rows(law.weights(), rng));
        const EmpiricalMeasure r = reference.resample(bootstrap_rows(reference.weights(), rng));
        reps[b] = bl_distance_auto(a, r, inner).value;
      });
      row.report.ci_half_width = half_width(reps);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<UniformRow> uniform_in_time_sup(const std::vector<TimedLaws>& laws, const TimedLaws& reference,
                                            const DistanceOptions& opt) {
  const std::size_t nt = reference.times.size();
  if (reference.laws.size() != nt) throw DomainError("uniform_in_time_sup: reference grid/law count mismatch");
  std::vector<UniformRow> rows;
  for (std::size_t f = 0; f < laws.size(); ++f) {
    const TimedLaws& L = laws[f];
    if (L.times.size() != nt || L.laws.size() != nt) throw DomainError("uniform_in_time_sup: time grid mismatch");
    for (std::size_t t = 0; t < nt; ++t)
      if (std::abs(L.times[t] - reference.times[t]) > 1e-9 * std::max(1.0, std::abs(reference.times[t])))
        throw DomainError("uniform_in_time_sup: time grid mismatch");
    UniformRow row;
    row.eps = L.eps;
    row.per_time.resize(nt);
    std::vector<DistanceReport> reps(nt);
    DistanceOptions inner = opt;
    inner.parallelism = 1;
    parallel_for(nt, opt.parallelism, [&](std::size_t t) { reps[t] = bl_distance_auto(L.laws[t], reference.laws[t], inner); });
    for (std::size_t t = 0; t < nt; ++t) {
      row.per_time[t] = reps[t].value;
      if (reps[t].value > row.sup_distance || t == 0) {
        row.sup_distance = reps[t].value;
        row.argmax = t;
      }
    }
    row.method = reps[row.argmax].method;
    row.bound_kind = reps[row.argmax].bound_kind;
    if (opt.bootstrap > 1) {
      std::vector<double> sups(opt.bootstrap);
      parallel_for(opt.bootstrap, opt.parallelism, [&](std::size_t b) {
        CounterRng rng(opt.seed ^ 0x5b9a11ull, f * 1000003ull + b);
        const auto ra = bootstrap_rows(L.laws[0].weights(), rng);
        const auto rr = bootstrap_rows(reference.laws[0].weights(), rng);
        double sup = 0.0;
        for (std::size_t t = 0; t < nt; ++t)
          sup = std::max(sup, bl_distance_auto(L.laws[t].resample(ra), reference.laws[t].resample(rr), inner).value);
        sups[b] = sup;
      });
      row.ci_half_width = half_width(sups);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

EmpiricalMeasure read_measure_csv(std::istream& is, bool weight_column) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        r.push_back(std::stod(cell, &pos));
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) numeric = false;
      } catch (...) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw DomainError("read_measure_csv: non-numeric value on line " + std::to_string(lineno));
    }
    if (!rows.empty() && r.size() != rows.front().size())
      throw DomainError("read_measure_csv: ragged row on line " + std::to_string(lineno));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DomainError("read_measure_csv: no samples");
  const std::size_t cols = rows.front().size();
  const std::size_t k = weight_column ? cols - 1 : cols;
  if (k < 1) throw DomainError("read_measure_csv: no coordinate columns");
  Mat s(rows.size(), k);
  Vec w(weight_column ? rows.size() : 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) s(i, j) = rows[i][j];
    if (weight_column) w[i] = rows[i][k];
  }
  return EmpiricalMeasure(std::move(s), std::move(w));
}

}  // namespace slowfast
