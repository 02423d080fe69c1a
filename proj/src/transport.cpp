#include "slowfast/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory_resource>
#include <numeric>

namespace slowfast {

PooledLine pool_1d(ConstSpan xa, ConstSpan wa, ConstSpan xb, ConstSpan wb) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(xa.size() + xb.size());
  for (std::size_t i = 0; i < xa.size(); ++i) pts.emplace_back(xa[i], wa[i]);
  for (std::size_t i = 0; i < xb.size(); ++i) pts.emplace_back(xb[i], -wb[i]);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  PooledLine line;
  for (const auto& [x, w] : pts) {
    if (!line.x.empty() && line.x.back() == x) {
      line.w.back() += w;
    } else {
      line.x.push_back(x);
      line.w.push_back(w);
    }
  }
  return line;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Convex piecewise-linear function
//   minval + sum_{p in L} wt (p - U)_+ + sum_{p in R} wt (U - p)_+,  max L <= min R.
class SlopeTrick {
 public:
  explicit SlopeTrick(std::pmr::memory_resource* mr) : L_(mr), R_(mr) {}

  void add_abs(double q, double t) {
    if (!(t > 0.0)) return;
    if (q < max_l()) {
      add_l(q, 2.0 * t);
      double rem = t;
      while (rem > 0.0 && !L_.empty()) {
        auto it = std::prev(L_.end());
        const double p = it->first;
        double d;
        if (it->second <= rem) {
          d = it->second;
          L_.erase(it);
        } else {
          d = rem;
          it->second -= rem;
        }
        sum_l_ -= d;
        minval_ += d * (p - q);
        add_r(p, d);
        rem -= d;
      }
    } else if (q > min_r()) {
      add_r(q, 2.0 * t);
      double rem = t;
      while (rem > 0.0 && !R_.empty()) {
        auto it = R_.begin();
        const double p = it->first;
        double d;
        if (it->second <= rem) {
          d = it->second;
          R_.erase(it);
        } else {
          d = rem;
          it->second -= rem;
        }
        sum_r_ -= d;
        minval_ += d * (q - p);
        add_l(p, d);
        rem -= d;
      }
    } else {
      add_l(q, t);
      add_r(q, t);
    }
  }

  // Infimal convolution with c|.|: clips slopes to [-c, c]. Returns the
  // interval [l, r] such that the inner minimizer is clamp(U, l, r).
  std::pair<double, double> clip(double c) {
    double l = -kInf, r = kInf;
    while (!L_.empty() && sum_l_ > c) {
      auto it = L_.begin();
      const double excess = sum_l_ - c;
      l = it->first;
      if (it->second <= excess) {
        sum_l_ -= it->second;
        L_.erase(it);
      } else {
        it->second -= excess;
        sum_l_ = c;
      }
    }
    if (L_.empty()) sum_l_ = 0.0;
    while (!R_.empty() && sum_r_ > c) {
      auto it = std::prev(R_.end());
      const double excess = sum_r_ - c;
      r = it->first;
      if (it->second <= excess) {
        sum_r_ -= it->second;
        R_.erase(it);
      } else {
        it->second -= excess;
        sum_r_ = c;
      }
    }
    if (R_.empty()) sum_r_ = 0.0;
    return {l, r};
  }

  double at(double u) const {
    double v = minval_;
    for (const auto& [p, wt] : L_)
      if (p > u) v += wt * (p - u);
    for (const auto& [p, wt] : R_)
      if (p < u) v += wt * (u - p);
    return v;
  }

  void add_l(double q, double t) {
    L_[q] += t;
    sum_l_ += t;
  }
  void add_r(double q, double t) {
    R_[q] += t;
    sum_r_ += t;
  }

 private:
  double max_l() const { return L_.empty() ? -kInf : std::prev(L_.end())->first; }
  double min_r() const { return R_.empty() ? kInf : R_.begin()->first; }

  std::pmr::map<double, double> L_, R_;
  double sum_l_ = 0.0, sum_r_ = 0.0, minval_ = 0.0;
};

}  // namespace

ChainEval chain_dual_eval(const PooledLine& line, double alpha) {
  const std::size_t m = line.x.size();
  ChainEval out;
  if (m <= 1) return out;
  const double c = 1.0 - alpha;
  std::vector<double> W(m);
  std::partial_sum(line.w.begin(), line.w.end(), W.begin());

  std::pmr::unsynchronized_pool_resource pool;
  SlopeTrick f(&pool);
  if (c > 0.0) {
    f.add_l(0.0, c);
    f.add_r(0.0, c);
  }
  // lo[a], hi[a]: clamp interval for U_{a-1} given U_a (a = 1..m-1, 0-based U index).
  std::vector<double> lo(m, 0.0), hi(m, 0.0);
  for (std::size_t a = 0; a + 1 < m; ++a) {
    f.add_abs(W[a], alpha * (line.x[a + 1] - line.x[a]));
    const auto [l, r] = f.clip(c);
    lo[a + 1] = l;
    hi[a + 1] = r;
  }
  out.value = f.at(0.0);

  // Backtrack the minimizer: U_{m-1} = 0 (index m-1 is the last point, where
  // the cumulative weight returns to zero), U_{-1} = 0.
  std::vector<double> U(m, 0.0);
  for (std::size_t a = m - 1; a >= 1; --a) U[a - 1] = std::clamp(U[a], lo[a], hi[a]);
  double prev = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    if (a + 1 < m) out.transport += (line.x[a + 1] - line.x[a]) * std::abs(W[a] - U[a]);
    out.disposal += std::abs(U[a] - prev);
    prev = U[a];
  }
  return out;
}

ChainMax chain_bl_max(const PooledLine& line) {
  ChainMax best;
  if (line.x.size() <= 1) return best;
  struct Cut {
    double a, b;  // value(alpha) = alpha * a + (1 - alpha) * b
    double at(double al) const { return al * a + (1.0 - al) * b; }
  };
  std::vector<Cut> cuts;
  auto eval = [&](double al) {
    const ChainEval e = chain_dual_eval(line, al);
    ++best.evaluations;
    cuts.push_back({e.transport, e.disposal});
    if (e.value > best.value || best.evaluations == 1) {
      best.value = e.value;
      best.alpha = al;
    }
    return e.value;
  };
  eval(0.0);
  eval(1.0);
  for (int it = 0; it < 200; ++it) {
    // Maximize the upper envelope min_i cut_i over [0, 1].
    std::vector<double> cand{0.0, 1.0};
    for (std::size_t i = 0; i < cuts.size(); ++i)
      for (std::size_t j = i + 1; j < cuts.size(); ++j) {
        const double si = cuts[i].a - cuts[i].b, sj = cuts[j].a - cuts[j].b;
        if (si == sj) continue;
        const double al = (cuts[j].b - cuts[i].b) / (si - sj);
        if (al > 0.0 && al < 1.0) cand.push_back(al);
      }
    double ub = -kInf, arg = 0.0;
    for (double al : cand) {
      double u = kInf;
      for (const Cut& c : cuts) u = std::min(u, c.at(al));
      if (u > ub) {
        ub = u;
        arg = al;
      }
    }
    if (ub - best.value <= 1e-14 * std::max(1.0, ub)) break;
    const double g = eval(arg);
    if (ub - g <= 1e-14 * std::max(1.0, ub)) break;
  }
  return best;
}

double kantorovich_line(const PooledLine& line) {
  double W = 0.0, acc = 0.0;
  for (std::size_t a = 0; a + 1 < line.x.size(); ++a) {
    W += line.w[a];
    acc += (line.x[a + 1] - line.x[a]) * std::abs(W);
  }
  return acc;
}

double bl_partial_transport(const Mat& xa, const Vec& wa, const Mat& xb, const Vec& wb) {
  const Eigen::Index k = xa.cols();
  // Cancel mass at identical points.
  std::vector<std::pair<std::vector<double>, double>> pts;
  auto row = [k](const Mat& X, Eigen::Index i) {
    std::vector<double> r(k);
    for (Eigen::Index j = 0; j < k; ++j) r[j] = X(i, j);
    return r;
  };
  for (Eigen::Index i = 0; i < xa.rows(); ++i) pts.emplace_back(row(xa, i), wa[i]);
  for (Eigen::Index i = 0; i < xb.rows(); ++i) pts.emplace_back(row(xb, i), -wb[i]);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<double>> sx, tx;
  std::vector<double> supply, demand;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    double w = 0.0;
    while (j < pts.size() && pts[j].first == pts[i].first) w += pts[j++].second;
    if (w > 0.0) {
      sx.push_back(pts[i].first);
      supply.push_back(w);
    } else if (w < 0.0) {
      tx.push_back(pts[i].first);
      demand.push_back(-w);
    }
    i = j;
  }
  const double P = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double Q = std::accumulate(demand.begin(), demand.end(), 0.0);
  const double mass = std::min(P, Q);
  if (sx.empty() || tx.empty()) return 0.0;

  const std::size_t ns = sx.size(), nt = tx.size();
  std::vector<double> d(ns * nt);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nt; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < k; ++c) s += (sx[i][c] - tx[j][c]) * (sx[i][c] - tx[j][c]);
      d[i * nt + j] = std::sqrt(s);
    }

  // Nodes: 0 = source, 1..ns supplies, ns+1..ns+nt demands, ns+nt+1 = sink.
  const std::size_t V = ns + nt + 2, S = 0, T = V - 1;
  std::vector<double> flow(ns * nt, 0.0), out_s(ns, 0.0), in_t(nt, 0.0), pot(V, 0.0);
  const double tiny = 1e-15;
  double moved = 0.0, cost = 0.0;
  auto cap_of = [&](std::size_t u, std::size_t v, double& c) -> double {
    // Residual capacity and cost of edge u -> v (0 if absent).
    if (u == S && v >= 1 && v <= ns) {
      c = 0.0;
      return supply[v - 1] - out_s[v - 1];
    }
    if (v == S && u >= 1 && u <= ns) {
      c = 0.0;
      return out_s[u - 1];
    }
    if (u >= 1 && u <= ns && v > ns && v < T) {
      c = d[(u - 1) * nt + (v - ns - 1)];
      return kInf;
    }
    if (v >= 1 && v <= ns && u > ns && u < T) {
      c = -d[(v - 1) * nt + (u - ns - 1)];
      return flow[(v - 1) * nt + (u - ns - 1)];
    }
    if (v == T && u > ns && u < T) {
      c = 0.0;
      return demand[u - ns - 1] - in_t[u - ns - 1];
    }
    if (u == T && v > ns && v < T) {
      c = 0.0;
      return in_t[v - ns - 1];
    }
    c = 0.0;
    return 0.0;
  };

  std::vector<double> dist(V);
  std::vector<std::size_t> parent(V);
  std::vector<char> done(V);
  while (moved < mass - tiny) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    dist[S] = 0.0;
    for (;;) {
      std::size_t u = V;
      double best = kInf;
      for (std::size_t x = 0; x < V; ++x)
        if (!done[x] && dist[x] < best) {
          best = dist[x];
          u = x;
        }
      if (u == V) break;
      done[u] = 1;
      for (std::size_t v = 0; v < V; ++v) {
        if (done[v] || v == u) continue;
        double c;
        if (cap_of(u, v, c) <= tiny) continue;
        const double nd = dist[u] + c + pot[u] - pot[v];
        if (nd < dist[v]) {
          dist[v] = nd;
          parent[v] = u;
        }
      }
    }
    if (!std::isfinite(dist[T])) break;
    for (std::size_t x = 0; x < V; ++x) pot[x] += std::isfinite(dist[x]) ? dist[x] : dist[T];
    const double path_cost = pot[T] - pot[S];
    double aug = mass - moved;
    for (std::size_t v = T; v != S; v = parent[v]) {
      double c;
      aug = std::min(aug, cap_of(parent[v], v, c));
    }
    // C(m) is linear with slope path_cost on this segment; stop at its
    // crossing with 2(mass - m).
    const double u_star = (2.0 * (mass - moved) - cost) / (path_cost + 2.0);
    if (u_star <= aug) return std::min(2.0, cost + path_cost * std::max(0.0, u_star));
    for (std::size_t v = T; v != S; v = parent[v]) {
      const std::size_t u = parent[v];
      if (u == S) out_s[v - 1] += aug;
      else if (v == T) in_t[u - ns - 1] += aug;
      else if (u >= 1 && u <= ns) flow[(u - 1) * nt + (v - ns - 1)] += aug;
      else flow[(v - 1) * nt + (u - ns - 1)] -= aug;
    }
    moved += aug;
    cost += path_cost * aug;
  }
  return std::min(2.0, cost);
}

}  // namespace slowfast
