#pragma once

// Information phase space. Each step of an autoregressive run is summarized
// by its next-outcome entropy u_t and the entropy drop e_t = u_{t-1} - u_t.
// Collections of such portraits give an empirical vector field on a (u, e)
// grid, which can be checked for being divergence-free and fitted by an
// information Hamiltonian H_IF with u' = dH/de, e' = -dH/du.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/text_io.hpp"

namespace phtx::info {

struct PhaseSample {
  double u = 0.0;
  double e = 0.0;
};

struct PhasePortrait {
  std::vector<PhaseSample> points;
};

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double entropy(const std::vector<double>& dist) {
  if (dist.empty()) throw InvalidArgument("empty distribution");
  double sum = 0.0, h = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw InvalidArgument("distribution has a negative entry");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("distribution does not sum to 1");
  return h;
}

/// Centered moving average with windows truncated at the ends.
inline std::vector<double> centered_moving_average(const std::vector<double>& x, std::size_t window) {
  if (window == 0) throw InvalidArgument("smoothing window must be >= 1");
  if (window == 1) return x;
  const std::size_t left = window / 2, right = window - 1 - left;
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t lo = t >= left ? t - left : 0;
    const std::size_t hi = std::min(x.size() - 1, t + right);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += x[k];
    out[t] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Portrait from an entropy series. e_0 = 0; e_1..e_T are smoothed.
inline PhasePortrait portrait_from_entropies(const std::vector<double>& u, std::size_t smoothing_window = 1) {
  if (u.size() < 2) throw InvalidArgument("portrait needs at least two steps");
  std::vector<double> drops(u.size() - 1);
  for (std::size_t t = 1; t < u.size(); ++t) drops[t - 1] = u[t - 1] - u[t];
  drops = centered_moving_average(drops, smoothing_window);
  PhasePortrait out;
  out.points.reserve(u.size());
  out.points.push_back({u[0], 0.0});
  for (std::size_t t = 1; t < u.size(); ++t) out.points.push_back({u[t], drops[t - 1]});
  return out;
}

inline PhasePortrait portrait(const std::vector<std::vector<double>>& dists, std::size_t smoothing_window = 1) {
  if (dists.size() < 2) throw InvalidArgument("portrait needs at least two distributions");
  std::vector<double> u;
  u.reserve(dists.size());
  for (const auto& d : dists) u.push_back(entropy(d));
  return portrait_from_entropies(u, smoothing_window);
}

/// Cell-averaged per-step displacement on a regular (u, e) grid. Cell (i, j)
/// covers [u_edges[i], u_edges[i+1]) x [e_edges[j], e_edges[j+1]).
struct GridField {
  std::vector<double> u_edges, e_edges;
  Mat vu, ve;
  Eigen::MatrixXi counts;

  std::size_t bins_u() const { return u_edges.size() - 1; }
  std::size_t bins_e() const { return e_edges.size() - 1; }
  double u_center(std::size_t i) const { return 0.5 * (u_edges[i] + u_edges[i + 1]); }
  double e_center(std::size_t j) const { return 0.5 * (e_edges[j] + e_edges[j + 1]); }
  bool occupied(std::size_t i, std::size_t j) const { return counts(i, j) > 0; }
};

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  return edges;
}

namespace detail {
inline std::size_t bin_of(const std::vector<double>& edges, double x) {
  if (x < edges.front() || x > edges.back()) return static_cast<std::size_t>(-1);
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  std::size_t k = static_cast<std::size_t>(it - edges.begin());
  k = k == 0 ? 0 : k - 1;
  return std::min(k, edges.size() - 2);
}
}  // namespace detail

/// Bins each step's displacement by its start point on the given edges.
/// Starts outside the grid are dropped.
inline GridField empirical_field(const std::vector<PhasePortrait>& portraits, std::vector<double> u_edges,
                                 std::vector<double> e_edges) {
  if (u_edges.size() < 2 || e_edges.size() < 2) throw InvalidArgument("grid needs at least one bin per axis");
  if (!std::is_sorted(u_edges.begin(), u_edges.end()) || !std::is_sorted(e_edges.begin(), e_edges.end()))
    throw InvalidArgument("bin edges must be monotone");
  GridField f;
  f.u_edges = std::move(u_edges);
  f.e_edges = std::move(e_edges);
  const auto nu = f.bins_u(), ne = f.bins_e();
  f.vu = Mat::Zero(nu, ne);
  f.ve = Mat::Zero(nu, ne);
  f.counts = Eigen::MatrixXi::Zero(nu, ne);
  bool any = false;
  for (const auto& p : portraits) {
    if (p.points.size() < 2) continue;
    any = true;
    for (std::size_t t = 0; t + 1 < p.points.size(); ++t) {
      const auto& a = p.points[t];
      const auto& b = p.points[t + 1];
      const auto i = detail::bin_of(f.u_edges, a.u), j = detail::bin_of(f.e_edges, a.e);
      if (i == static_cast<std::size_t>(-1) || j == static_cast<std::size_t>(-1)) continue;
      f.vu(i, j) += b.u - a.u;
      f.ve(i, j) += b.e - a.e;
      f.counts(i, j) += 1;
    }
  }
  if (!any) throw InvalidArgument("need at least one portrait with two or more points");
  if (f.counts.sum() == 0) throw InvalidArgument("no samples fell inside the grid");
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < ne; ++j)
      if (f.counts(i, j) > 0) {
        f.vu(i, j) /= f.counts(i, j);
        f.ve(i, j) /= f.counts(i, j);
      }
  return f;
}

/// Same, with uniform bins spanning the range of all start points.
inline GridField empirical_field(const std::vector<PhasePortrait>& portraits, std::size_t bins_u,
                                 std::size_t bins_e) {
  if (bins_u == 0 || bins_e == 0) throw InvalidArgument("bin counts must be >= 1");
  double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo, elo = ulo, ehi = -ulo;
  for (const auto& p : portraits)
    for (std::size_t t = 0; t + 1 < p.points.size(); ++t) {
      ulo = std::min(ulo, p.points[t].u);
      uhi = std::max(uhi, p.points[t].u);
      elo = std::min(elo, p.points[t].e);
      ehi = std::max(ehi, p.points[t].e);
    }
  if (!std::isfinite(ulo)) throw InvalidArgument("need at least one portrait with two or more points");
  return empirical_field(portraits, uniform_edges(ulo, uhi, bins_u), uniform_edges(elo, ehi, bins_e));
}

/// Mean |div V| over interior occupied cells (all four neighbours occupied),
/// divided by the mean field magnitude over occupied cells.
inline double divergence_score(const GridField& f) {
  const auto nu = f.bins_u(), ne = f.bins_e();
  if (nu < 3 || ne < 3) throw InvalidArgument("divergence needs at least a 3x3 grid");
  double mag = 0.0;
  std::size_t occ = 0;
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < ne; ++j)
      if (f.occupied(i, j)) {
        mag += std::hypot(f.vu(i, j), f.ve(i, j));
        ++occ;
      }
  mag /= static_cast<double>(occ);
  if (mag < 1e-12) throw DegenerateError("field magnitude is zero");
  double div = 0.0;
  std::size_t interior = 0;
  for (std::size_t i = 1; i + 1 < nu; ++i)
    for (std::size_t j = 1; j + 1 < ne; ++j) {
      if (!(f.occupied(i, j) && f.occupied(i - 1, j) && f.occupied(i + 1, j) && f.occupied(i, j - 1) &&
            f.occupied(i, j + 1)))
        continue;
      const double du = f.u_center(i + 1) - f.u_center(i - 1);
      const double de = f.e_center(j + 1) - f.e_center(j - 1);
      div += std::abs((f.vu(i + 1, j) - f.vu(i - 1, j)) / du + (f.ve(i, j + 1) - f.ve(i, j - 1)) / de);
      ++interior;
    }
  if (interior == 0) throw InvalidArgument("no interior occupied cells to take divergence on");
  return (div / static_cast<double>(interior)) / (mag + 1e-12);
}

struct InfoHamiltonianFit {
  Mat h;                    // NaN on empty cells
  double residual = 0.0;    // ||A h - b||
  double relative = 0.0;    // residual / ||b||
};

/// Least-squares H_IF on occupied cells. Each pair of adjacent occupied cells
/// contributes one difference equation matched to the averaged field:
///   (H[i+1,j] - H[i,j]) / du = -(Ve[i,j] + Ve[i+1,j]) / 2
///   (H[i,j+1] - H[i,j]) / de =  (Vu[i,j] + Vu[i,j+1]) / 2
/// H is pinned to 0 at the first occupied cell (row-major).
inline InfoHamiltonianFit fit_info_hamiltonian(const GridField& f) {
  const auto nu = f.bins_u(), ne = f.bins_e();
  std::vector<long> index(nu * ne, -1);
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < nu; ++i)
    for (std::size_t j = 0; j < ne; ++j)
      if (f.occupied(i, j)) {
        index[i * ne + j] = static_cast<long>(cells.size());
        cells.emplace_back(i, j);
      }
  if (cells.empty()) throw FitError("field has no occupied cells");

  // Connectivity: more than one component leaves an unfixed constant.
  std::vector<char> seen(cells.size(), 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!q.empty()) {
    const auto [i, j] = cells[q.front()];
    q.pop();
    const long di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const long ni = static_cast<long>(i) + di[k], nj = static_cast<long>(j) + dj[k];
      if (ni < 0 || nj < 0 || ni >= static_cast<long>(nu) || nj >= static_cast<long>(ne)) continue;
      const long c = index[ni * ne + nj];
      if (c >= 0 && !seen[c]) {
        seen[c] = 1;
        ++reached;
        q.push(static_cast<std::size_t>(c));
      }
    }
  }
  if (reached != cells.size()) throw FitError("occupied region is not connected");

  InfoHamiltonianFit out;
  out.h = Mat::Constant(nu, ne, std::numeric_limits<double>::quiet_NaN());
  const std::size_t unknowns = cells.size() - 1;  // cell 0 pinned
  if (unknowns == 0) {
    out.h(cells[0].first, cells[0].second) = 0.0;
    return out;
  }

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  auto add_eq = [&](long a, long b, double scale, double target) {
    const auto row = static_cast<int>(rhs.size());
    if (b > 0) trips.emplace_back(row, static_cast<int>(b - 1), scale);
    if (a > 0) trips.emplace_back(row, static_cast<int>(a - 1), -scale);
    rhs.push_back(target);
  };
  for (const auto& [i, j] : cells) {
    const long a = index[i * ne + j];
    if (i + 1 < nu && index[(i + 1) * ne + j] >= 0) {
      const double du = f.u_center(i + 1) - f.u_center(i);
      add_eq(a, index[(i + 1) * ne + j], 1.0 / du, -0.5 * (f.ve(i, j) + f.ve(i + 1, j)));
    }
    if (j + 1 < ne && index[i * ne + j + 1] >= 0) {
      const double de = f.e_center(j + 1) - f.e_center(j);
      add_eq(a, index[i * ne + j + 1], 1.0 / de, 0.5 * (f.vu(i, j) + f.vu(i, j + 1)));
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<int>(rhs.size()), static_cast<int>(unknowns));
  A.setFromTriplets(trips.begin(), trips.end());
  const Vec b = Eigen::Map<const Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  const Eigen::SparseMatrix<double> AtA = A.transpose() * A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(AtA);
  if (solver.info() != Eigen::Success) throw FitError("information Hamiltonian system is rank deficient");
  const Vec x = solver.solve(A.transpose() * b);
  if (solver.info() != Eigen::Success || !x.allFinite())
    throw FitError("information Hamiltonian solve failed");

  out.h(cells[0].first, cells[0].second) = 0.0;
  for (std::size_t c = 1; c < cells.size(); ++c) out.h(cells[c].first, cells[c].second) = x[c - 1];
  out.residual = (A * x - b).norm();
  const double bn = b.norm();
  out.relative = bn > 0.0 ? out.residual / bn : 0.0;
  return out;
}

/// Deterministic uniform in [0, 1) from a 64-bit engine.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Two-point portraits sampled from a known field: uniform starts on the box
/// [ulo,uhi] x [elo,ehi], each followed by one step start + dt*V(start).
inline std::vector<PhasePortrait> sample_field_portraits(
    const std::function<PhaseSample(const PhaseSample&)>& field, std::size_t count, double ulo, double uhi,
    double elo, double ehi, double dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PhasePortrait> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const PhaseSample a{ulo + (uhi - ulo) * uniform01(rng), elo + (ehi - elo) * uniform01(rng)};
    const PhaseSample v = field(a);
    out.push_back({{a, {a.u + dt * v.u, a.e + dt * v.e}}});
  }
  return out;
}

/// Rotation about (u_center, 0): u' = e, e' = -(u - u_center).
inline PhaseSample rotation_field(const PhaseSample& x, double u_center) {
  return {x.e, -(x.u - u_center)};
}

/// CSV with columns portrait,t,u,e.
inline void write_portraits_csv(std::ostream& out, const std::vector<PhasePortrait>& portraits) {
  out << "portrait,t,u,e\n";
  for (std::size_t k = 0; k < portraits.size(); ++k)
    for (std::size_t t = 0; t < portraits[k].points.size(); ++t)
      out << k << ',' << t << ',' << format_real(portraits[k].points[t].u) << ','
          << format_real(portraits[k].points[t].e) << '\n';
}

/// CSV with columns u_center,e_center,Vu,Ve,count.
inline void write_field_csv(std::ostream& out, const GridField& f) {
  out << "u_center,e_center,Vu,Ve,count\n";
  for (std::size_t i = 0; i < f.bins_u(); ++i)
    for (std::size_t j = 0; j < f.bins_e(); ++j)
      out << format_real(f.u_center(i)) << ',' << format_real(f.e_center(j)) << ',' << format_real(f.vu(i, j))
          << ',' << format_real(f.ve(i, j)) << ',' << f.counts(i, j) << '\n';
}

/// One distribution per line, whitespace-separated probabilities.
inline std::vector<std::vector<double>> read_distributions(std::istream& in) {
  std::vector<std::vector<double>> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = strip_comment(raw);
    if (line.empty()) continue;
    std::vector<double> d;
    for (const auto& tok : split_ws(line)) d.push_back(parse_real(tok, lineno));
    try {
      entropy(d);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace phtx::info
