#pragma once

// Three toy runs on a 1-D latent line and the harmonic oscillator:
//   1. planning from y = 2 toward 0 under V(y) = y^2/2 (linear, halving, and
//      shortest path on the sampled state graph),
//   2. coarse halving steps vs finer 0.6-ratio internal ticks,
//   3. leapfrog vs forward Euler vs a damped leapfrog-style scheme.
// Entropies come from a small logit "decoder" over K outcomes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/info_phase.hpp"
#include "phtx/manifold.hpp"
#include "phtx/planner.hpp"
#include "phtx/text_io.hpp"

namespace phtx::experiments {

/// Maps a latent scalar to K logits.
struct ToyDecoder {
  std::string name;
  std::size_t outcomes = 0;
  std::function<Vec(double)> logits;

  std::vector<double> distribution(double y) const {
    const Vec z = logits(y);
    if (static_cast<std::size_t>(z.size()) != outcomes || !z.allFinite())
      throw InvalidArgument("decoder produced invalid logits");
    const double top = z.maxCoeff();
    std::vector<double> p(outcomes);
    double s = 0.0;
    for (std::size_t k = 0; k < outcomes; ++k) s += (p[k] = std::exp(z[k] - top));
    for (double& x : p) x /= s;
    return p;
  }

  double entropy(double y) const { return info::entropy(distribution(y)); }
};

/// Logits (s, 0, -s) with s = a / (1 + y^2): sharpest at the origin, entropy
/// strictly increasing in |y|.
inline ToyDecoder peaked_decoder(double a = 1.0) {
  return {"peaked", 3, [a](double y) {
            const double s = a / (1.0 + y * y);
            return Vec((Vec(3) << s, 0.0, -s).finished());
          }};
}

/// Logits (a y, 0, -a y): uniform at the origin, entropy decreasing in |y|.
inline ToyDecoder tilt_decoder(double a = 1.0) {
  return {"tilt", 3, [a](double y) { return Vec((Vec(3) << a * y, 0.0, -a * y).finished()); }};
}

inline ToyDecoder decoder_by_name(const std::string& name) {
  if (name == "peaked") return peaked_decoder();
  if (name == "tilt") return tilt_decoder();
  throw InvalidArgument("unknown decoder '" + name + "' (expected peaked or tilt)");
}

inline double quadratic_value(double y) { return 0.5 * y * y; }

struct PathMetrics {
  std::vector<double> path;
  double u_0 = 0.0;
  double u_T = 0.0;
  double delta_u = 0.0;
  double cost_J = 0.0;
  double efficiency = 0.0;
};

/// Trapezoid sum of V over consecutive nodes.
inline double trapezoid_path_cost(const std::vector<double>& path, const std::function<double(double)>& V) {
  double J = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) J += 0.5 * (V(path[k]) + V(path[k + 1]));
  return J;
}

inline PathMetrics path_metrics(const std::vector<double>& path, const ToyDecoder& decoder,
                                const std::function<double(double)>& V) {
  if (path.size() < 2) throw InvalidArgument("path needs at least two nodes");
  PathMetrics m;
  m.path = path;
  m.u_0 = decoder.entropy(path.front());
  m.u_T = decoder.entropy(path.back());
  m.delta_u = m.u_0 - m.u_T;
  m.cost_J = trapezoid_path_cost(path, V);
  if (m.cost_J == 0.0) throw InvalidArgument("path cost is zero; efficiency undefined");
  m.efficiency = m.delta_u / m.cost_J;
  return m;
}

/// y_k = start * ratio^k, k = 0..steps.
inline std::vector<double> geometric_path(double start, double ratio, std::size_t steps) {
  std::vector<double> p{start};
  for (std::size_t k = 0; k < steps; ++k) p.push_back(p.back() * ratio);
  return p;
}

/// y_k = start - k * step, k = 0..steps.
inline std::vector<double> linear_path(double start, double step, std::size_t steps) {
  std::vector<double> p;
  for (std::size_t k = 0; k <= steps; ++k) p.push_back(start - static_cast<double>(k) * step);
  return p;
}

inline const std::vector<double>& toy1_samples() {
  static const std::vector<double> s{2.0, 1.6, 1.2, 0.8, 0.4, 0.0, 1.0, 0.5, 0.25, 0.125, 0.0625};
  return s;
}

/// Fully connected state graph over the toy samples, trapezoid edge costs.
inline planner::WeightedDigraph<Vec> toy1_graph() {
  std::vector<Vec> samples;
  for (double y : toy1_samples()) samples.push_back(Vec::Constant(1, y));
  return planner::build_ndm_graph(samples, planner::WithinRadius{planner::kInf},
                                  planner::trapezoid_cost([](const Vec& y) { return quadratic_value(y[0]); }));
}

/// Shortest path from 2.0 to 0.0 on toy1_graph, as latent values.
inline std::vector<double> toy1_sssp_path() {
  const auto g = toy1_graph();
  const auto& s = toy1_samples();
  const auto src = static_cast<planner::NodeId>(std::find(s.begin(), s.end(), 2.0) - s.begin());
  const auto dst = static_cast<planner::NodeId>(std::find(s.begin(), s.end(), 0.0) - s.begin());
  const auto path = planner::shortest_path(g, src, dst);
  if (!path) throw Error("toy state graph has no path from 2.0 to 0.0");
  std::vector<double> ys;
  for (auto v : path->nodes) ys.push_back(g.payload(v)[0]);
  return ys;
}

struct Toy1Result {
  PathMetrics linear, hjb_like, ndm_sssp;
};

inline Toy1Result toy1_run(const ToyDecoder& decoder) {
  return {path_metrics(linear_path(2.0, 0.4, 5), decoder, quadratic_value),
          path_metrics(geometric_path(2.0, 0.5, 5), decoder, quadratic_value),
          path_metrics(toy1_sssp_path(), decoder, quadratic_value)};
}

struct Toy2Result {
  PathMetrics hjb_only, ctm_style;
};

inline Toy2Result toy2_run(const ToyDecoder& decoder) {
  return {path_metrics(geometric_path(2.0, 0.5, 3), decoder, quadratic_value),
          path_metrics(geometric_path(2.0, 0.6, 6), decoder, quadratic_value)};
}

struct OscillatorReport {
  std::string variant;
  bool symplectic = false;
  bool hamiltonian = false;
  double y = 0.0, p = 0.0;
  double eps_state = 0.0;
  double eps_H_max = 0.0;
};

struct Toy3Config {
  std::size_t steps = 1000;
  double h = 0.1;
  double damping = 0.05;
};

namespace detail {
inline void finish(OscillatorReport& r, double T) {
  r.eps_state = std::hypot(r.y - std::cos(T), r.p + std::sin(T));
}
inline double energy_error(double y, double p) { return std::abs(0.5 * (y * y + p * p) - 0.5); }
}  // namespace detail

/// Leapfrog on H = (y^2 + p^2)/2 from (1, 0).
inline OscillatorReport oscillator_leapfrog(const Toy3Config& c) {
  const auto traj = manifold::integrate(manifold::harmonic_oscillator(),
                                        manifold::PhasePoint{Vec::Constant(1, 1.0), Vec::Zero(1)}, c.h, c.steps);
  OscillatorReport r{"leapfrog-hamiltonian", true, true};
  for (const auto& pt : traj.points) r.eps_H_max = std::max(r.eps_H_max, detail::energy_error(pt.y[0], pt.p[0]));
  r.y = traj.points.back().y[0];
  r.p = traj.points.back().p[0];
  detail::finish(r, c.h * static_cast<double>(c.steps));
  return r;
}

/// Forward Euler: y' = y + h p, p' = p - h y.
inline OscillatorReport oscillator_euler(const Toy3Config& c) {
  OscillatorReport r{"euler-hamiltonian", false, true, 1.0, 0.0};
  for (std::size_t k = 0; k < c.steps; ++k) {
    const double y = r.y + c.h * r.p;
    r.p = r.p - c.h * r.y;
    r.y = y;
    r.eps_H_max = std::max(r.eps_H_max, detail::energy_error(r.y, r.p));
  }
  detail::finish(r, c.h * static_cast<double>(c.steps));
  return r;
}

/// Leapfrog-style staging of p' = -y - lambda p:
///   p_half = p - h/2 (y + lambda p), y' = y + h p_half,
///   p' = p_half - h/2 (y' + lambda p_half).
inline OscillatorReport oscillator_damped(const Toy3Config& c) {
  OscillatorReport r{"leapfrog-damped", true, false, 1.0, 0.0};
  const double lam = c.damping;
  for (std::size_t k = 0; k < c.steps; ++k) {
    const double ph = r.p - 0.5 * c.h * (r.y + lam * r.p);
    r.y = r.y + c.h * ph;
    r.p = ph - 0.5 * c.h * (r.y + lam * ph);
    r.eps_H_max = std::max(r.eps_H_max, detail::energy_error(r.y, r.p));
  }
  detail::finish(r, c.h * static_cast<double>(c.steps));
  return r;
}

struct Toy3Result {
  OscillatorReport full, euler, damped;
};

inline Toy3Result toy3_run(const Toy3Config& c = {}) {
  if (!(c.h > 0.0)) throw InvalidArgument("step size must be positive");
  if (c.steps == 0) throw InvalidArgument("step count must be >= 1");
  if (!(c.damping >= 0.0)) throw InvalidArgument("damping must be >= 0");
  return {oscillator_leapfrog(c), oscillator_euler(c), oscillator_damped(c)};
}

// Reference numbers printed next to computed ones.
struct PathReference {
  double final_y, u_T, delta_u, cost_J, efficiency;
};
inline constexpr PathReference kRefLinear{0.0, 0.9060, 0.1684, 3.4000, 0.0495};
inline constexpr PathReference kRefHjbLike{0.0625, 0.9146, 0.1598, 1.6650, 0.0960};
inline constexpr PathReference kRefSssp{0.0, 0.9060, 0.1684, 1.0000, 0.1684};
inline constexpr PathReference kRefHjbOnly{0.25, 0.9393, 0.1351, 1.6406, 0.0823};
inline constexpr PathReference kRefCtm{0.0933, 0.9187, 0.1556, 2.1204, 0.0734};

struct OscillatorReference {
  double y, p, eps_state, eps_H_max;
};
inline constexpr OscillatorReference kRefFull{0.883, 0.469, 0.042, 1.25e-2};
inline constexpr OscillatorReference kRefEuler{94.2, 110.0, 1.44e2, 1.05e-1};
inline constexpr OscillatorReference kRefDamped{0.0725, 0.0362, 0.919, 4.97e-1};

/// Rows of strings with CSV and aligned-markdown renderings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c) out << ',';
        const bool quote = cells[c].find_first_of(",\"") != std::string::npos;
        if (!quote) {
          out << cells[c];
          continue;
        }
        out << '"';
        for (char ch : cells[c]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
        out << '"';
      }
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
  }

  std::string markdown() const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = std::max<std::size_t>(3, header[c].size());
    for (const auto& r : rows)
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      out << '|';
      for (std::size_t c = 0; c < cells.size(); ++c)
        out << ' ' << cells[c] << std::string(width[c] - cells[c].size(), ' ') << " |";
      out << '\n';
    };
    line(header);
    out << '|';
    for (auto w : width) out << std::string(w + 2, '-') << '|';
    out << '\n';
    for (const auto& r : rows) line(r);
    return out.str();
  }
};

inline std::string fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

inline std::string path_string(const std::vector<double>& path) {
  std::string s;
  for (std::size_t k = 0; k < path.size(); ++k) s += (k ? " -> " : "") + format_real(path[k]);
  return s;
}

inline Table table1(const ToyDecoder& decoder) {
  const auto r = toy1_run(decoder);
  Table t{{"method", "path", "u_T", "delta_u", "cost_J", "efficiency", "reference_u_T", "reference_delta_u",
           "reference_cost_J", "reference_efficiency"},
          {}};
  auto row = [&](const char* name, const PathMetrics& m, const PathReference& ref) {
    t.rows.push_back({name, path_string(m.path), format_real(m.u_T), format_real(m.delta_u), format_real(m.cost_J),
                      format_real(m.efficiency), fixed4(ref.u_T), fixed4(ref.delta_u), fixed4(ref.cost_J),
                      fixed4(ref.efficiency)});
  };
  row("linear", r.linear, kRefLinear);
  row("hjb-like", r.hjb_like, kRefHjbLike);
  row("ndm-sssp", r.ndm_sssp, kRefSssp);
  return t;
}

inline Table table2(const ToyDecoder& decoder) {
  const auto r = toy2_run(decoder);
  Table t{{"method", "steps", "final_y", "u_T", "delta_u", "cost_J", "efficiency", "reference_final_y",
           "reference_u_T", "reference_delta_u", "reference_cost_J", "reference_efficiency"},
          {}};
  auto row = [&](const char* name, const char* steps, const PathMetrics& m, const PathReference& ref) {
    t.rows.push_back({name, steps, format_real(m.path.back()), format_real(m.u_T), format_real(m.delta_u),
                      format_real(m.cost_J), format_real(m.efficiency), format_real(ref.final_y), fixed4(ref.u_T),
                      fixed4(ref.delta_u), fixed4(ref.cost_J), fixed4(ref.efficiency)});
  };
  row("hjb-only", "3/3", r.hjb_only, kRefHjbOnly);
  row("ctm-style", "3/6", r.ctm_style, kRefCtm);
  return t;
}

inline Table table3(const Toy3Config& c = {}) {
  const auto r = toy3_run(c);
  const bool defaults = c.steps == 1000 && c.h == 0.1 && c.damping == 0.05;
  Table t{{"variant", "symplectic", "hamiltonian", "final_y", "final_p", "eps_state", "eps_H_max",
           "reference_final", "reference_eps_state", "reference_eps_H_max", "note"},
          {}};
  auto row = [&](const OscillatorReport& m, const OscillatorReference& ref, std::string note) {
    t.rows.push_back({m.variant, m.symplectic ? "yes" : "no", m.hamiltonian ? "yes" : "no", format_real(m.y),
                      format_real(m.p), format_real(m.eps_state), format_real(m.eps_H_max),
                      defaults ? "(" + format_real(ref.y) + ", " + format_real(ref.p) + ")" : "",
                      defaults ? format_real(ref.eps_state) : "", defaults ? format_real(ref.eps_H_max) : "",
                      defaults ? std::move(note) : ""});
  };
  row(r.full, kRefFull, "reference eps_H_max is 10x the h^2/8 energy amplitude of this scheme");
  row(r.euler, kRefEuler, "reference eps_H_max is inconsistent with its own final state");
  row(r.damped, kRefDamped, "");
  return t;
}

}  // namespace phtx::experiments
