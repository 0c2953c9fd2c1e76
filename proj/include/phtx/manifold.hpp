#pragma once

// Neural Differential Manifold: a smooth decoder y -> z induces the pullback
// metric G(y) = J(y)^T J(y) on latent space. Geodesics are the flow of the
// Hamiltonian H_geo = 1/2 p^T G(y)^{-1} p, integrated by the staged leapfrog
//
//   p_half = p - h/2 dH/dy(y, p)
//   y'     = y + h dH/dp(y, p_half)
//   p'     = p_half - h/2 dH/dy(y', p_half)
//
// which is explicit, and exactly symplectic only when H is separable.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/text_io.hpp"

namespace phtx::manifold {

inline constexpr double kGradStep = 1e-5;
inline constexpr double kHessStep = 1e-4;

/// Canonical coordinates on T*M.
struct PhasePoint {
  Vec y;
  Vec p;
};

struct PhaseVelocity {
  Vec dy;
  Vec dp;
};

/// Uniform-step time series of phase points; points[k] sits at s = k*step.
struct PhaseTrajectory {
  std::vector<PhasePoint> points;
  double step = 0.0;
};

template <class H>
concept Hamiltonian = requires(const H& h, const Vec& y, const Vec& p) {
  { h.energy(y, p) } -> std::convertible_to<double>;
  { h.grad_y(y, p) } -> std::convertible_to<Vec>;
  { h.grad_p(y, p) } -> std::convertible_to<Vec>;
};

/// Central-difference gradient with step base*(1 + ||x||).
template <class F>
Vec fd_gradient(const F& f, const Vec& x, double base = kGradStep) {
  const double h = base * (1.0 + x.norm());
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

/// Central-difference Jacobian of a vector map.
template <class F>
Mat fd_jacobian(const F& f, const Vec& x, double base = kGradStep) {
  const double h = base * (1.0 + x.norm());
  Vec xp = x, xm = x;
  Mat J;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const Vec col = (f(xp) - f(xm)) / (2.0 * h);
    if (i == 0) J.resize(col.size(), x.size());
    J.col(i) = col;
    xp[i] = xm[i] = x[i];
  }
  return J;
}

/// Hamiltonian given by an energy callable, with optional analytic partials.
/// Missing partials fall back to central differences.
class FunctionHamiltonian {
 public:
  using Energy = std::function<double(const Vec&, const Vec&)>;
  using Partial = std::function<Vec(const Vec&, const Vec&)>;

  explicit FunctionHamiltonian(Energy e, Partial dy = {}, Partial dp = {})
      : energy_(std::move(e)), dy_(std::move(dy)), dp_(std::move(dp)) {}

  double energy(const Vec& y, const Vec& p) const { return energy_(y, p); }
  Vec grad_y(const Vec& y, const Vec& p) const {
    if (dy_) return dy_(y, p);
    return fd_gradient([&](const Vec& yy) { return energy_(yy, p); }, y);
  }
  Vec grad_p(const Vec& y, const Vec& p) const {
    if (dp_) return dp_(y, p);
    return fd_gradient([&](const Vec& pp) { return energy_(y, pp); }, p);
  }

 private:
  Energy energy_;
  Partial dy_, dp_;
};

/// H = 1/2 (|y|^2 + |p|^2) with analytic partials.
inline FunctionHamiltonian harmonic_oscillator() {
  return FunctionHamiltonian([](const Vec& y, const Vec& p) { return 0.5 * (y.squaredNorm() + p.squaredNorm()); },
                             [](const Vec& y, const Vec&) { return Vec(y); },
                             [](const Vec&, const Vec& p) { return Vec(p); });
}

enum class DecoderKind { Linear, MlpTanh, Custom };

struct Layer {
  Mat weight;
  Vec bias;
};

/// Fixed-weight smooth map from R^d to R^n (n >= d >= 1).
class Decoder {
 public:
  using Map = std::function<Vec(const Vec&)>;
  using JacobianMap = std::function<Mat(const Vec&)>;

  /// z = A y + b.
  static Decoder linear(Mat A, Vec b = Vec()) {
    if (b.size() == 0) b = Vec::Zero(A.rows());
    Decoder d(DecoderKind::Linear);
    d.layers_.push_back({std::move(A), std::move(b)});
    d.check_layers();
    return d;
  }

  /// z = tanh(W_L ... tanh(W_1 y + b_1) ... + b_L); tanh follows every layer.
  static Decoder mlp_tanh(std::vector<Layer> layers) {
    Decoder d(DecoderKind::MlpTanh);
    d.layers_ = std::move(layers);
    d.check_layers();
    return d;
  }

  /// Arbitrary smooth map; Jacobian by central differences unless supplied.
  static Decoder custom(Eigen::Index latent, Eigen::Index ambient, Map map, JacobianMap jac = {}) {
    if (!(ambient >= latent && latent >= 1)) throw DimensionError("decoder needs n >= d >= 1");
    Decoder d(DecoderKind::Custom);
    d.latent_ = latent;
    d.ambient_ = ambient;
    d.map_ = std::move(map);
    d.jac_ = std::move(jac);
    return d;
  }

  DecoderKind kind() const { return kind_; }
  Eigen::Index latent_dim() const { return latent_; }
  Eigen::Index ambient_dim() const { return ambient_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Vec operator()(const Vec& y) const {
    check_input(y);
    switch (kind_) {
      case DecoderKind::Linear:
        return layers_[0].weight * y + layers_[0].bias;
      case DecoderKind::MlpTanh: {
        Vec a = y;
        for (const auto& l : layers_) a = (l.weight * a + l.bias).array().tanh().matrix();
        return a;
      }
      case DecoderKind::Custom:
        return map_(y);
    }
    return {};
  }

  /// n x d Jacobian; analytic for linear and mlp-tanh.
  Mat jacobian(const Vec& y) const {
    check_input(y);
    switch (kind_) {
      case DecoderKind::Linear:
        return layers_[0].weight;
      case DecoderKind::MlpTanh: {
        Vec a = y;
        Mat J = Mat::Identity(latent_, latent_);
        for (const auto& l : layers_) {
          a = (l.weight * a + l.bias).array().tanh().matrix();
          const Vec slope = (1.0 - a.array().square()).matrix();
          J = (slope.asDiagonal() * l.weight * J).eval();
        }
        return J;
      }
      case DecoderKind::Custom:
        if (jac_) return jac_(y);
        return fd_jacobian(map_, y);
    }
    return {};
  }

  /// Jacobian by central differences regardless of kind; used as a cross-check.
  Mat fd_jacobian_of_map(const Vec& y) const {
    return fd_jacobian([this](const Vec& v) { return (*this)(v); }, y);
  }

 private:
  explicit Decoder(DecoderKind k) : kind_(k) {}

  void check_layers() {
    if (layers_.empty()) throw DimensionError("decoder needs at least one layer");
    latent_ = layers_.front().weight.cols();
    Eigen::Index width = latent_;
    for (const auto& l : layers_) {
      if (l.weight.cols() != width || l.bias.size() != l.weight.rows())
        throw DimensionError("decoder layer shapes do not chain");
      if (!l.weight.allFinite() || !l.bias.allFinite())
        throw InvalidArgument("decoder weights must be finite");
      width = l.weight.rows();
    }
    ambient_ = width;
    if (!(ambient_ >= latent_ && latent_ >= 1)) throw DimensionError("decoder needs n >= d >= 1");
  }

  void check_input(const Vec& y) const {
    if (y.size() != latent_) throw DimensionError("latent point has wrong dimension");
  }

  DecoderKind kind_;
  Eigen::Index latent_ = 0, ambient_ = 0;
  std::vector<Layer> layers_;
  Map map_;
  JacobianMap jac_;
};

/// Pullback metric of a decoder with diagonal regularization.
class MetricField {
 public:
  explicit MetricField(Decoder dec, double eps_reg = 1e-8) : dec_(std::move(dec)), eps_(eps_reg) {
    if (!(eps_ >= 0.0)) throw InvalidArgument("metric regularization must be >= 0");
  }

  const Decoder& decoder() const { return dec_; }
  double regularization() const { return eps_; }
  bool is_constant() const { return dec_.kind() == DecoderKind::Linear; }

  /// J^T J + eps I, symmetrized; throws SingularMetricError unless SPD.
  Mat metric(const Vec& y) const { return factor(y).first; }

  /// Solves G(y) u = v.
  Vec solve(const Vec& y, const Vec& v) const {
    auto [G, llt] = factor(y);
    if (v.size() != G.rows()) throw DimensionError("covector has wrong dimension");
    return llt.solve(v);
  }

 private:
  std::pair<Mat, Eigen::LLT<Mat>> factor(const Vec& y) const {
    const Mat J = dec_.jacobian(y);
    Mat G = J.transpose() * J;
    G.diagonal().array() += eps_;
    G = (0.5 * (G + G.transpose())).eval();
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success || !G.allFinite())
      throw SingularMetricError("pullback metric is not positive definite");
    // Rounding can leave a tiny positive pivot on an exactly singular G.
    const Vec pivots = llt.matrixL().toDenseMatrix().diagonal();
    const double floor = 100.0 * std::numeric_limits<double>::epsilon() * G.diagonal().maxCoeff();
    if ((pivots.array().square() <= floor).any())
      throw SingularMetricError("pullback metric is numerically singular");
    return {std::move(G), std::move(llt)};
  }

  Decoder dec_;
  double eps_;
};

inline Vec decoder_eval(const Decoder& dec, const Vec& y) { return dec(y); }
inline Mat jacobian(const Decoder& dec, const Vec& y) { return dec.jacobian(y); }
inline Mat pullback_metric(const MetricField& mf, const Vec& y) { return mf.metric(y); }

/// H_geo(y, p) = 1/2 p^T G(y)^{-1} p. The y-partial is a central difference
/// of H, or exactly zero when the metric is constant.
class GeodesicHamiltonian {
 public:
  explicit GeodesicHamiltonian(MetricField mf) : mf_(std::move(mf)) {}

  const MetricField& metric_field() const { return mf_; }

  double energy(const Vec& y, const Vec& p) const { return 0.5 * p.dot(mf_.solve(y, p)); }
  Vec grad_p(const Vec& y, const Vec& p) const { return mf_.solve(y, p); }
  Vec grad_y(const Vec& y, const Vec& p) const {
    if (mf_.is_constant()) return Vec::Zero(y.size());
    return fd_gradient([&](const Vec& yy) { return energy(yy, p); }, y);
  }

 private:
  MetricField mf_;
};

inline double geo_hamiltonian(const MetricField& mf, const PhasePoint& pt) {
  return GeodesicHamiltonian(mf).energy(pt.y, pt.p);
}

/// (dH/dp, -dH/dy).
template <Hamiltonian H>
PhaseVelocity hamiltonian_field(const H& ham, const PhasePoint& pt) {
  return {ham.grad_p(pt.y, pt.p), -ham.grad_y(pt.y, pt.p)};
}

template <Hamiltonian H>
PhasePoint leapfrog_step(const H& ham, const PhasePoint& pt, double h) {
  if (h == 0.0) throw InvalidArgument("leapfrog step must be non-zero");
  const Vec p_half = pt.p - 0.5 * h * ham.grad_y(pt.y, pt.p);
  Vec y = pt.y + h * ham.grad_p(pt.y, p_half);
  Vec p = p_half - 0.5 * h * ham.grad_y(y, p_half);
  return {std::move(y), std::move(p)};
}

/// n leapfrog steps; all n+1 states are recorded.
template <Hamiltonian H>
PhaseTrajectory integrate(const H& ham, const PhasePoint& start, double h, std::size_t n) {
  if (n == 0) throw InvalidArgument("integrate needs at least one step");
  PhaseTrajectory traj{{start}, h};
  traj.points.reserve(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    try {
      traj.points.push_back(leapfrog_step(ham, traj.points.back(), h));
    } catch (const SingularMetricError& e) {
      throw SingularMetricError("step " + std::to_string(k) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("step " + std::to_string(k) + ": " + e.what());
    }
  }
  return traj;
}

/// Endpoint y(1) of the geodesic from (y_a, p_eta) after K leapfrog steps of 1/K.
inline Vec shoot_geodesic(const MetricField& mf, const Vec& y_a, const Vec& p_eta, std::size_t K) {
  if (K == 0) throw InvalidArgument("shooting needs K >= 1");
  const GeodesicHamiltonian ham(mf);
  const double h = 1.0 / static_cast<double>(K);
  PhasePoint pt{y_a, p_eta};
  for (std::size_t k = 0; k < K; ++k) pt = leapfrog_step(ham, pt, h);
  return pt.y;
}

struct ShootingResult {
  Vec p_eta;
  double residual = 0.0;
  int iterations = 0;
};

/// Damped Gauss-Newton on r(p) = shoot(y_a, p) - y_b with a central-difference
/// sensitivity matrix. Starts from p = G(y_a)(y_b - y_a); a rejected step is
/// retried at half length.
inline ShootingResult solve_shooting(const MetricField& mf, const Vec& y_a, const Vec& y_b,
                                     std::size_t K, double tol, int max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (y_a.size() != y_b.size()) throw DimensionError("endpoints differ in dimension");
  auto residual = [&](const Vec& p) -> Vec { return shoot_geodesic(mf, y_a, p, K) - y_b; };

  ShootingResult out;
  out.p_eta = mf.metric(y_a) * (y_b - y_a);
  Vec r = residual(out.p_eta);
  out.residual = r.norm();
  while (out.residual > tol) {
    if (out.iterations >= max_iter)
      throw ConvergenceError("geodesic shooting did not converge, residual " +
                                 format_real(out.residual),
                             out.residual);
    ++out.iterations;
    const Mat S = fd_jacobian(residual, out.p_eta);
    const Vec step = S.colPivHouseholderQr().solve(-r);
    double scale = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 30; ++halvings, scale *= 0.5) {
      const Vec trial = out.p_eta + scale * step;
      const Vec rt = residual(trial);
      if (rt.norm() < out.residual) {
        out.p_eta = trial;
        r = rt;
        out.residual = rt.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw ConvergenceError("geodesic shooting stalled, residual " + format_real(out.residual),
                             out.residual);
  }
  return out;
}

/// DF = Jsymp * Hess(H) with Jsymp = [[0, I], [-I, 0]]. The Hessian is a
/// central difference of the phase-space gradient (dH/dy, dH/dp), symmetrized.
template <Hamiltonian H>
Mat variational_matrix(const H& ham, const PhasePoint& pt) {
  const auto d = pt.y.size();
  auto grad = [&](const Vec& z) {
    const Vec y = z.head(d), p = z.tail(d);
    Vec g(2 * d);
    g << ham.grad_y(y, p), ham.grad_p(y, p);
    return g;
  };
  Vec z(2 * d);
  z << pt.y, pt.p;
  Mat hess = fd_jacobian(grad, z, kHessStep);
  hess = (0.5 * (hess + hess.transpose())).eval();
  Mat df(2 * d, 2 * d);
  df.topRows(d) = hess.bottomRows(d);
  df.bottomRows(d) = -hess.topRows(d);
  return df;
}

/// Integrates d(delta)/ds = DF(z(s)) delta along `traj` with a midpoint RK2
/// whose matrix is frozen at the segment midpoint. One entry per node.
template <Hamiltonian H>
std::vector<Vec> jacobi_propagate(const H& ham, const PhaseTrajectory& traj, const Vec& delta0) {
  if (traj.points.empty()) throw InvalidArgument("trajectory is empty");
  const auto d = traj.points.front().y.size();
  if (delta0.size() != 2 * d) throw DimensionError("deviation must have 2d components");
  const double h = traj.step;
  std::vector<Vec> out{delta0};
  out.reserve(traj.points.size());
  for (std::size_t k = 0; k + 1 < traj.points.size(); ++k) {
    const auto& a = traj.points[k];
    const auto& b = traj.points[k + 1];
    const Mat A = variational_matrix(ham, PhasePoint{0.5 * (a.y + b.y), 0.5 * (a.p + b.p)});
    const Vec& x = out.back();
    out.push_back(x + h * A * (x + 0.5 * h * A * x));
  }
  return out;
}

/// Deviation between the trajectory from `start` and the one from
/// start + eps*delta0, divided by eps, at each of the n+1 nodes.
template <Hamiltonian H>
std::vector<Vec> finite_perturbation_deviation(const H& ham, const PhasePoint& start,
                                               const Vec& delta0, double h, std::size_t n,
                                               double eps = 1e-5) {
  const auto d = start.y.size();
  const PhasePoint moved{start.y + eps * delta0.head(d), start.p + eps * delta0.tail(d)};
  const auto a = integrate(ham, start, h, n);
  const auto b = integrate(ham, moved, h, n);
  std::vector<Vec> out;
  out.reserve(a.points.size());
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    Vec dz(2 * d);
    dz << (b.points[k].y - a.points[k].y) / eps, (b.points[k].p - a.points[k].p) / eps;
    out.push_back(std::move(dz));
  }
  return out;
}

struct GeodesicPair {
  Vec y_a, y_b, p_eta;
};

/// Mean squared shooting error over the pairs.
inline double loss_geo(const MetricField& mf, const std::vector<GeodesicPair>& pairs, std::size_t K) {
  if (pairs.empty()) throw InvalidArgument("loss_geo needs at least one pair");
  double sum = 0.0;
  for (const auto& pr : pairs) sum += (shoot_geodesic(mf, pr.y_a, pr.p_eta, K) - pr.y_b).squaredNorm();
  return sum / static_cast<double>(pairs.size());
}

struct JacobiCase {
  PhaseTrajectory trajectory;
  Vec delta0;
  std::vector<Vec> empirical;
};

/// Mean over cases and nodes of ||delta_emp - delta_model||^2.
template <Hamiltonian H>
double loss_jac(const H& ham, const std::vector<JacobiCase>& cases) {
  if (cases.empty()) throw InvalidArgument("loss_jac needs at least one case");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& c : cases) {
    const auto model = jacobi_propagate(ham, c.trajectory, c.delta0);
    if (model.size() != c.empirical.size())
      throw DimensionError("empirical deviations do not match trajectory length");
    for (std::size_t k = 0; k < model.size(); ++k, ++count)
      sum += (c.empirical[k] - model[k]).squaredNorm();
  }
  return sum / static_cast<double>(count);
}

// Decoder text format:
//
//   kind linear|mlp-tanh
//   layer <out> <in>
//   <out lines, each with <in> weights followed by the bias>
//   layer ...
//
// '#' starts a comment. Linear decoders have exactly one layer.

inline Decoder read_decoder(std::istream& in) {
  std::string raw;
  std::size_t lineno = 0;
  std::optional<DecoderKind> kind;
  std::vector<Layer> layers;
  auto next_line = [&]() -> std::optional<std::vector<std::string>> {
    while (std::getline(in, raw)) {
      ++lineno;
      auto line = strip_comment(raw);
      if (!line.empty()) return split_ws(line);
    }
    return std::nullopt;
  };
  while (auto tok = next_line()) {
    const auto& t = *tok;
    if (t[0] == "kind") {
      if (t.size() != 2) throw ParseError("expected 'kind <linear|mlp-tanh>'", lineno);
      if (t[1] == "linear") kind = DecoderKind::Linear;
      else if (t[1] == "mlp-tanh") kind = DecoderKind::MlpTanh;
      else throw ParseError("unknown decoder kind '" + t[1] + "'", lineno);
    } else if (t[0] == "layer") {
      if (t.size() != 3) throw ParseError("expected 'layer <out> <in>'", lineno);
      const long rows = parse_int(t[1], lineno), cols = parse_int(t[2], lineno);
      if (rows < 1 || cols < 1) throw ParseError("layer dimensions must be positive", lineno);
      Layer l{Mat(rows, cols), Vec(rows)};
      for (long r = 0; r < rows; ++r) {
        auto row = next_line();
        if (!row) throw ParseError("unexpected end of file inside layer", lineno);
        if (static_cast<long>(row->size()) != cols + 1)
          throw ParseError("layer row needs " + std::to_string(cols + 1) + " values", lineno);
        for (long c = 0; c < cols; ++c) l.weight(r, c) = parse_real((*row)[c], lineno);
        l.bias[r] = parse_real(row->back(), lineno);
      }
      layers.push_back(std::move(l));
    } else {
      throw ParseError("unknown directive '" + t[0] + "'", lineno);
    }
  }
  if (!kind) throw ParseError("missing 'kind' line", 0);
  try {
    if (*kind == DecoderKind::Linear) {
      if (layers.size() != 1) throw ParseError("linear decoder needs exactly one layer", 0);
      return Decoder::linear(layers[0].weight, layers[0].bias);
    }
    return Decoder::mlp_tanh(std::move(layers));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
}

inline void write_decoder(std::ostream& out, const Decoder& dec) {
  if (dec.kind() == DecoderKind::Custom) throw InvalidArgument("custom decoders have no text form");
  out << "kind " << (dec.kind() == DecoderKind::Linear ? "linear" : "mlp-tanh") << '\n';
  for (const auto& l : dec.layers()) {
    out << "layer " << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out << format_real(l.weight(r, c)) << ' ';
      out << format_real(l.bias[r]) << '\n';
    }
  }
}

/// CSV with columns s, y0.., p0.., H.
template <Hamiltonian H>
void write_trajectory_csv(std::ostream& out, const H& ham, const PhaseTrajectory& traj) {
  if (traj.points.empty()) return;
  const auto d = traj.points.front().y.size();
  out << 's';
  for (Eigen::Index i = 0; i < d; ++i) out << ",y" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",p" << i;
  out << ",H\n";
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const auto& pt = traj.points[k];
    out << format_real(static_cast<double>(k) * traj.step);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_real(pt.y[i]);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_real(pt.p[i]);
    out << ',' << format_real(ham.energy(pt.y, pt.p)) << '\n';
  }
}

}  // namespace phtx::manifold
