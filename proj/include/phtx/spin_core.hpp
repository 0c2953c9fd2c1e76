#pragma once

// Micro-level spin picture of attention heads, CTM neurons and FFN baths.
//
// A SpinSystem holds N unit vectors with a pairwise coupling matrix, optional
// three-body terms and per-spin external fields. Energies follow
//
//   H = -sum_{i<j} Jbar_ij s_i.s_j - sum_{i<j<k} K_ijk f(s_i,s_j,s_k) - sum_i h_i.s_i
//
// with Jbar = (J + J^T)/2, which equals J for the usual symmetric couplings.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/text_io.hpp"

namespace phtx::spin {

inline constexpr double kRenormFloor = 1e-12;

/// Unit vector on S^{d-1}.
class Spin {
 public:
  /// Normalizes `v`; throws DegenerateError when ||v|| < 1e-12.
  explicit Spin(const Vec& v) {
    const double n = v.norm();
    if (!(n >= kRenormFloor)) throw DegenerateError("spin vector has zero length");
    dir_ = v / n;
  }

  const Vec& direction() const { return dir_; }
  Eigen::Index dim() const { return dir_.size(); }
  double dot(const Spin& o) const { return dir_.dot(o.dir_); }

 private:
  Vec dir_;
};

struct ThreeBodyTerm {
  std::size_t i, j, k;
  double strength;
};

/// Immutable N-spin configuration with couplings and fields.
class SpinSystem {
 public:
  SpinSystem(std::vector<Spin> spins, Mat couplings, std::vector<ThreeBodyTerm> three_body = {},
             std::vector<Vec> fields = {})
      : spins_(std::move(spins)),
        couplings_(std::move(couplings)),
        three_body_(std::move(three_body)),
        fields_(std::move(fields)) {
    const auto n = spins_.size();
    if (n == 0) throw DimensionError("spin system needs at least one spin");
    const auto d = spins_.front().dim();
    for (const auto& s : spins_)
      if (s.dim() != d) throw DimensionError("spins must share one dimension");
    if (couplings_.rows() != static_cast<Eigen::Index>(n) || couplings_.cols() != couplings_.rows())
      throw DimensionError("coupling matrix must be N x N");
    if (!couplings_.allFinite()) throw InvalidArgument("couplings must be finite");
    if (fields_.empty()) fields_.assign(n, Vec::Zero(d));
    if (fields_.size() != n) throw DimensionError("need one field per spin");
    for (const auto& h : fields_)
      if (h.size() != d) throw DimensionError("field dimension differs from spin dimension");
    for (const auto& t : three_body_)
      if (!(t.i < t.j && t.j < t.k && t.k < n))
        throw InvalidArgument("three-body indices must satisfy i < j < k < N");
  }

  std::size_t size() const { return spins_.size(); }
  Eigen::Index dim() const { return spins_.front().dim(); }
  const std::vector<Spin>& spins() const { return spins_; }
  const Spin& spin(std::size_t i) const { return spins_.at(i); }
  const Mat& couplings() const { return couplings_; }
  const std::vector<ThreeBodyTerm>& three_body() const { return three_body_; }
  const std::vector<Vec>& fields() const { return fields_; }

  SpinSystem with_spins(std::vector<Spin> spins) const {
    return SpinSystem(std::move(spins), couplings_, three_body_, fields_);
  }

 private:
  std::vector<Spin> spins_;
  Mat couplings_;
  std::vector<ThreeBodyTerm> three_body_;
  std::vector<Vec> fields_;
};

/// J_ij = q_i.k_j / sqrt(d), optionally replaced by (J + J^T)/2.
inline Mat attention_couplings(const Mat& Q, const Mat& K, bool symmetrize) {
  if (Q.rows() != K.rows() || Q.cols() != K.cols())
    throw DimensionError("Q and K must have the same shape");
  if (Q.cols() < 1) throw DimensionError("key dimension must be >= 1");
  Mat J = Q * K.transpose() / std::sqrt(static_cast<double>(Q.cols()));
  if (symmetrize) J = (0.5 * (J + J.transpose())).eval();
  return J;
}

inline double two_body_energy(const SpinSystem& sys) {
  const auto& J = sys.couplings();
  double e = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.size(); ++j)
      e -= 0.5 * (J(i, j) + J(j, i)) * sys.spin(i).dot(sys.spin(j));
    e -= sys.fields()[i].dot(sys.spin(i).direction());
  }
  return e;
}

/// Gradient of two_body_energy with respect to the raw (unnormalized) spin
/// vector s_i: -sum_{j != i} Jbar_ij s_j - h_i.
inline Vec two_body_gradient(const SpinSystem& sys, std::size_t i) {
  if (i >= sys.size()) throw InvalidArgument("spin index out of range");
  const auto& J = sys.couplings();
  Vec g = -sys.fields()[i];
  for (std::size_t j = 0; j < sys.size(); ++j)
    if (j != i) g -= 0.5 * (J(i, j) + J(j, i)) * sys.spin(j).direction();
  return g;
}

/// Symmetric trilinear form on spin directions. Construct through
/// make_trilinear_form so that the symmetry check runs once.
class TrilinearForm {
 public:
  using Fn = std::function<double(const Vec&, const Vec&, const Vec&)>;

  double operator()(const Vec& a, const Vec& b, const Vec& c) const { return fn_(a, b, c); }

 private:
  explicit TrilinearForm(Fn fn) : fn_(std::move(fn)) {}
  Fn fn_;
  friend TrilinearForm make_trilinear_form(Fn fn, Eigen::Index dim, unsigned trials);
};

/// Registers `fn` after a randomized check that it is invariant under all six
/// argument permutations (relative tolerance 1e-9).
inline TrilinearForm make_trilinear_form(TrilinearForm::Fn fn, Eigen::Index dim,
                                         unsigned trials = 32) {
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  auto draw = [&] {
    Vec v(dim);
    for (auto& x : v) x = gauss(rng);
    return v;
  };
  for (unsigned t = 0; t < trials; ++t) {
    std::array<Vec, 3> v{draw(), draw(), draw()};
    std::array<int, 3> idx{0, 1, 2};
    const double ref = fn(v[0], v[1], v[2]);
    while (std::next_permutation(idx.begin(), idx.end())) {
      const double got = fn(v[idx[0]], v[idx[1]], v[idx[2]]);
      if (std::abs(got - ref) > 1e-9 * (1.0 + std::abs(ref)))
        throw InvalidArgument("three-body form is not symmetric in its arguments");
    }
  }
  return TrilinearForm(std::move(fn));
}

/// (a.b)(b.c) + (b.c)(c.a) + (c.a)(a.b)
inline TrilinearForm default_three_body_form(Eigen::Index dim) {
  return make_trilinear_form(
      [](const Vec& a, const Vec& b, const Vec& c) {
        const double ab = a.dot(b), bc = b.dot(c), ca = c.dot(a);
        return ab * bc + bc * ca + ca * ab;
      },
      dim);
}

inline double three_body_energy(const SpinSystem& sys, const TrilinearForm& f) {
  double e = 0.0;
  for (const auto& t : sys.three_body())
    e -= t.strength * f(sys.spin(t.i).direction(), sys.spin(t.j).direction(),
                        sys.spin(t.k).direction());
  return e;
}

inline double three_body_energy(const SpinSystem& sys) {
  return three_body_energy(sys, default_three_body_form(sys.dim()));
}

/// E_ij = -J_ij s_i.s_j for every j != i, in index order.
inline std::vector<double> bond_energies(std::size_t i, const SpinSystem& sys) {
  if (i >= sys.size()) throw InvalidArgument("spin index out of range");
  std::vector<double> e;
  e.reserve(sys.size() - 1);
  for (std::size_t j = 0; j < sys.size(); ++j)
    if (j != i) e.push_back(-sys.couplings()(i, j) * sys.spin(i).dot(sys.spin(j)));
  return e;
}

/// Softmax of -beta*E with max subtraction.
inline std::vector<double> gibbs_weights(const std::vector<double>& energies, double beta) {
  if (!(beta >= 1e-12)) throw InvalidArgument("inverse temperature must be >= 1e-12");
  if (energies.empty()) throw DegenerateError("no bonds to attend over");
  double top = -beta * energies.front();
  for (double e : energies) top = std::max(top, -beta * e);
  std::vector<double> w(energies.size());
  double z = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) z += (w[j] = std::exp(-beta * energies[j] - top));
  for (double& x : w) x /= z;
  return w;
}

/// Conditional Gibbs distribution of spin i over its partners j != i.
inline std::vector<double> gibbs_attention(std::size_t i, const SpinSystem& sys, double beta) {
  if (sys.size() < 2) throw DegenerateError("attention needs at least two spins");
  return gibbs_weights(bond_energies(i, sys), beta);
}

inline Vec head_output(const std::vector<double>& pi, const std::vector<Vec>& values) {
  if (pi.size() != values.size()) throw DimensionError("weights and values differ in length");
  if (values.empty()) throw DimensionError("no values");
  Vec out = Vec::Zero(values.front().size());
  for (std::size_t j = 0; j < pi.size(); ++j) {
    if (values[j].size() != out.size()) throw DimensionError("values differ in dimension");
    out += pi[j] * values[j];
  }
  return out;
}

/// Temporal synapse kernel k_ij(dtau), dtau = 0..L-1.
struct SynapseKernel {
  std::vector<double> taps;
};

/// Time-integrated gain of the kernel.
inline double effective_influence(const SynapseKernel& kernel) {
  if (kernel.taps.empty()) throw InvalidArgument("kernel needs at least one tap");
  double w = 0.0;
  for (double t : kernel.taps) {
    if (!std::isfinite(t)) throw InvalidArgument("kernel taps must be finite");
    w += t;
  }
  return w;
}

/// Blend of structural couplings (W + W^T)/2 and synchronization statistics
/// (1/T) sum_tau s_i(tau).s_j(tau).
inline Mat ctm_couplings(const Mat& W, const std::vector<std::vector<Spin>>& history, double alpha) {
  if (history.empty()) throw InvalidArgument("spin history is empty");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0,1]");
  const auto n = static_cast<std::size_t>(W.rows());
  if (W.cols() != W.rows()) throw DimensionError("W must be square");
  Mat sync = Mat::Zero(n, n);
  for (const auto& frame : history) {
    if (frame.size() != n) throw DimensionError("history frame size differs from W");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sync(i, j) += frame[i].dot(frame[j]);
  }
  sync /= static_cast<double>(history.size());
  return alpha * 0.5 * (W + W.transpose()) + (1.0 - alpha) * sync;
}

enum class Nonlinearity { Tanh, Gelu };

inline double apply(Nonlinearity f, double x) {
  switch (f) {
    case Nonlinearity::Tanh:
      return std::tanh(x);
    case Nonlinearity::Gelu:
      return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
  }
  return x;
}

/// FFN bath parameters. `w1` may carry extra trailing columns that act on the
/// external drive x_ext; its first d columns act on the spin.
struct BathParams {
  double eta = 0.0;
  double eta_ff = 0.0;
  std::vector<double> gamma;  // one per spin; empty means all zero
  Mat w1, w2;
  Vec b1, b2;
  Nonlinearity sigma = Nonlinearity::Tanh;

  void validate(std::size_t n) const {
    if (!(eta >= 0.0) || !(eta_ff >= 0.0)) throw InvalidArgument("step sizes must be >= 0");
    if (!gamma.empty() && gamma.size() != n) throw DimensionError("need one damping per spin");
    for (double g : gamma)
      if (!(g >= 0.0)) throw InvalidArgument("damping must be >= 0");
    if (w1.rows() != b1.size() || w2.cols() != w1.rows() || w2.rows() != b2.size())
      throw DimensionError("inconsistent FFN weight shapes");
  }
};

/// Zero-weight FFN of hidden width `hidden` for spins of dimension d.
inline BathParams identity_bath(Eigen::Index d, Eigen::Index hidden = 1, Eigen::Index ext = 0) {
  BathParams b;
  b.w1 = Mat::Zero(hidden, d + ext);
  b.w2 = Mat::Zero(d, hidden);
  b.b1 = Vec::Zero(hidden);
  b.b2 = Vec::Zero(d);
  return b;
}

/// Direction of h + W2 sigma(W1 [h; x_ext] + b1) + b2.
inline Spin ffn_target(const Vec& h, const BathParams& bath, const Vec& x_ext = Vec()) {
  const auto d = h.size();
  if (bath.w1.cols() != d + x_ext.size() || bath.w2.rows() != d)
    throw DimensionError("FFN weights do not match hidden/external dimensions");
  Vec in(d + x_ext.size());
  in << h, x_ext;
  Vec pre = bath.w1 * in + bath.b1;
  for (auto& x : pre) x = apply(bath.sigma, x);
  const Vec out = h + bath.w2 * pre + bath.b2;
  if (out.norm() < kRenormFloor) throw DegenerateError("FFN residual sum has no direction");
  return Spin(out);
}

/// One decomposed micro update per spin:
///   s^ = s - eta dH/ds + eta_ff (target - s) - gamma s,  s' = s^/|s^|.
/// The Hamiltonian part uses the two-body + field energy.
inline SpinSystem micro_step(const SpinSystem& sys, const BathParams& bath,
                             const Vec& x_ext = Vec()) {
  bath.validate(sys.size());
  std::vector<Spin> next;
  next.reserve(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Vec& s = sys.spin(i).direction();
    Vec hat = s - bath.eta * two_body_gradient(sys, i);
    if (bath.eta_ff != 0.0) hat += bath.eta_ff * (ffn_target(s, bath, x_ext).direction() - s);
    if (!bath.gamma.empty()) hat -= bath.gamma[i] * s;
    if (hat.norm() < kRenormFloor)
      throw DegenerateError("spin " + std::to_string(i) + " collapsed to zero during update");
    next.emplace_back(hat);
  }
  return sys.with_spins(std::move(next));
}

/// Mean of the spin directions; the demo coarse-graining map to latent space.
inline Vec mean_pool(const SpinSystem& sys) {
  Vec m = Vec::Zero(sys.dim());
  for (const auto& s : sys.spins()) m += s.direction();
  return m / static_cast<double>(sys.size());
}

/// Spin directions, one row per spin.
inline void write_spins(std::ostream& out, const SpinSystem& sys) {
  Mat m(sys.size(), sys.dim());
  for (std::size_t i = 0; i < sys.size(); ++i) m.row(i) = sys.spin(i).direction().transpose();
  write_matrix(out, m);
}

/// Reads one spin per row; rows are normalized on load.
inline std::vector<Spin> read_spins(std::istream& in) {
  const Mat m = read_matrix(in);
  std::vector<Spin> spins;
  for (Eigen::Index r = 0; r < m.rows(); ++r) spins.emplace_back(Vec(m.row(r).transpose()));
  return spins;
}

}  // namespace phtx::spin
