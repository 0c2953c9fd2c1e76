#pragma once

// Optimal control on the manifold. For controlled dynamics y' = u with running
// cost 1/2 |u|_G^2 + l_task(z) + lambda l_WS(z, W), z = decoder(y), the
// Pontryagin maximizer is u* = G^{-1} p and the reduced Hamiltonian is
//
//   H(y, p) = 1/2 p^T G^{-1} p - l_task(z) - lambda l_WS(z, W).
//
// The workspace state type W is a template parameter; NoWorkspace is used when
// there is no workspace term.
//
// Callables stored in CostSpec and ValueFunction must be thread-safe if the
// same spec is used from several threads.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "phtx/errors.hpp"
#include "phtx/manifold.hpp"

namespace phtx::control {

using manifold::MetricField;
using manifold::PhasePoint;

struct NoWorkspace {};

template <class W = NoWorkspace>
struct CostSpec {
  std::function<double(const Vec& z)> task;
  std::function<double(const Vec& z, const W& ws)> ws_cost;  // optional
  double lambda = 0.0;
  std::function<double(const Vec& z)> terminal;  // optional, Phi

  double task_at(const Vec& z) const { return task ? task(z) : 0.0; }
  double ws_at(const Vec& z, const W& ws) const {
    if (!ws_cost) return 0.0;
    if (!(lambda >= 0.0)) throw InvalidArgument("workspace weight lambda must be >= 0");
    return lambda * ws_cost(z, ws);
  }
  double terminal_at(const Vec& z) const { return terminal ? terminal(z) : 0.0; }
};

/// V(y, t) with its spatial gradient and time partial.
struct ValueFunction {
  std::function<double(const Vec&, double)> eval;
  std::function<Vec(const Vec&, double)> grad;
  std::function<double(const Vec&, double)> time_partial;

  /// Fills missing derivatives by central differences of `eval`.
  static ValueFunction from_eval(std::function<double(const Vec&, double)> v) {
    ValueFunction f;
    f.eval = v;
    f.grad = [v](const Vec& y, double t) {
      return manifold::fd_gradient([&](const Vec& yy) { return v(yy, t); }, y);
    };
    f.time_partial = [v](const Vec& y, double t) {
      const double h = manifold::kGradStep * (1.0 + std::abs(t));
      return (v(y, t + h) - v(y, t - h)) / (2.0 * h);
    };
    return f;
  }
};

/// u* = G(y)^{-1} p.
inline Vec optimal_control(const MetricField& mf, const Vec& y, const Vec& p) { return mf.solve(y, p); }

/// p^T u - 1/2 u^T G u - l_task - lambda l_WS.
template <class W>
double control_hamiltonian(const MetricField& mf, const CostSpec<W>& cost, const W& ws, const Vec& y,
                           const Vec& p, const Vec& u) {
  const Vec z = mf.decoder()(y);
  return p.dot(u) - 0.5 * u.dot(mf.metric(y) * u) - cost.task_at(z) - cost.ws_at(z, ws);
}

template <class W>
double reduced_hamiltonian(const MetricField& mf, const CostSpec<W>& cost, const W& ws, const Vec& y,
                           const Vec& p) {
  const Vec z = mf.decoder()(y);
  return 0.5 * p.dot(mf.solve(y, p)) - cost.task_at(z) - cost.ws_at(z, ws);
}

/// dV/dt + H(y, grad V); zero where V solves the HJB equation.
template <class W>
double hjb_residual(const MetricField& mf, const CostSpec<W>& cost, const W& ws,
                    const ValueFunction& V, const Vec& y, double t) {
  return V.time_partial(y, t) + reduced_hamiltonian(mf, cost, ws, y, V.grad(y, t));
}

/// Reduced Hamiltonian as a manifold::Hamiltonian. Holds references; the
/// metric, cost and workspace must outlive it.
template <class W>
class ReducedHamiltonian {
 public:
  ReducedHamiltonian(const MetricField& mf, const CostSpec<W>& cost, const W& ws)
      : mf_(&mf), cost_(&cost), ws_(&ws) {}

  double energy(const Vec& y, const Vec& p) const { return reduced_hamiltonian(*mf_, *cost_, *ws_, y, p); }
  Vec grad_p(const Vec& y, const Vec& p) const { return mf_->solve(y, p); }
  Vec grad_y(const Vec& y, const Vec& p) const {
    return manifold::fd_gradient([&](const Vec& yy) { return energy(yy, p); }, y);
  }

 private:
  const MetricField* mf_;
  const CostSpec<W>* cost_;
  const W* ws_;
};

/// One Hamiltonian layer: a leapfrog step of the reduced Hamiltonian.
template <class W>
PhasePoint ndm_layer(const MetricField& mf, const CostSpec<W>& cost, const W& ws, const PhasePoint& pt,
                     double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("layer step dt must be positive");
  return manifold::leapfrog_step(ReducedHamiltonian<W>(mf, cost, ws), pt, dt);
}

/// 1/2 u^T G(y) u + l_task(z) + lambda l_WS(z, W).
template <class W>
double running_cost(const MetricField& mf, const CostSpec<W>& cost, const W& ws, const Vec& y,
                    const Vec& u) {
  const Vec z = mf.decoder()(y);
  return 0.5 * u.dot(mf.metric(y) * u) + cost.task_at(z) + cost.ws_at(z, ws);
}

/// One node of a discretized control path; dt is the time to the next node.
struct ControlNode {
  Vec y;
  Vec u;
  double dt = 0.0;
};

/// sum_k dt_k (c_k + c_{k+1})/2 + Phi(z_last), c_k the running cost at node k.
/// The last node's dt is unused.
template <class W>
double trajectory_cost(const MetricField& mf, const CostSpec<W>& cost, const W& ws,
                       const std::vector<ControlNode>& nodes) {
  if (nodes.empty()) throw InvalidArgument("trajectory needs at least one node");
  double total = 0.0;
  double prev = running_cost(mf, cost, ws, nodes[0].y, nodes[0].u);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double next = running_cost(mf, cost, ws, nodes[k + 1].y, nodes[k + 1].u);
    total += nodes[k].dt * 0.5 * (prev + next);
    prev = next;
  }
  return total + cost.terminal_at(mf.decoder()(nodes.back().y));
}

}  // namespace phtx::control
