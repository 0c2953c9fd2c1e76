#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phtx/control.hpp"
#include "phtx/planner.hpp"

using namespace phtx;
using namespace phtx::control;
using phtx::manifold::Decoder;
using phtx::manifold::MetricField;
using phtx::manifold::PhasePoint;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

MetricField scaled_identity(double c, Eigen::Index d) {
  return MetricField(Decoder::linear(std::sqrt(c) * Mat::Identity(d, d)), 0.0);
}

MetricField curved() {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 0.7);
  Mat W(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) W(i, j) = g(rng);
  return MetricField(Decoder::mlp_tanh({{W, vec({0.1, -0.2, 0.05})}}));
}

CostSpec<> quadratic_task() {
  CostSpec<> c;
  c.task = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
  return c;
}

const NoWorkspace kNone{};

}  // namespace

TEST(OptimalControl, Examples) {
  EXPECT_TRUE(optimal_control(scaled_identity(1, 2), vec({0, 0}), vec({1, 2})).isApprox(vec({1, 2})));
  EXPECT_TRUE(optimal_control(scaled_identity(1, 2), vec({0, 0}), vec({0, 0})).isZero(0.0));
  EXPECT_NEAR(optimal_control(scaled_identity(5, 1), vec({0}), vec({1}))[0], 0.2, 1e-15);
}

TEST(OptimalControl, MaximizesPontryaginHamiltonian) {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  const auto mf = curved();
  const auto cost = quadratic_task();
  for (int a = 0; a < 100; ++a) {
    // Latent points where the metric is well conditioned, so the gap is resolvable.
    const Vec y = vec({box(rng), box(rng)}), p = vec({g(rng), g(rng)});
    const Vec u = optimal_control(mf, y, p);
    const double best = control_hamiltonian(mf, cost, kNone, y, p, u);
    const Mat G = mf.metric(y);
    for (int b = 0; b < 100; ++b) {
      const Vec du = vec({g(rng), g(rng)}) * 0.1;
      const double other = control_hamiltonian(mf, cost, kNone, y, p, Vec(u + du));
      EXPECT_GT(best, other);
      // H_ctrl is quadratic in u with Hessian -G.
      EXPECT_NEAR(best - other, 0.5 * du.dot(G * du), 1e-10 * (1.0 + std::abs(best)));
    }
    EXPECT_NEAR(best, reduced_hamiltonian(mf, cost, kNone, y, p), 1e-10);
  }
}

TEST(ReducedHamiltonian, Examples) {
  const auto mf = curved();
  const Vec y = vec({0.3, -0.4}), p = vec({1.2, 0.5});
  EXPECT_NEAR(reduced_hamiltonian(mf, CostSpec<>{}, kNone, y, p), manifold::geo_hamiltonian(mf, {y, p}), 1e-15);

  const auto flat = scaled_identity(1, 1);
  for (double yy : {-2.0, 0.0, 0.7, 3.0})
    EXPECT_NEAR(reduced_hamiltonian(flat, quadratic_task(), kNone, vec({yy}), vec({yy})), 0.0, 1e-15);

  CostSpec<> constant;
  constant.task = [](const Vec&) { return 2.5; };
  EXPECT_EQ(reduced_hamiltonian(mf, constant, kNone, y, Vec::Zero(2)), -2.5);
}

TEST(ReducedHamiltonian, WorkspaceTermWeightedByLambda) {
  struct Facts {
    double target;
  };
  CostSpec<Facts> cost;
  cost.ws_cost = [](const Vec& z, const Facts& f) { return (z[0] - f.target) * (z[0] - f.target); };
  cost.lambda = 0.5;
  const auto flat = scaled_identity(1, 1);
  EXPECT_DOUBLE_EQ(reduced_hamiltonian(flat, cost, Facts{1.0}, vec({3}), vec({0})), -2.0);
  cost.lambda = -1.0;
  EXPECT_THROW(reduced_hamiltonian(flat, cost, Facts{1.0}, vec({3}), vec({0})), InvalidArgument);
}

TEST(Hjb, AnalyticPairHasZeroResidual) {
  const auto flat = scaled_identity(1, 1);
  ValueFunction V;
  V.eval = [](const Vec& y, double) { return 0.5 * y.squaredNorm(); };
  V.grad = [](const Vec& y, double) { return Vec(y); };
  V.time_partial = [](const Vec&, double) { return 0.0; };
  for (int k = 0; k <= 60; ++k) {
    const double y = -3.0 + 0.1 * k;
    EXPECT_NEAR(hjb_residual(flat, quadratic_task(), kNone, V, vec({y}), 0.0), 0.0, 1e-10);
  }
}

TEST(Hjb, FiniteDifferenceValueFunctionAgrees) {
  const auto flat = scaled_identity(1, 1);
  const auto V = ValueFunction::from_eval([](const Vec& y, double) { return 0.5 * y.squaredNorm(); });
  for (double y : {-3.0, -1.0, 0.5, 2.0}) EXPECT_NEAR(hjb_residual(flat, quadratic_task(), kNone, V, vec({y}), 1.0), 0.0, 1e-8);
}

TEST(Hjb, ZeroValueGivesMinusTaskCost) {
  CostSpec<> c;
  c.task = [](const Vec&) { return 0.75; };
  const auto V = ValueFunction::from_eval([](const Vec&, double) { return 0.0; });
  EXPECT_NEAR(hjb_residual(curved(), c, kNone, V, vec({0.2, 0.1}), 0.0), -0.75, 1e-15);
}

TEST(Hjb, MatchesHandAssembledFormula) {
  const auto mf = curved();
  const auto cost = quadratic_task();
  ValueFunction V;
  V.eval = [](const Vec& y, double t) { return std::sin(y[0]) * std::exp(-t) + y[1] * y[1] * t; };
  V.grad = [](const Vec& y, double t) { return vec({std::cos(y[0]) * std::exp(-t), 2 * y[1] * t}); };
  V.time_partial = [](const Vec& y, double t) { return -std::sin(y[0]) * std::exp(-t) + y[1] * y[1]; };
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    const Vec y = vec({u(rng), u(rng)});
    const double t = 0.5 * (u(rng) + 1.5);
    const Vec p = V.grad(y, t);
    const Mat J = mf.decoder().jacobian(y);
    Mat G = J.transpose() * J;
    G.diagonal().array() += mf.regularization();
    const Vec z = mf.decoder()(y);
    const double expected = V.time_partial(y, t) + 0.5 * p.dot(G.inverse() * p) - 0.5 * z.squaredNorm();
    EXPECT_NEAR(hjb_residual(mf, cost, kNone, V, y, t), expected, 1e-10);
  }
}

TEST(NdmLayer, Examples) {
  const auto flat = scaled_identity(1, 2);
  const auto out = ndm_layer(flat, CostSpec<>{}, kNone, {vec({1, 2}), vec({0.5, -1})}, 0.1);
  EXPECT_TRUE(out.y.isApprox(vec({1.05, 1.9}), 1e-15));
  EXPECT_TRUE(out.p.isApprox(vec({0.5, -1}), 1e-15));
  EXPECT_THROW(ndm_layer(flat, CostSpec<>{}, kNone, {vec({1, 2}), vec({0.5, -1})}, 0.0), InvalidArgument);
}

TEST(NdmLayer, OscillatorEquivalent) {
  // With l_task = -y^2/2 the reduced Hamiltonian is (p^2 + y^2)/2.
  CostSpec<> c;
  c.task = [](const Vec& z) { return -0.5 * z.squaredNorm(); };
  const auto flat = scaled_identity(1, 1);
  PhasePoint a{vec({1}), vec({0})}, b = a;
  const auto osc = manifold::harmonic_oscillator();
  for (int k = 0; k < 50; ++k) {
    a = ndm_layer(flat, c, kNone, a, 0.1);
    b = manifold::leapfrog_step(osc, b, 0.1);
  }
  EXPECT_NEAR(a.y[0], b.y[0], 1e-8);
  EXPECT_NEAR(a.p[0], b.p[0], 1e-8);
}

TEST(NdmLayer, ConservesGeodesicEnergy) {
  const auto mf = curved();
  PhasePoint pt{vec({0.2, -0.3}), vec({0.8, 0.4})};
  const double h0 = manifold::geo_hamiltonian(mf, pt);
  double drift = 0.0;
  for (int k = 0; k < 100; ++k) {
    pt = ndm_layer(mf, CostSpec<>{}, kNone, pt, 0.01);
    drift = std::max(drift, std::abs(manifold::geo_hamiltonian(mf, pt) - h0));
  }
  EXPECT_LE(drift, 1e-3);

  const auto flat = scaled_identity(2, 2);
  PhasePoint q{vec({0, 0}), vec({1, -1})};
  const double e0 = manifold::geo_hamiltonian(flat, q);
  for (int k = 0; k < 100; ++k) q = ndm_layer(flat, CostSpec<>{}, kNone, q, 0.01);
  EXPECT_EQ(manifold::geo_hamiltonian(flat, q), e0);
}

TEST(RunningCost, Examples) {
  EXPECT_EQ(running_cost(curved(), CostSpec<>{}, kNone, vec({0.1, 0.2}), Vec::Zero(2)), 0.0);
  EXPECT_DOUBLE_EQ(running_cost(scaled_identity(1, 2), CostSpec<>{}, kNone, vec({0, 0}), vec({1, 1})), 1.0);
  CostSpec<> c;
  c.task = [](const Vec&) { return 0.5; };
  EXPECT_DOUBLE_EQ(running_cost(scaled_identity(2, 1), c, kNone, vec({0}), vec({1})), 1.5);
}

TEST(TrajectoryCost, Examples) {
  const auto flat = scaled_identity(1, 1);
  std::vector<ControlNode> still{{vec({0}), vec({0}), 1.0}, {vec({0}), vec({0}), 1.0}};
  EXPECT_EQ(trajectory_cost(flat, CostSpec<>{}, kNone, still), 0.0);

  CostSpec<> c;
  c.task = [](const Vec&) { return 0.75; };
  std::vector<ControlNode> seg{{vec({0}), vec({0}), 2.0}, {vec({1}), vec({0}), 0.0}};
  EXPECT_DOUBLE_EQ(trajectory_cost(flat, c, kNone, seg), 1.5);

  c.terminal = [](const Vec& z) { return 10 * z[0]; };
  EXPECT_DOUBLE_EQ(trajectory_cost(flat, c, kNone, seg), 11.5);
  EXPECT_THROW(trajectory_cost(flat, c, kNone, {}), InvalidArgument);
}

TEST(TrajectoryCost, LinearToyPathMatchesPlannerEdgeCosts) {
  const auto flat = scaled_identity(1, 1);
  const auto cost = quadratic_task();
  std::vector<ControlNode> nodes;
  double planner_sum = 0.0;
  const auto edge = planner::trapezoid_cost([](const Vec& y) { return 0.5 * y.squaredNorm(); });
  for (int k = 0; k <= 5; ++k) {
    nodes.push_back({vec({2.0 - 0.4 * k}), vec({0}), 1.0});
    if (k > 0) planner_sum += edge(nodes[k - 1].y, nodes[k].y);
  }
  EXPECT_NEAR(trajectory_cost(flat, cost, kNone, nodes), 3.4, 1e-12);
  EXPECT_NEAR(planner_sum, 3.4, 1e-12);
}

TEST(TrajectoryCost, AdditiveOverConcatenation) {
  const auto mf = curved();
  const auto cost = quadratic_task();
  std::mt19937_64 rng(24);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ControlNode> nodes;
    for (int k = 0; k < 9; ++k) nodes.push_back({vec({g(rng), g(rng)}), vec({g(rng), g(rng)}), 0.1 + 0.05 * k});
    const std::vector<ControlNode> first(nodes.begin(), nodes.begin() + 5), second(nodes.begin() + 4, nodes.end());
    EXPECT_NEAR(trajectory_cost(mf, cost, kNone, nodes),
                trajectory_cost(mf, cost, kNone, first) + trajectory_cost(mf, cost, kNone, second), 1e-12);
  }
}
