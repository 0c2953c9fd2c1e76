#include <gtest/gtest.h>

#include <cmath>

#include "phtx/experiments.hpp"

using namespace phtx;
using namespace phtx::experiments;

namespace {

double trapezoid_by_hand(const std::vector<double>& ys) {
  double J = 0.0;
  for (std::size_t k = 0; k + 1 < ys.size(); ++k) J += 0.25 * (ys[k] * ys[k] + ys[k + 1] * ys[k + 1]);
  return J;
}

/// Another decoder with entropy strictly increasing in |y|: 4 outcomes.
ToyDecoder quartic_decoder() {
  return {"quartic", 4, [](double y) {
            const double s = 2.0 * std::exp(-y * y);
            return Vec((Vec(4) << s, 0.5 * s, 0.0, -s).finished());
          }};
}

}  // namespace

TEST(Decoders, EntropyShape) {
  const auto peaked = peaked_decoder();
  double prev = -1.0;
  for (int k = 0; k <= 200; ++k) {
    const double h = peaked.entropy(0.01 * k);
    EXPECT_GT(h, prev);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(3.0));
    prev = h;
  }
  EXPECT_NEAR(tilt_decoder().entropy(0.0), std::log(3.0), 1e-15);
  EXPECT_LT(tilt_decoder().entropy(2.0), tilt_decoder().entropy(0.0));
  EXPECT_THROW(decoder_by_name("cubic"), InvalidArgument);
}

TEST(PathMetrics, Examples) {
  const auto m = path_metrics({2.0, 0.0}, peaked_decoder(), quadratic_value);
  EXPECT_EQ(m.cost_J, 1.0);
  EXPECT_EQ(m.delta_u, peaked_decoder().entropy(2.0) - peaked_decoder().entropy(0.0));
  EXPECT_NEAR(m.efficiency * m.cost_J, m.delta_u, 1e-9);
  EXPECT_THROW(path_metrics({0.0, 0.0}, peaked_decoder(), quadratic_value), InvalidArgument);
  EXPECT_THROW(path_metrics({1.0}, peaked_decoder(), quadratic_value), InvalidArgument);
}

TEST(Toy1, CostsAndPaths) {
  const auto r = toy1_run(peaked_decoder());
  const std::vector<double> linear{2.0, 1.6, 1.2, 0.8, 0.4, 0.0};
  ASSERT_EQ(r.linear.path.size(), linear.size());
  for (std::size_t k = 0; k < linear.size(); ++k) EXPECT_NEAR(r.linear.path[k], linear[k], 1e-15);
  EXPECT_EQ(r.hjb_like.path, (std::vector<double>{2.0, 1.0, 0.5, 0.25, 0.125, 0.0625}));
  EXPECT_EQ(r.ndm_sssp.path, (std::vector<double>{2.0, 0.0}));
  EXPECT_NEAR(r.linear.cost_J, 3.4, 1e-12);
  EXPECT_NEAR(r.linear.cost_J, 1.64 + 1.0 + 0.52 + 0.2 + 0.04, 1e-12);
  EXPECT_NEAR(r.hjb_like.cost_J, trapezoid_by_hand(r.hjb_like.path), 1e-15);
  EXPECT_NEAR(r.hjb_like.cost_J, 1.6650, 1e-4);
  EXPECT_EQ(r.ndm_sssp.cost_J, 1.0);
}

TEST(Toy1, CostsIndependentOfDecoder) {
  const auto a = toy1_run(peaked_decoder()), b = toy1_run(tilt_decoder());
  EXPECT_EQ(a.linear.cost_J, b.linear.cost_J);
  EXPECT_EQ(a.hjb_like.cost_J, b.hjb_like.cost_J);
  EXPECT_EQ(a.ndm_sssp.cost_J, b.ndm_sssp.cost_J);
}

TEST(Toy1, OrderingForMonotoneDecoders) {
  for (const auto& dec : {peaked_decoder(0.5), peaked_decoder(), peaked_decoder(3.0), quartic_decoder()}) {
    const auto r = toy1_run(dec);
    EXPECT_GE(r.ndm_sssp.efficiency, r.hjb_like.efficiency) << dec.name;
    EXPECT_GE(r.hjb_like.efficiency, r.linear.efficiency) << dec.name;
    EXPECT_GE(r.linear.delta_u, r.hjb_like.delta_u) << dec.name;
    EXPECT_EQ(r.linear.delta_u, r.ndm_sssp.delta_u) << dec.name;
  }
}

TEST(Toy2, CostsAndFinals) {
  const auto r = toy2_run(peaked_decoder());
  EXPECT_EQ(r.hjb_only.path.back(), 0.25);
  EXPECT_NEAR(r.ctm_style.path.back(), 2.0 * std::pow(0.6, 6), 1e-15);
  EXPECT_NEAR(r.ctm_style.path.back(), 0.093312, 1e-6);
  EXPECT_NEAR(r.hjb_only.cost_J, 1.25 + 0.3125 + 0.078125, 1e-15);
  EXPECT_NEAR(r.hjb_only.cost_J, 1.6406, 1e-4);
  EXPECT_NEAR(r.ctm_style.cost_J, trapezoid_by_hand(r.ctm_style.path), 1e-15);
  EXPECT_NEAR(r.ctm_style.cost_J, 2.1204, 1e-4);
  EXPECT_GT(r.ctm_style.delta_u, r.hjb_only.delta_u);
  EXPECT_LT(r.ctm_style.efficiency, r.hjb_only.efficiency);
}

TEST(Toy3, Leapfrog) {
  const auto r = oscillator_leapfrog({});
  EXPECT_NEAR(r.y, 0.883, 5e-4);
  EXPECT_NEAR(r.p, 0.469, 5e-4);
  EXPECT_NEAR(r.eps_state, 0.042, 0.005);
  // The modified energy of this scheme oscillates with amplitude h^2/8.
  EXPECT_NEAR(r.eps_H_max, 0.1 * 0.1 / 8, 1e-5);
}

TEST(Toy3, LeapfrogEnergyBoundedOverLongRun) {
  const auto r = oscillator_leapfrog({100000, 0.1, 0.0});
  EXPECT_LE(r.eps_H_max, 2e-2);
}

TEST(Toy3, EulerClosedForm) {
  for (std::size_t n : {10u, 500u, 1000u}) {
    const auto r = oscillator_euler({n, 0.1, 0.0});
    const double radius = std::hypot(r.y, r.p);
    const double closed = std::pow(1.0 + 0.01, 0.5 * static_cast<double>(n));
    EXPECT_NEAR(radius, closed, 1e-3 * closed);
  }
  const auto r = oscillator_euler({});
  EXPECT_NEAR(r.y, 94.2, 0.01 * 94.2);
  EXPECT_NEAR(r.p, 110.0, 0.01 * 110.0);
  EXPECT_NEAR(r.eps_H_max, 0.5 * std::pow(1.01, 1000) - 0.5, 1e-6 * r.eps_H_max);
}

TEST(Toy3, DampedEnvelope) {
  const Toy3Config c{};
  const auto r = oscillator_damped(c);
  EXPECT_NEAR(std::hypot(r.y, r.p), std::exp(-0.5 * c.damping * 100.0), 0.02 * std::exp(-2.5));
  EXPECT_NEAR(r.eps_state, 0.919, 0.01);
  EXPECT_NEAR(r.eps_H_max, 0.497, 0.01);
}

TEST(Toy3, RejectsBadConfig) {
  EXPECT_THROW(toy3_run({1000, 0.0, 0.05}), InvalidArgument);
  EXPECT_THROW(toy3_run({0, 0.1, 0.05}), InvalidArgument);
  EXPECT_THROW(toy3_run({10, 0.1, -1.0}), InvalidArgument);
}

TEST(Reports, NonNegativeErrors) {
  const auto r = toy3_run();
  for (const auto& m : {r.full, r.euler, r.damped}) {
    EXPECT_GE(m.eps_state, 0.0);
    EXPECT_GE(m.eps_H_max, 0.0);
  }
}

TEST(Tables, Deterministic) {
  EXPECT_EQ(table1(peaked_decoder()).csv(), table1(peaked_decoder()).csv());
  EXPECT_EQ(table2(peaked_decoder()).csv(), table2(peaked_decoder()).csv());
  EXPECT_EQ(table3().csv(), table3().csv());
  EXPECT_EQ(table3().markdown(), table3().markdown());
}

TEST(Tables, Contents) {
  const auto t1 = table1(peaked_decoder());
  ASSERT_EQ(t1.rows.size(), 3u);
  EXPECT_EQ(t1.rows[0][4], "3.4");
  EXPECT_EQ(t1.rows[2][1], "2 -> 0");
  EXPECT_EQ(t1.rows[2][4], "1");

  const auto t3 = table3();
  EXPECT_EQ(t3.rows[0][0], "leapfrog-hamiltonian");
  EXPECT_EQ(t3.rows[0][9], "0.0125");
  EXPECT_FALSE(t3.rows[1][10].empty());

  const auto custom = table3({500, 0.05, 0.1});
  EXPECT_TRUE(custom.rows[0][9].empty());
}

TEST(Tables, CsvQuotesCommas) {
  Table t{{"a", "b"}, {{"x,y", "say \"hi\""}}};
  EXPECT_EQ(t.csv(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  EXPECT_EQ(t.markdown(), "| a   | b        |\n|-----|----------|\n| x,y | say \"hi\" |\n");
}
