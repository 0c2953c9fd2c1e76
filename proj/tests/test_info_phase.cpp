#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "phtx/info_phase.hpp"

using namespace phtx;
using namespace phtx::info;

namespace {

PhaseSample rotation(const PhaseSample& x) { return rotation_field(x, 0.0); }
PhaseSample source(const PhaseSample& x) { return {x.u, x.e}; }

std::vector<PhasePortrait> sampled(PhaseSample (*f)(const PhaseSample&), std::size_t n, std::uint64_t seed = 1) {
  return sample_field_portraits(f, n, -1.0, 1.0, -1.0, 1.0, 0.01, seed);
}

GridField grid(const std::vector<PhasePortrait>& p, std::size_t bins = 8) {
  return empirical_field(p, uniform_edges(-1.0, 1.0, bins), uniform_edges(-1.0, 1.0, bins));
}

}  // namespace

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy({0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-15);
  EXPECT_EQ(entropy({0.0, 1.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy({0.7311, 0.2689}), 0.5822, 1e-4);
  EXPECT_THROW(entropy({0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(entropy({1.5, -0.5}), InvalidArgument);
  EXPECT_THROW(entropy({}), InvalidArgument);
}

TEST(Entropy, BoundedByLogK) {
  std::mt19937_64 rng(31);
  std::exponential_distribution<double> ex;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = 2 + trial % 7;
    std::vector<double> p(K);
    double s = 0;
    for (auto& x : p) s += (x = ex(rng));
    for (auto& x : p) x /= s;
    const double h = entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(K)) + 1e-12);
  }
}

TEST(Portrait, Examples) {
  const auto flat = portrait({{0.2, 0.8}, {0.2, 0.8}, {0.2, 0.8}});
  for (const auto& s : flat.points) EXPECT_EQ(s.e, 0.0);

  const auto p = portrait_from_entropies({1.0, 0.4, 0.4});
  ASSERT_EQ(p.points.size(), 3u);
  EXPECT_EQ(p.points[0].e, 0.0);
  EXPECT_DOUBLE_EQ(p.points[1].e, 0.6);
  EXPECT_EQ(p.points[2].e, 0.0);

  EXPECT_THROW(portrait({{1.0}}), InvalidArgument);
  EXPECT_THROW(portrait_from_entropies({1.0, 0.5}, 0), InvalidArgument);
}

TEST(Portrait, TelescopingSum) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> series(2 + trial % 40);
    for (auto& x : series) x = u(rng);
    const auto p = portrait_from_entropies(series);
    double sum = 0.0;
    for (std::size_t t = 1; t < p.points.size(); ++t) sum += p.points[t].e;
    EXPECT_NEAR(sum, series.front() - series.back(), 1e-12);
  }
}

TEST(Portrait, SmoothingIsCenteredMovingAverage) {
  EXPECT_EQ(centered_moving_average({1, 2, 3, 4}, 1), (std::vector<double>{1, 2, 3, 4}));
  const auto s = centered_moving_average({0, 3, 6, 9}, 3);
  EXPECT_DOUBLE_EQ(s[0], 1.5);
  EXPECT_DOUBLE_EQ(s[1], 3.0);
  EXPECT_DOUBLE_EQ(s[2], 6.0);
  EXPECT_DOUBLE_EQ(s[3], 7.5);
  const auto p = portrait_from_entropies({4, 4, 1, 1}, 3);
  EXPECT_EQ(p.points[0].e, 0.0);
  EXPECT_DOUBLE_EQ(p.points[1].e, 1.5);
  EXPECT_DOUBLE_EQ(p.points[2].e, 1.0);
  EXPECT_DOUBLE_EQ(p.points[3].e, 1.5);
}

TEST(Field, StraightLineIsParallel) {
  PhasePortrait line;
  for (int t = 0; t < 20; ++t) line.points.push_back({0.05 * t, 0.1 - 0.02 * t});
  const auto f = empirical_field({line}, 4, 4);
  int occupied = 0;
  for (std::size_t i = 0; i < f.bins_u(); ++i)
    for (std::size_t j = 0; j < f.bins_e(); ++j)
      if (f.occupied(i, j)) {
        ++occupied;
        EXPECT_NEAR(f.vu(i, j) * -0.02 - f.ve(i, j) * 0.05, 0.0, 1e-15);
      }
  EXPECT_GT(occupied, 1);
}

TEST(Field, StationaryIsZero) {
  PhasePortrait still{{{0.5, 0.0}, {0.5, 0.0}, {0.5, 0.0}}};
  const auto f = empirical_field({still}, 3, 3);
  EXPECT_TRUE(f.vu.isZero(0.0));
  EXPECT_TRUE(f.ve.isZero(0.0));
  EXPECT_EQ(f.counts.sum(), 2);
}

TEST(Field, RecoversRotationGenerator) {
  const auto f = grid(sampled(rotation, 20000));
  for (std::size_t i = 0; i < f.bins_u(); ++i)
    for (std::size_t j = 0; j < f.bins_e(); ++j) {
      ASSERT_TRUE(f.occupied(i, j));
      const auto v = rotation({f.u_center(i), f.e_center(j)});
      EXPECT_NEAR(f.vu(i, j) / 0.01, v.u, 0.05);
      EXPECT_NEAR(f.ve(i, j) / 0.01, v.e, 0.05);
    }
}

TEST(Field, InvariantUnderPortraitOrder) {
  auto ps = sampled(rotation, 500);
  const auto a = grid(ps);
  std::mt19937_64 rng(33);
  std::shuffle(ps.begin(), ps.end(), rng);
  const auto b = grid(ps);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_LE((a.vu - b.vu).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((a.ve - b.ve).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Field, RejectsEmptyInput) {
  EXPECT_THROW(empirical_field({}, 3, 3), InvalidArgument);
  EXPECT_THROW(empirical_field({PhasePortrait{{{0.1, 0.1}}}}, 3, 3), InvalidArgument);
}

TEST(Divergence, RotationIsSmall) {
  EXPECT_LE(divergence_score(grid(sampled(rotation, 20000))), 0.1);
}

TEST(Divergence, SourceIsLarge) {
  const auto f = grid(sampled(source, 20000));
  double mag = 0.0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) mag += std::hypot(f.vu(i, j), f.ve(i, j)) / 0.01;
  mag /= 64.0;
  const double score = divergence_score(f);
  EXPECT_GT(score, 0.5);
  EXPECT_NEAR(score, 2.0 / mag, 0.1 * (2.0 / mag));
}

TEST(Divergence, ZeroFieldIsDegenerate) {
  PhasePortrait still;
  for (int k = 0; k < 9; ++k) still.points.push_back({0.1 * (k % 3), 0.1 * (k / 3)});
  // Replace with per-cell stationary two-point portraits.
  std::vector<PhasePortrait> ps;
  for (const auto& s : still.points) ps.push_back({{s, s}});
  EXPECT_THROW(divergence_score(empirical_field(ps, 3, 3)), DegenerateError);
}

TEST(Divergence, DecreasesWithSampleCount) {
  const double a = divergence_score(grid(sampled(rotation, 1000, 5)));
  const double b = divergence_score(grid(sampled(rotation, 10000, 5)));
  const double c = divergence_score(grid(sampled(rotation, 100000, 5)));
  EXPECT_GT(a, b);
  EXPECT_GT(b, c);
}

TEST(Divergence, NeedsInteriorCells) {
  EXPECT_THROW(divergence_score(grid(sampled(rotation, 100), 2)), InvalidArgument);
}

TEST(Fit, RotationRecoversQuadratic) {
  const auto f = grid(sampled(rotation, 50000));
  const auto fit = fit_info_hamiltonian(f);
  // Displacements are dt * V, so the fitted H carries the same factor.
  Mat truth(8, 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      truth(i, j) = 0.01 * 0.5 * (f.u_center(i) * f.u_center(i) + f.e_center(j) * f.e_center(j));
  const Mat a = fit.h.array() - fit.h.mean();
  const Mat b = truth.array() - truth.mean();
  EXPECT_LE((a - b).norm() / b.norm(), 0.1);
  EXPECT_LE(fit.relative, 0.1);
}

TEST(Fit, ZeroFieldIsConstant) {
  std::vector<PhasePortrait> ps;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const PhaseSample s{0.1 * i + 0.01, 0.1 * j + 0.01};
      ps.push_back({{s, s}});
    }
  const auto fit = fit_info_hamiltonian(empirical_field(ps, 3, 3));
  EXPECT_LE(fit.h.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fit, GradientFieldReportsLargeResidual) {
  const auto fit = fit_info_hamiltonian(grid(sampled(source, 20000)));
  EXPECT_GT(fit.relative, 0.5);
}

TEST(Fit, DisconnectedRegionRejected) {
  std::vector<PhasePortrait> ps{{{{0.0, 0.0}, {0.01, 0.0}}}, {{{1.0, 1.0}, {1.01, 1.0}}}};
  EXPECT_THROW(fit_info_hamiltonian(empirical_field(ps, 3, 3)), FitError);
}

TEST(Io, DistributionsAndCsv) {
  std::stringstream in("# two steps\n0.5 0.5\n\n1 0\n");
  const auto d = read_distributions(in);
  ASSERT_EQ(d.size(), 2u);
  const auto p = portrait(d);
  EXPECT_NEAR(p.points[1].e, std::log(2.0), 1e-15);

  std::stringstream bad("0.5 0.5\n0.5 0.6\n");
  try {
    read_distributions(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }

  std::ostringstream out;
  write_portraits_csv(out, {p});
  EXPECT_EQ(out.str(), "portrait,t,u,e\n0,0,0.6931471806,0\n0,1,0,0.6931471806\n");
}
