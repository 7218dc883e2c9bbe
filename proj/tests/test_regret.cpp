#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "obb/regret.hpp"
#include "oracles.hpp"

namespace {

using obb::FeasibleSet;
using obb::LossSequence;
using obb::Matrix;
using obb::QuadraticLoss;
using obb::StepPolicy;
using obb::TrajectoryRecord;
using obb::Vector;

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

LossSequence identity_at(Vector c, int horizon = 1) {
  const auto n = c.size();
  return LossSequence(obb::Stationary{QuadraticLoss(Matrix::Identity(n, n), std::move(c))}, horizon);
}

/// Trajectory assembled by hand; losses are left at zero unless given.
TrajectoryRecord make_traj(std::vector<Vector> xs, std::vector<Vector> gs, std::vector<double> alphas,
                           std::vector<double> losses = {}) {
  TrajectoryRecord t;
  const auto n = xs.size();
  t.meta.dimension = xs.front().size();
  t.meta.horizon = static_cast<int>(n);
  t.iterates = std::move(xs);
  t.gradients = std::move(gs);
  t.alphas = std::move(alphas);
  t.losses = losses.empty() ? std::vector<double>(n, 0.0) : std::move(losses);
  t.degenerate.assign(n, false);
  t.projected.assign(n, false);
  return t;
}

// --- hindsight minimizer -----------------------------------------------------

TEST(Hindsight, InteriorCenterIsMinimizer) {
  const Vector c = v2(0.3, -0.2);
  const Vector x = obb::hindsight_minimizer(identity_at(c, 5), FeasibleSet::ball(Vector::Zero(2), 1.0));
  EXPECT_NEAR((x - c).norm(), 0.0, 1e-15);
}

TEST(Hindsight, MeanOfCentersUnderEqualCurvature) {
  const LossSequence seq(obb::Scripted{{QuadraticLoss(Matrix::Identity(2, 2), v2(1, 0)),
                                        QuadraticLoss(Matrix::Identity(2, 2), v2(3, 0))}},
                         2);
  const Vector x = obb::hindsight_minimizer(seq, FeasibleSet::ball(Vector::Zero(2), 10.0));
  EXPECT_NEAR((x - v2(2, 0)).norm(), 0.0, 1e-14);
}

TEST(Hindsight, ExteriorMinimizerIsProjected) {
  const auto set = FeasibleSet::ball(Vector::Zero(2), 1.0);
  const Vector x = obb::hindsight_minimizer(identity_at(v2(2, 0), 3), set);
  const Vector kkt = obb::oracle::ball_constrained_minimizer(3.0 * Matrix::Identity(2, 2), v2(6, 0), Vector::Zero(2), 1.0);
  EXPECT_NEAR((x - v2(1, 0)).norm(), 0.0, 1e-10);
  EXPECT_NEAR((kkt - v2(1, 0)).norm(), 0.0, 1e-12);
}

TEST(Hindsight, AgreesWithIndependentRoutes) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    obb::Rng rng(seed);
    const int n = 2 + static_cast<int>(seed % 4);
    const bool exterior = seed % 2 == 0;
    const double spread = exterior ? 6.0 : 0.2;
    const LossSequence seq(obb::RandomRotation{n, 1.0, 10.0, -spread, spread}, 20, seed);
    const auto q = obb::summed_quadratic(seq, 20);
    const bool use_ball = seed % 4 < 2;
    const FeasibleSet set = use_ball ? FeasibleSet::ball(Vector::Zero(n), 1.0)
                                     : FeasibleSet::box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0));
    const Vector x = obb::hindsight_minimizer(q, set);

    const Vector pgd = obb::projected_gradient_oracle(q, set, Vector::Constant(n, 0.5));
    EXPECT_LT((x - pgd).norm(), 1e-8) << "seed " << seed;
    const Vector exact = use_ball ? obb::oracle::ball_constrained_minimizer(q.curvature, q.linear, Vector::Zero(n), 1.0)
                                  : obb::oracle::box_constrained_minimizer(q.curvature, q.linear, Vector::Constant(n, -1.0),
                                                                          Vector::Constant(n, 1.0));
    EXPECT_LT((x - exact).norm(), 1e-8) << "seed " << seed;
  }
}

TEST(Hindsight, SingularCurvatureUsesOracle) {
  // A = diag(1, 0): any x2 is optimal; result must be feasible and optimal in x1.
  const LossSequence seq(obb::Stationary{QuadraticLoss(obb::Vector(v2(1, 0)).asDiagonal(), v2(0.5, 7.0))}, 4);
  const auto set = FeasibleSet::box(v2(-1, -1), v2(1, 1));
  const Vector x = obb::hindsight_minimizer(seq, set);
  EXPECT_NEAR(x[0], 0.5, 1e-10);
  EXPECT_TRUE(obb::contains(set, x, 1e-12));
}

TEST(Hindsight, OracleIterationCap) {
  const auto q = obb::summed_quadratic(LossSequence(obb::RandomRotation{3, 1.0, 1000.0, 5.0, 6.0}, 3, 1), 3);
  EXPECT_THROW(obb::projected_gradient_oracle(q, FeasibleSet::ball(Vector::Zero(3), 1.0), Vector::Zero(3), {1e-12, 3}),
               obb::NumericalFailure);
}

// --- regret curves -----------------------------------------------------------

TEST(Regret, StaticRegretExamples) {
  const auto one = make_traj({v2(1, 0)}, {v2(1, 0)}, {0.1}, {0.5});
  EXPECT_EQ(obb::static_regret(one, identity_at(v2(0, 0)), v2(0, 0)), std::vector<double>{0.5});

  const LossSequence seq = identity_at(v1(0), 2);
  const auto two = make_traj({v1(1), v1(0)}, {v1(1), v1(0)}, {1, 1}, {0.5, 0.0});
  EXPECT_EQ(obb::static_regret(two, seq, v1(0)), (std::vector<double>{0.5, 0.5}));
}

TEST(Regret, PlayingTheComparatorGivesZeroRegret) {
  obb::Rng rng(3);
  const LossSequence seq(obb::RandomRotation{3, 1.0, 5.0, -1.0, 1.0}, 50, 3);
  const auto set = FeasibleSet::ball(Vector::Zero(3), 2.0);
  const Vector xstar = obb::hindsight_minimizer(seq, set);
  TrajectoryRecord t;
  for (int k = 1; k <= 50; ++k) {
    const auto f = seq.generate(k);
    t.iterates.push_back(xstar);
    t.losses.push_back(obb::evaluate(f, xstar));
    t.gradients.push_back(obb::gradient(f, xstar));
    t.alphas.push_back(0.1);
  }
  for (double r : obb::static_regret(t, seq, xstar)) EXPECT_EQ(r, 0.0);
  for (double r : obb::linearized_regret(t, xstar)) EXPECT_EQ(r, 0.0);
}

TEST(Regret, LinearizedRegretExample) {
  const auto t = make_traj({v1(1)}, {v1(1)}, {0.1}, {0.5});
  EXPECT_EQ(obb::linearized_regret(t, v1(0)), std::vector<double>{1.0});
}

TEST(Regret, LinearizedDominatesStatic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 3;
    const LossSequence seq(obb::RandomRotation{n, 0.5, 8.0, -2.0, 2.0}, 400, seed);
    const auto set = FeasibleSet::box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0));
    for (auto policy : {StepPolicy::bb1(), StepPolicy::bb2(), StepPolicy::diminishing(0.2)}) {
      const auto traj = obb::run(seq, policy, set, Vector::Zero(n), 400);
      const Vector xstar = obb::hindsight_minimizer(seq, set);
      const auto r = obb::static_regret(traj, seq, xstar);
      const auto lin = obb::linearized_regret(traj, xstar);
      for (std::size_t k = 0; k < r.size(); ++k) ASSERT_GE(lin[k], r[k] - 1e-9) << k;
    }
  }
}

TEST(Regret, PrefixVariantMatchesAtHorizon) {
  const LossSequence seq(obb::RandomRotation{2, 1.0, 4.0, -3.0, 3.0}, 60, 5);
  const auto set = FeasibleSet::ball(Vector::Zero(2), 1.0);
  auto policy = StepPolicy::bb2();
  const auto traj = obb::run(seq, policy, set, Vector::Zero(2), 60);
  const auto full = obb::static_regret(traj, seq, obb::hindsight_minimizer(seq, set));
  const auto prefix = obb::prefix_static_regret(traj, seq, set);
  EXPECT_NEAR(prefix.back(), full.back(), 1e-9 * std::max(1.0, std::abs(full.back())));
  // Each prefix comparator is optimal for its prefix, so it can only raise regret.
  for (std::size_t k = 0; k < full.size(); ++k) {
    const Vector xk = obb::hindsight_minimizer(seq, set, static_cast<int>(k + 1));
    EXPECT_LE(std::abs(prefix[k] - obb::static_regret(traj, seq, xk)[k]), 1e-9);
  }
}

// --- bounds ------------------------------------------------------------------

TEST(Bounds, ZinkevichExamples) {
  EXPECT_DOUBLE_EQ(obb::zinkevich_bound(2.0, 1.0, std::vector<double>{1, 1}), 3.0);
  EXPECT_DOUBLE_EQ(obb::zinkevich_bound(1.0, 1.0, std::vector<double>{0.5}), 1.25);
  EXPECT_DOUBLE_EQ(obb::zinkevich_bound(3.0, 0.0, std::vector<double>{0.7, 0.2}), 9.0 / 0.4);
  EXPECT_THROW(obb::zinkevich_bound(1.0, 1.0, std::vector<double>{1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(obb::zinkevich_bound(1.0, 1.0, std::vector<double>{}), std::invalid_argument);
}

TEST(Bounds, ZinkevichHoldsForDiminishingSteps) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 3;
    const LossSequence seq(obb::RandomRotation{n, 1.0, 5.0, -2.0, 2.0}, 300, seed);
    const auto set = FeasibleSet::ball(Vector::Zero(n), 1.5);
    const double D = obb::diameter(set), G = obb::max_gradient_norm(seq, set);
    auto policy = StepPolicy::diminishing(D / G);
    const auto traj = obb::run(seq, policy, set, Vector::Zero(n), 300);
    const auto r = obb::static_regret(traj, seq, obb::hindsight_minimizer(seq, set));
    EXPECT_LE(r.back(), obb::zinkevich_bound(D, G, traj.alphas) + 1e-6);
  }
}

TEST(Bounds, Bb1DiagnosticsHandExample) {
  // f = x^2/2, constant step 0.5: plays 1, 0.5, 0.25; s = (-0.5, -0.25), y = s.
  const auto t = make_traj({v1(1), v1(0.5), v1(0.25)}, {v1(1), v1(0.5), v1(0.25)}, {0.5, 0.5, 0.5});
  const double L = 1.0;
  const auto d = obb::bb1_bound_diagnostics(t, L);
  EXPECT_DOUBLE_EQ(d.b, 0.5625);
  EXPECT_DOUBLE_EQ(d.c, 0.625);
  EXPECT_DOUBLE_EQ(d.d, 0.3125);
  EXPECT_DOUBLE_EQ(d.e, L * 0.3125);
  EXPECT_DOUBLE_EQ(d.P, 1.5);
  // sum over pairs of |x(j+1)|^2 + |x(j)|^2 = (0.25 + 1) + (0.0625 + 0.25)
  EXPECT_DOUBLE_EQ(d.Z, 0.625 / 1.5625);
  EXPECT_DOUBLE_EQ(d.psi, d.Z);
  EXPECT_DOUBLE_EQ(d.Q, 0.5625 / 0.3125);
  // (e - d)/(c - b) = 0 <= d/b
  EXPECT_EQ(d.condition, obb::Condition::Holds);
  EXPECT_FALSE(d.flag_P);
}

TEST(Bounds, Bb1DiagnosticsZeroDisplacement) {
  const auto t = make_traj({v2(1, 1), v2(1, 1), v2(1, 1)}, {v2(0, 0), v2(0, 0), v2(0, 0)}, {0.1, 0.1, 0.1});
  const auto d = obb::bb1_bound_diagnostics(t, 2.0);
  EXPECT_EQ(d.b, 0.0);
  EXPECT_EQ(d.c, 0.0);
  EXPECT_EQ(d.condition, obb::Condition::Indeterminate);
  EXPECT_THROW(obb::bb1_bound_diagnostics(make_traj({v1(0)}, {v1(0)}, {1}), 1.0), std::invalid_argument);
}

TEST(Bounds, Bb1DiagnosticsEqualDisplacementsAreIndeterminate) {
  // |s1| = |s2| makes c = b.
  const auto t = make_traj({v1(0), v1(1), v1(2)}, {v1(0), v1(1), v1(2)}, {1, 1, 1});
  EXPECT_EQ(obb::bb1_bound_diagnostics(t, 1.0).condition, obb::Condition::Indeterminate);
}

TEST(Bounds, CurvatureSumBoundedByLipschitzOnStationaryRuns) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    obb::Rng rng(seed);
    const int n = 4;
    const LossSequence seq(obb::Stationary{obb::random_quadratic(n, 0.5, 12.0, -3.0, 3.0, rng)}, 200, seed);
    const auto set = FeasibleSet::ball(Vector::Zero(n), 2.0);
    for (auto policy : {StepPolicy::bb1(), StepPolicy::bb2(), StepPolicy::alternating(), StepPolicy::constant(0.05)}) {
      const auto traj = obb::run(seq, policy, set, Vector::Constant(n, 1.0), 200);
      const auto d = obb::bb1_bound_diagnostics(traj, obb::sequence_lipschitz(seq));
      EXPECT_LE(d.d, d.e + 1e-9);
      EXPECT_LE(d.b, d.c + 1e-15);
    }
  }
}

TEST(Bounds, Bb2ZetaHandExamples) {
  // Four unit pairs: (sqrt 4)^3 = 8.
  std::vector<Vector> xs{v2(0, 0)}, gs{v2(0, 0)};
  for (int k = 1; k <= 4; ++k) {
    xs.push_back(xs.back() + v2(1, 0));
    gs.push_back(gs.back() + v2(0, 1));
  }
  const auto t = make_traj(xs, gs, std::vector<double>(5, 0.5));
  const auto d = obb::bb2_bound_diagnostics(t, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(d.zeta, 8.0);
  EXPECT_DOUBLE_EQ(d.bound, 4.0 / 1.0 + 0.5 * 8.0);

  const auto single = make_traj({v2(0, 0), v2(1, 0)}, {v2(0, 0), v2(2, 0)}, {0.1, 0.5});
  const auto s = obb::bb2_bound_diagnostics(single, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(s.zeta, 0.5);
  EXPECT_DOUBLE_EQ(s.bb2_sum, 0.5);
}

TEST(Bounds, Bb2ZeroGradientChangeIsExcluded) {
  const auto t = make_traj({v1(0), v1(1), v1(2)}, {v1(0), v1(0), v1(2)}, {0.1, 0.1, 0.1});
  const auto d = obb::bb2_bound_diagnostics(t, 1.0, 1.0);
  EXPECT_EQ(d.excluded_rounds, 1);
  EXPECT_DOUBLE_EQ(d.zeta, 1.0 * 2.0 * 0.25);
}

TEST(Bounds, ZetaDominatesBb2StepSum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 3;
    const LossSequence seq(obb::RandomRotation{n, 1.0, 6.0, -1.0, 1.0}, 200, seed);
    const auto set = FeasibleSet::ball(Vector::Zero(n), 3.0);
    auto policy = StepPolicy::bb2();
    const auto traj = obb::run(seq, policy, set, Vector::Constant(n, 0.5), 200);
    const auto d = obb::bb2_bound_diagnostics(traj, obb::diameter(set), obb::max_gradient_norm(seq, set));
    EXPECT_LE(d.bb2_sum, d.zeta + 1e-9);
    if (traj.degenerate_rounds() == 0) {
      EXPECT_LE(d.step_sum, d.zeta + 1e-9);
    }
  }
}

// --- Sedrakyan -----------------------------------------------------------------

TEST(Sedrakyan, Examples) {
  const std::vector<double> ones{1, 1};
  EXPECT_TRUE(obb::sedrakyan_check(ones, ones));
  EXPECT_DOUBLE_EQ(obb::sedrakyan_gap(ones, ones), 0.0);
  const std::vector<double> a{1, 2}, b{2, 1};
  EXPECT_TRUE(obb::sedrakyan_check(a, b));
  EXPECT_DOUBLE_EQ(obb::sedrakyan_gap(a, b), 4.5 - 3.0);
  const std::vector<double> bad{1, 0};
  EXPECT_THROW(obb::sedrakyan_check(a, bad), std::invalid_argument);
  EXPECT_THROW(obb::sedrakyan_check(a, std::vector<double>{1}), std::invalid_argument);
}

TEST(Sedrakyan, FuzzedPositiveInputs) {
  obb::Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.bits() % 99;
    std::vector<double> a(n), b(n);
    const bool proportional = trial % 3 == 0;
    const double ratio = rng.uniform(0.1, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(0.01, 10.0);
      b[i] = proportional ? a[i] / ratio : rng.uniform(0.01, 10.0);
    }
    ASSERT_TRUE(obb::sedrakyan_check(a, b));
    if (proportional) {
      EXPECT_NEAR(obb::sedrakyan_gap(a, b), 0.0, 1e-12 * obb::sedrakyan_gap(a, std::vector<double>(n, 1.0)) + 1e-10);
    } else {
      EXPECT_GT(obb::sedrakyan_gap(a, b), 0.0);
    }
  }
}

// --- sublinearity ---------------------------------------------------------------

TEST(Slope, Examples) {
  std::vector<double> linear(1000), root(1000), flat(1000, 3.0);
  for (int k = 1; k <= 1000; ++k) {
    linear[static_cast<std::size_t>(k - 1)] = k;
    root[static_cast<std::size_t>(k - 1)] = std::sqrt(static_cast<double>(k));
  }
  EXPECT_NEAR(obb::sublinearity_slope(linear, 1, 1000).slope, 1.0, 1e-12);
  EXPECT_NEAR(obb::sublinearity_slope(root, 10, 1000).slope, 0.5, 1e-12);
  EXPECT_EQ(obb::sublinearity_slope(flat, 1, 1000).slope, 0.0);
}

TEST(Slope, SkipsNonPositiveAndNeedsTenPoints) {
  std::vector<double> r(30, -1.0);
  for (int k = 21; k <= 30; ++k) r[static_cast<std::size_t>(k - 1)] = k;
  const auto fit = obb::sublinearity_slope(r, 1, 30);
  EXPECT_EQ(fit.used, 10);
  EXPECT_EQ(fit.excluded, 20);
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);
  r[29] = 0.0;
  EXPECT_THROW(obb::sublinearity_slope(r, 1, 30), obb::InsufficientData);
  EXPECT_THROW(obb::sublinearity_slope(r, 0, 30), std::invalid_argument);
}

// --- report ---------------------------------------------------------------------

TEST(Report, InvariantsAndCsv) {
  const int n = 3;
  const LossSequence seq(obb::RandomRotation{n, 1.0, 5.0, -1.0, 1.0}, 300, 12);
  const auto set = FeasibleSet::ball(Vector::Zero(n), 2.0);
  auto policy = StepPolicy::bb1();
  const auto traj = obb::run(seq, policy, set, Vector::Zero(n), 300);
  const auto rep = obb::make_report(traj, seq, set);

  double best = 0.0;
  for (int k = 1; k <= 300; ++k) best += obb::evaluate(seq.generate(k), rep.xstar);
  const double expected = obb::aggregate_loss(traj) - best;
  EXPECT_NEAR(rep.final_regret(), expected, 1e-9 * std::max(1.0, std::abs(expected)));
  for (int k = 0; k < rep.rounds(); ++k) {
    EXPECT_GE(rep.linearized[static_cast<std::size_t>(k)], rep.regret[static_cast<std::size_t>(k)] - 1e-9);
  }
  EXPECT_DOUBLE_EQ(rep.diameter, 4.0);
  EXPECT_DOUBLE_EQ(rep.lipschitz, obb::sequence_lipschitz(seq));

  const std::string csv = obb::regret_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,regret,avg_regret,lin_regret");
  EXPECT_NE(csv.find("\n\nR_K,avg_R_K,zinkevich_bound,psi,zeta,cond_t1,flag_P,slope\n"), std::string::npos);
}

}  // namespace
