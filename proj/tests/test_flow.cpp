#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace exph;

TEST(Flow, ConstantMapConvergesImmediately) {
  const FrameManifold M = build_framed_torus("flat", {8, 8, 8});
  const TargetManifold t = TargetManifold::make("euclidean", 3);
  const MapField f = constant_map(M, t, {0.1, -0.2, 0.3});
  const FlowResult r = minimize_energy(f);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.stalled);
  EXPECT_EQ(r.iterations, 0);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].iteration, 0);
  EXPECT_EQ(r.trace[0].step, 0.0);
  EXPECT_EQ(r.final_residual, 0.0);
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  EXPECT_NEAR(r.final_energy, vol, 1e-13 * vol);
}

TEST(Flow, ZeroResidualSatisfiesAnyTolerance) {
  // A constant map has exactly zero tension, so it converges even against
  // residual_tol = 0: the comparison is inclusive.
  const FrameManifold M = build_framed_torus("flat", {8, 4, 4});
  const TargetManifold t = TargetManifold::make("euclidean", 2);
  const MapField f = constant_map(M, t, {0.4, 0.1});
  FlowOptions opt;
  opt.residual_tol = 0.0;
  const FlowResult r = minimize_energy(f, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.stalled);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.final_residual, 0.0);
}

TEST(Flow, StallsWhenStepFloorExceedsTheTrialCap) {
  // The first trial step is capped at 0.5 / max|d| to keep single-node moves
  // modest. A step floor above that cap leaves no admissible trial, so the
  // search must report a stall at iteration zero, deterministically.
  const FrameManifold M = build_framed_torus("flat", {8, 4, 4});
  const TargetManifold t = TargetManifold::make("euclidean", 1);
  MapField f = constant_map(M, t, {0.0});
  for (Index node = 0; node < M.grid.nodes; ++node)
    f.values[node] = 3.0 * std::sin(M.grid.coordinate(node, 0));
  FlowOptions opt;
  opt.step_min = 0.4;
  const FlowResult r = minimize_energy(f, opt);
  EXPECT_TRUE(r.stalled);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].step, 0.0);
  EXPECT_GT(r.final_residual, 0.0);
}

TEST(Flow, IterationBudgetExhausts) {
  const FrameManifold M = build_framed_torus("flat", {12, 4, 4});
  const TargetManifold t = TargetManifold::make("sphere", 2);
  const MapField f = perturbed_phase_map(M, t, 0.1);
  FlowOptions opt;
  opt.residual_tol = 1e-14;
  opt.max_iterations = 3;
  const FlowResult r = minimize_energy(f, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.stalled);
  EXPECT_EQ(r.iterations, 3);
  ASSERT_EQ(r.trace.size(), 4u);
  EXPECT_EQ(r.trace.back().iteration, 3);
  EXPECT_EQ(r.trace.back().step, 0.0);
}

TEST(Flow, PerturbedPhaseDescendsToTheEigenmap) {
  const FrameManifold M = build_framed_torus("flat", {16, 4, 4});
  const TargetManifold t = TargetManifold::make("sphere", 2);
  const MapField f = perturbed_phase_map(M, t, 0.1);
  const FlowResult r = minimize_energy(f);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.final_residual, 1e-6);
  // Energies along the accepted trace never increase.
  for (size_t k = 1; k < r.trace.size(); ++k)
    EXPECT_LE(r.trace[k].energy, r.trace[k - 1].energy + 1e-12);
  // The limit is the phase eigenmap: its energy on this grid is
  // exp(s^2/2) (2 pi)^3 with s the stencil symbol at the grid spacing.
  const double s = M.stencil.symbol(M.grid.spacing[0]);
  const double expect =
      std::exp(0.5 * s * s) * kTwoPi * kTwoPi * kTwoPi;
  EXPECT_NEAR(r.final_energy, expect, 1e-4 * expect);
  // The end map is genuinely critical for the discrete functional.
  const MapGeometry geo = map_geometry(r.final_map);
  const std::vector<double> tau = tension_field(r.final_map);
  EXPECT_TRUE(is_critical(r.final_map, geo, tau, 1e-5));
}

TEST(Flow, RawDirectionAlsoDescends) {
  // Without the low-pass filter the line search still makes monotone
  // progress in energy; pointwise residual decay is not promised (the
  // filter exists because raw descent admits grid-frequency contamination).
  const FrameManifold M = build_framed_torus("flat", {12, 4, 4});
  const TargetManifold t = TargetManifold::make("sphere", 2);
  const MapField f = perturbed_phase_map(M, t, 0.15);
  FlowOptions opt;
  opt.smooth_direction = false;
  opt.max_iterations = 25;
  opt.residual_tol = 1e-14;
  const FlowResult r = minimize_energy(f, opt);
  EXPECT_GT(r.iterations, 0);
  EXPECT_LT(r.final_energy, exponential_energy(f));
  for (size_t k = 1; k < r.trace.size(); ++k)
    EXPECT_LE(r.trace[k].energy, r.trace[k - 1].energy + 1e-12);
}

TEST(Flow, HyperbolicDescentStaysInTheBall) {
  const FrameManifold M = build_framed_torus("twisted", {8, 8, 8});
  const TargetManifold t = TargetManifold::make("hyperbolic", 3);
  Rng rng(3);
  const MapField f = random_smooth_map(M, t, rng, 0.3);
  FlowOptions opt;
  opt.max_iterations = 60;
  opt.residual_tol = 1e-10;
  const FlowResult r = minimize_energy(f, opt);
  EXPECT_NO_THROW(validate_map(r.final_map));
  EXPECT_LE(r.final_energy, exponential_energy(f) + 1e-12);
  // Tension decreased over the run.
  EXPECT_LT(r.final_residual, r.trace.front().residual);
}
