#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace exph;
using exph_fixtures::node_at;

TEST(Grid, ShapeStridesAndCoordinates) {
  const Grid g = Grid::make({4, 6, 8});
  EXPECT_EQ(g.nodes, 4 * 6 * 8);
  // Last axis fastest.
  EXPECT_EQ(g.strides[0], 48);
  EXPECT_EQ(g.strides[1], 8);
  EXPECT_EQ(g.strides[2], 1);
  EXPECT_NEAR(g.spacing[0], kTwoPi / 4.0, 1e-15);
  EXPECT_NEAR(g.cell_volume,
              (kTwoPi / 4.0) * (kTwoPi / 6.0) * (kTwoPi / 8.0), 1e-15);
  const Index node = node_at(g, 1, 2, 3);
  EXPECT_EQ(node, 1 * 48 + 2 * 8 + 3);
  Index multi[3];
  g.unflatten(node, multi);
  EXPECT_EQ(multi[0], 1);
  EXPECT_EQ(multi[1], 2);
  EXPECT_EQ(multi[2], 3);
  EXPECT_NEAR(g.coordinate(node, 1), 2.0 * kTwoPi / 6.0, 1e-15);
  EXPECT_EQ(g.node_name(node), "(1,2,3)");
}

TEST(Grid, PeriodicShiftWraps) {
  const Grid g = Grid::make({4, 6, 8});
  const Index origin = node_at(g, 0, 0, 0);
  EXPECT_EQ(g.shift(origin, 0, -1), node_at(g, 3, 0, 0));
  EXPECT_EQ(g.shift(origin, 2, 9), node_at(g, 0, 0, 1));
  EXPECT_EQ(g.shift(node_at(g, 3, 5, 7), 1, 1), node_at(g, 3, 0, 7));
  EXPECT_EQ(g.shift(origin, 0, -8), origin);
}

TEST(Grid, RejectsDegenerateExtents) {
  EXPECT_THROW(Grid::make({}), ConfigError);
  EXPECT_THROW(Grid::make({3, 8, 8}), ConfigError);
  EXPECT_THROW(Grid::make({8, 8, 2}), ConfigError);
}

TEST(Stencil, ExactTrigonometricSymbols) {
  for (int order : {2, 4, 6}) {
    const Grid g = Grid::make({24, 4, 4});
    const Stencil st = Stencil::make(order);
    for (Index k : {1, 2}) {
      std::vector<double> in(static_cast<size_t>(g.nodes));
      for (Index node = 0; node < g.nodes; ++node)
        in[node] = std::sin(static_cast<double>(k) * g.coordinate(node, 0));
      std::vector<double> out(in.size());
      axis_derivative(g, st, 0, in.data(), 1, out.data());
      const double sym = st.symbol(static_cast<double>(k) * g.spacing[0]);
      for (Index node = 0; node < g.nodes; ++node) {
        const double expect =
            static_cast<double>(k) * sym *
            std::cos(static_cast<double>(k) * g.coordinate(node, 0));
        EXPECT_NEAR(out[node], expect, 1e-12) << "order " << order;
      }
    }
  }
  // Higher order tracks the continuum symbol more closely.
  const double kh = 0.5;
  EXPECT_GT(std::abs(1.0 - Stencil::make(2).symbol(kh)),
            std::abs(1.0 - Stencil::make(4).symbol(kh)));
  EXPECT_GT(std::abs(1.0 - Stencil::make(4).symbol(kh)),
            std::abs(1.0 - Stencil::make(6).symbol(kh)));
  EXPECT_THROW(Stencil::make(3), ConfigError);
}

TEST(Stencil, LowPassAnnihilatesAlternatingMode) {
  const Grid g = Grid::make({8, 4, 4});
  std::vector<double> data(static_cast<size_t>(g.nodes));
  for (Index node = 0; node < g.nodes; ++node) {
    const Index ix = (node / g.strides[0]) % g.dims[0];
    data[node] = (ix % 2 == 0) ? 1.0 : -1.0;
  }
  std::vector<double> scratch;
  smooth_axis(g, 0, 1, data, scratch);
  for (Index node = 0; node < g.nodes; ++node)
    EXPECT_EQ(data[node], 0.0);
  // Constants are fixed points of the filter.
  std::fill(data.begin(), data.end(), 3.25);
  smooth_axis(g, 1, 1, data, scratch);
  for (Index node = 0; node < g.nodes; ++node)
    EXPECT_EQ(data[node], 3.25);
}

TEST(FramePresets, FlatIsCompletelyTrivial) {
  const FrameManifold M = build_framed_torus("flat", {8, 8, 8});
  EXPECT_EQ(M.m, 2);
  EXPECT_EQ(M.d, 1);
  for (Index node = 0; node < M.grid.nodes; ++node) {
    EXPECT_EQ(M.vol_weight[node], 1.0);
    for (int i = 0; i < M.m; ++i) EXPECT_EQ(M.zeta_fn(node, i), 0.0);
    for (int A = 0; A < 3; ++A)
      for (int B = 0; B < 3; ++B)
        for (int C = 0; C < 3; ++C) {
          EXPECT_EQ(M.structure_fn(node, A, B, C), 0.0);
          EXPECT_EQ(M.gamma_fn(node, A, B, C), 0.0);
        }
  }
}

TEST(FramePresets, StretchedConnectionValues) {
  PresetParams p;
  p.stretch_amplitude = 0.5;
  const FrameManifold M = build_framed_torus("stretched", {16, 4, 4}, 2, p);
  // x = 0: a = 1, a' = 0.5.
  const Index n0 = node_at(M.grid, 0, 0, 0);
  EXPECT_NEAR(M.structure_fn(n0, 0, 2, 2), 0.5, 1e-14);
  EXPECT_NEAR(M.structure_fn(n0, 2, 0, 2), -0.5, 1e-14);
  EXPECT_NEAR(M.gamma_fn(n0, 2, 2, 0), 0.5, 1e-14);
  EXPECT_NEAR(M.gamma_fn(n0, 2, 0, 2), -0.5, 1e-14);
  EXPECT_NEAR(M.gamma_fn(n0, 0, 2, 2), 0.0, 1e-14);
  EXPECT_NEAR(M.zeta_fn(n0, 0), 0.5, 1e-14);
  EXPECT_NEAR(M.zeta_fn(n0, 1), 0.0, 1e-14);
  EXPECT_NEAR(M.vol_weight[n0], 1.0, 1e-14);
  // x = pi/2: a = 1.5, a' = 0.
  const Index n4 = node_at(M.grid, 4, 0, 0);
  EXPECT_NEAR(M.structure_fn(n4, 0, 2, 2), 0.0, 1e-14);
  EXPECT_NEAR(M.zeta_fn(n4, 0), 0.0, 1e-14);
  EXPECT_NEAR(M.vol_weight[n4], 1.0 / 1.5, 1e-14);
  // Horizontal geodesic frame: Gamma_ii^A = 0 for horizontal i.
  for (Index node = 0; node < M.grid.nodes; ++node)
    for (int i = 0; i < 2; ++i)
      for (int A = 0; A < 3; ++A)
        EXPECT_NEAR(M.gamma_fn(node, i, i, A), 0.0, 1e-14);
}

TEST(FramePresets, TwistedConnectionValues) {
  PresetParams p;
  p.twist_lambda = 1.0;
  const FrameManifold M = build_framed_torus("twisted", {16, 4, 4}, 2, p);
  // x = pi/2: sin x = 1.
  const Index n4 = node_at(M.grid, 4, 0, 0);
  EXPECT_NEAR(M.structure_fn(n4, 0, 1, 2), -1.0, 1e-14);
  EXPECT_NEAR(M.structure_fn(n4, 1, 0, 2), 1.0, 1e-14);
  EXPECT_NEAR(M.gamma_fn(n4, 0, 1, 2), -0.5, 1e-14);
  EXPECT_NEAR(M.gamma_fn(n4, 1, 0, 2), 0.5, 1e-14);
  EXPECT_NEAR(M.gamma_fn(n4, 0, 2, 1), 0.5, 1e-14);
  for (Index node = 0; node < M.grid.nodes; ++node) {
    EXPECT_NEAR(M.vol_weight[node], 1.0, 1e-14);
    for (int i = 0; i < 2; ++i)
      EXPECT_NEAR(M.zeta_fn(node, i), 0.0, 1e-14);
  }
}

TEST(FramePresets, MetricCompatibleAndTorsionFree) {
  for (const std::string preset : {"flat", "stretched", "twisted"}) {
    const FrameManifold M = build_framed_torus(preset, {12, 4, 4});
    for (Index node = 0; node < M.grid.nodes; ++node) {
      for (int A = 0; A < 3; ++A)
        for (int B = 0; B < 3; ++B)
          for (int C = 0; C < 3; ++C) {
            EXPECT_NEAR(M.gamma_fn(node, A, B, C) + M.gamma_fn(node, A, C, B),
                        0.0, 1e-12)
                << preset;
            EXPECT_NEAR(M.gamma_fn(node, A, B, C) - M.gamma_fn(node, B, A, C),
                        M.structure_fn(node, A, B, C), 1e-12)
                << preset;
          }
    }
  }
}

namespace {

double twisted_structure_fd_error(Index nx) {
  PresetParams p;
  p.twist_lambda = 1.0;
  const FrameManifold ref = build_framed_torus("twisted", {nx, 4, 4}, 2, p);
  const FrameManifold M =
      build_custom_torus({nx, 4, 4}, 2, 1, ref.frame, 2);
  double err = 0.0;
  for (Index node = 0; node < M.grid.nodes; ++node) {
    const double x = M.grid.coordinate(node, 0);
    err = std::max(err,
                   std::abs(M.structure_fn(node, 0, 1, 2) - (-std::sin(x))));
  }
  return err;
}

}  // namespace

TEST(CustomFrame, StructureDifferencingConvergesAtSecondOrder) {
  const double e16 = twisted_structure_fd_error(16);
  const double e32 = twisted_structure_fd_error(32);
  const double e64 = twisted_structure_fd_error(64);
  EXPECT_GT(e16, e32);
  EXPECT_GT(e32, e64);
  const double r1 = e16 / e32;
  const double r2 = e32 / e64;
  EXPECT_GE(r1, 3.5);
  EXPECT_LE(r1, 4.5);
  EXPECT_GE(r2, 3.7);
  EXPECT_LE(r2, 4.3);
}

TEST(CustomFrame, ReproducesStretchedConnection) {
  PresetParams p;
  p.stretch_amplitude = 0.5;
  const FrameManifold ref = build_framed_torus("stretched", {32, 4, 4}, 2, p);
  const FrameManifold M = build_custom_torus({32, 4, 4}, 2, 1, ref.frame, 2);
  double gerr = 0.0, zerr = 0.0, werr = 0.0;
  for (Index node = 0; node < M.grid.nodes; ++node) {
    for (int A = 0; A < 3; ++A)
      for (int B = 0; B < 3; ++B)
        for (int C = 0; C < 3; ++C)
          gerr = std::max(gerr, std::abs(M.gamma_fn(node, A, B, C) -
                                         ref.gamma_fn(node, A, B, C)));
    zerr = std::max(zerr, std::abs(M.zeta_fn(node, 0) - ref.zeta_fn(node, 0)));
    werr = std::max(werr, std::abs(M.vol_weight[node] - ref.vol_weight[node]));
  }
  EXPECT_LE(gerr, 0.01);
  EXPECT_LE(zerr, 0.01);
  EXPECT_EQ(werr, 0.0);  // same coefficients, same determinant
}

TEST(CustomFrame, Guards) {
  const Grid g = Grid::make({8, 4, 4});
  std::vector<double> ok(static_cast<size_t>(g.nodes) * 9, 0.0);
  for (Index node = 0; node < g.nodes; ++node)
    for (int A = 0; A < 3; ++A) ok[(node * 3 + A) * 3 + A] = 1.0;
  EXPECT_NO_THROW(build_custom_torus({8, 4, 4}, 2, 1, ok, 2));
  EXPECT_THROW(build_custom_torus({8, 4, 4}, 2, 2, ok, 2), ConfigError);
  EXPECT_THROW(build_custom_torus({8, 4, 4}, 0, 3, ok, 2), ConfigError);
  EXPECT_THROW(build_custom_torus({8, 4, 4}, 2, 1,
                                  std::vector<double>(10, 1.0), 2),
               ConfigError);
  // A singular coefficient matrix trips the volume-weight guard.
  std::vector<double> degenerate(ok);
  for (Index node = 0; node < g.nodes; ++node)
    for (int c = 0; c < 3; ++c) degenerate[(node * 3 + 2) * 3 + c] = 0.0;
  try {
    build_custom_torus({8, 4, 4}, 2, 1, degenerate, 2);
    FAIL() << "degenerate frame accepted";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate frame"),
              std::string::npos);
  }
}

TEST(FramePresets, RejectsUnknownPresetAndBadDims) {
  EXPECT_THROW(build_framed_torus("moebius", {8, 8, 8}), ConfigError);
  EXPECT_THROW(build_framed_torus("flat", {8, 8}), ConfigError);
  EXPECT_THROW(build_framed_torus("flat", {8, 8, 3}), ConfigError);
}
