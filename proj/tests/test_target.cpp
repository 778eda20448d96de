#include <gtest/gtest.h>

#include <cmath>

#include <exph/exph.hpp>

using namespace exph;

TEST(TargetMake, GuardsAndShapes) {
  EXPECT_THROW(TargetManifold::make("sphere", 0), ConfigError);
  EXPECT_THROW(TargetManifold::make("sphere", 16), ConfigError);
  EXPECT_THROW(TargetManifold::make("torus", 2), ConfigError);
  const TargetManifold s = TargetManifold::make("sphere", 5);
  EXPECT_EQ(s.ambient(), 6);
  EXPECT_FALSE(s.flat_or_negative());
  EXPECT_EQ(s.name(), "sphere");
  const TargetManifold e = TargetManifold::make("euclidean", 3);
  EXPECT_EQ(e.ambient(), 3);
  EXPECT_TRUE(e.flat_or_negative());
  const TargetManifold h = TargetManifold::make("hyperbolic", 4);
  EXPECT_EQ(h.ambient(), 4);
  EXPECT_TRUE(h.flat_or_negative());
  EXPECT_EQ(h.name(), "hyperbolic");
}

TEST(TargetPoints, SphereNormWindow) {
  const TargetManifold s = TargetManifold::make("sphere", 2);
  double ok[3] = {1.0 + 5e-11, 0.0, 0.0};
  EXPECT_NO_THROW(check_point(s, ok, "here"));
  double bad[3] = {1.0 + 2e-10, 0.0, 0.0};
  EXPECT_THROW(check_point(s, bad, "here"), NumericError);
  double nan_pt[3] = {std::nan(""), 0.0, 0.0};
  EXPECT_THROW(check_point(s, nan_pt, "here"), NumericError);
}

TEST(TargetPoints, BallRadiusGuard) {
  const TargetManifold h = TargetManifold::make("hyperbolic", 2);
  double ok[2] = {0.5, 0.3};
  EXPECT_NO_THROW(check_point(h, ok, "here"));
  double rim[2] = {1.0 - 1e-7, 0.0};
  EXPECT_THROW(check_point(h, rim, "here"), NumericError);
}

TEST(ProjectTangent, SphereOrthogonalAndIdempotent) {
  const TargetManifold s = TargetManifold::make("sphere", 2);
  const double x[3] = {0.6, 0.8, 0.0};
  const double w[3] = {1.0, -2.0, 3.0};
  double p[3], pp[3];
  project_tangent(s, x, w, p);
  EXPECT_NEAR(dot(p, x, 3), 0.0, 1e-14);
  project_tangent(s, x, p, pp);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(pp[c], p[c], 1e-15);
  // Coordinate targets: the identity.
  const TargetManifold e = TargetManifold::make("euclidean", 3);
  project_tangent(e, x, w, p);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(p[c], w[c]);
}

TEST(Retract, SphereGreatCircleExactly) {
  const TargetManifold s = TargetManifold::make("sphere", 2);
  const double x[3] = {1.0, 0.0, 0.0};
  const double v[3] = {0.0, 2.0, 0.0};
  double out[3];
  retract(s, x, v, kTwoPi / 16.0, out);  // angle = pi/4
  EXPECT_NEAR(out[0], std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(out[1], std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(out[2], 0.0, 1e-14);
  EXPECT_NEAR(norm2(out, 3), 1.0, 1e-14);
  // Angle traveled is t * |v|.
  retract(s, x, v, 0.37, out);
  EXPECT_NEAR(std::acos(dot(out, x, 3)), 0.37 * 2.0, 1e-12);
  // Zero step and zero velocity return the base point unchanged.
  retract(s, x, v, 0.0, out);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out[c], x[c]);
  const double zero[3] = {0.0, 0.0, 0.0};
  retract(s, x, zero, 0.5, out);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out[c], x[c]);
}

TEST(Retract, BallFromOriginMatchesUnitSpeedForm) {
  const TargetManifold h = TargetManifold::make("hyperbolic", 2);
  const double x[2] = {0.0, 0.0};
  const double v[2] = {0.3, 0.4};  // |v| = 0.5
  double out[2];
  retract(h, x, v, 1.0, out);
  // From the center the geodesic reaches radius tanh(t |v|) (lambda(0) = 2).
  const double r = std::tanh(0.5);
  EXPECT_NEAR(out[0], r * 0.6, 1e-14);
  EXPECT_NEAR(out[1], r * 0.8, 1e-14);
}

TEST(Retract, BallInitialVelocityIsTheTangent) {
  const TargetManifold h = TargetManifold::make("hyperbolic", 3);
  const double x[3] = {0.2, -0.1, 0.35};
  const double v[3] = {0.7, 0.4, -0.2};
  const double t = 1e-5;
  double plus[3], minus[3];
  retract(h, x, v, t, plus);
  retract(h, x, v, -t, minus);
  for (int c = 0; c < 3; ++c)
    EXPECT_NEAR((plus[c] - minus[c]) / (2.0 * t), v[c], 1e-8);
}

TEST(Retract, BallGuardStopsModelExit) {
  const TargetManifold h = TargetManifold::make("hyperbolic", 2);
  const double x[2] = {0.99, 0.0};
  const double v[2] = {50.0, 0.0};
  double out[2];
  EXPECT_THROW(retract(h, x, v, 1.0, out), NumericError);
}

TEST(Metric, ConformalFactorAndDot) {
  const TargetManifold h = TargetManifold::make("hyperbolic", 2);
  const double origin[2] = {0.0, 0.0};
  EXPECT_NEAR(ball_lambda(origin, 2), 2.0, 1e-15);
  const double u[2] = {1.0, 2.0};
  const double v[2] = {-1.0, 1.0};
  EXPECT_NEAR(metric_dot(h, origin, u, v), 4.0 * 1.0, 1e-14);
  const double x[2] = {0.5, 0.0};
  const double lam = 2.0 / 0.75;
  EXPECT_NEAR(metric_dot(h, x, u, u), lam * lam * 5.0, 1e-12);
  const TargetManifold e = TargetManifold::make("euclidean", 2);
  EXPECT_NEAR(metric_dot(e, x, u, v), 1.0, 1e-15);
}

TEST(Curvature, SphereFlatAndHyperbolicValues) {
  const double x[3] = {1.0, 0.0, 0.0};
  const double X[3] = {0.0, 1.0, 0.0};
  const double Y[3] = {0.0, 0.0, 1.0};
  double out[3];
  const TargetManifold s = TargetManifold::make("sphere", 2);
  curvature_operator(s, x, X, Y, Y, out);  // <Y,Y>X - <X,Y>Y = X
  EXPECT_NEAR(out[0], 0.0, 1e-15);
  EXPECT_NEAR(out[1], 1.0, 1e-15);
  EXPECT_NEAR(out[2], 0.0, 1e-15);
  const TargetManifold e = TargetManifold::make("euclidean", 3);
  curvature_operator(e, x, X, Y, Y, out);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out[c], 0.0);
}

TEST(Curvature, ConstantSectionalCurvatures) {
  // K(X,Y) = <R(X,Y)Y,X>_h / (|X|_h^2 |Y|_h^2 - <X,Y>_h^2) is +1 on the
  // sphere and -1 on the ball, at any point and for any independent pair.
  Rng rng(99);
  {
    const TargetManifold s = TargetManifold::make("sphere", 3);
    double x[4] = {0.5, -0.5, 0.5, 0.5};  // unit
    double X[4], Y[4], raw[4], out[4];
    for (double& c : raw) c = rng.normal();
    project_tangent(s, x, raw, X);
    for (double& c : raw) c = rng.normal();
    project_tangent(s, x, raw, Y);
    curvature_operator(s, x, X, Y, Y, out);
    const double num = metric_dot(s, x, out, X);
    const double den = metric_dot(s, x, X, X) * metric_dot(s, x, Y, Y) -
                       metric_dot(s, x, X, Y) * metric_dot(s, x, X, Y);
    EXPECT_NEAR(num / den, 1.0, 1e-12);
  }
  {
    const TargetManifold h = TargetManifold::make("hyperbolic", 3);
    double x[3] = {0.3, -0.2, 0.4};
    double X[3], Y[3], out[3];
    for (double& c : X) c = rng.normal();
    for (double& c : Y) c = rng.normal();
    curvature_operator(h, x, X, Y, Y, out);
    const double num = metric_dot(h, x, out, X);
    const double den = metric_dot(h, x, X, X) * metric_dot(h, x, Y, Y) -
                       metric_dot(h, x, X, Y) * metric_dot(h, x, X, Y);
    EXPECT_NEAR(num / den, -1.0, 1e-12);
  }
}

TEST(ShapeOperator, NormalScalingAndGuards) {
  const TargetManifold s = TargetManifold::make("sphere", 2);
  const double x[3] = {1.0, 0.0, 0.0};
  const double W[3] = {2.0, 0.0, 0.0};  // purely normal
  const double X[3] = {0.0, 3.0, 0.0};
  double out[3];
  shape_operator(s, x, W, X, out);
  EXPECT_NEAR(out[0], 0.0, 1e-15);
  EXPECT_NEAR(out[1], -6.0, 1e-15);
  EXPECT_NEAR(out[2], 0.0, 1e-15);
  const double skew[3] = {2.0, 1e-6, 0.0};  // tangential contamination
  EXPECT_THROW(shape_operator(s, x, skew, X, out), NumericError);
  const TargetManifold e = TargetManifold::make("euclidean", 3);
  EXPECT_THROW(shape_operator(e, x, W, X, out), ConfigError);
}

TEST(Christoffel, SymmetricInItsArguments) {
  Rng rng(7);
  const int amb = 3;
  double x[3] = {0.2, 0.4, -0.3};
  double u[3], v[3], a[3], b[3];
  for (int c = 0; c < amb; ++c) {
    u[c] = rng.normal();
    v[c] = rng.normal();
  }
  ball_christoffel(x, amb, u, v, a);
  ball_christoffel(x, amb, v, u, b);
  for (int c = 0; c < amb; ++c) EXPECT_NEAR(a[c], b[c], 1e-15);
}

TEST(Christoffel, DifferentiatesTheConformalMetric) {
  // Compatibility: d/dt g(u,v) along x + t w equals
  // g(Gamma(w,u), v) + g(u, Gamma(w,v)) for constant u, v.
  Rng rng(11);
  const int amb = 3;
  double x[3] = {0.25, -0.15, 0.3};
  double w[3], u[3], v[3];
  for (int c = 0; c < amb; ++c) {
    w[c] = rng.normal();
    u[c] = rng.normal();
    v[c] = rng.normal();
  }
  const double t = 1e-6;
  double xp[3], xm[3];
  for (int c = 0; c < amb; ++c) {
    xp[c] = x[c] + t * w[c];
    xm[c] = x[c] - t * w[c];
  }
  auto gval = [&](const double* p) {
    const double lam = ball_lambda(p, amb);
    return lam * lam * dot(u, v, amb);
  };
  const double fd = (gval(xp) - gval(xm)) / (2.0 * t);
  double gu[3], gv[3];
  ball_christoffel(x, amb, w, u, gu);
  ball_christoffel(x, amb, w, v, gv);
  const double lam = ball_lambda(x, amb);
  const double analytic = lam * lam * (dot(gu, v, amb) + dot(u, gv, amb));
  EXPECT_NEAR(fd, analytic, 1e-6 * (1.0 + std::abs(analytic)));
}

TEST(Christoffel, AdjointDuality) {
  Rng rng(13);
  const int amb = 4;
  double x[4] = {0.2, 0.1, -0.3, 0.25};
  for (int trial = 0; trial < 10; ++trial) {
    double u[4], v[4], z[4], guv[4], gz[4];
    for (int c = 0; c < amb; ++c) {
      u[c] = rng.normal();
      v[c] = rng.normal();
      z[c] = rng.normal();
    }
    ball_christoffel(x, amb, u, v, guv);
    ball_christoffel_adjoint(x, amb, u, z, gz);
    const double lhs = dot(guv, z, amb);
    const double rhs = dot(v, gz, amb);
    EXPECT_NEAR(lhs, rhs, 1e-13 * (1.0 + std::abs(lhs)));
  }
}
