#ifndef EXPH_TARGET_HPP
#define EXPH_TARGET_HPP

// Constant-curvature Riemannian targets in closed form: the unit sphere in
// ambient coordinates, flat space, and the Poincare ball. Everything the
// variational formulas need: metric, tangent projection, geodesic retraction,
// curvature operator, connection correction, and the sphere shape operator.

#include "core.hpp"

namespace exph {

enum class TargetKind { Sphere, Euclidean, Hyperbolic };

struct TargetManifold {
  TargetKind kind = TargetKind::Euclidean;
  int n = 1;  // manifold dimension

  // Stored components per point: sphere points carry ambient coordinates.
  int ambient() const { return kind == TargetKind::Sphere ? n + 1 : n; }

  bool flat_or_negative() const { return kind != TargetKind::Sphere; }

  static TargetManifold make(const std::string& kind, int n) {
    TargetManifold t;
    if (n < 1) throw ConfigError("target.n: must be >= 1");
    if (n > 15) throw ConfigError("target.n: desk-scale build supports n <= 15");
    if (kind == "sphere") t.kind = TargetKind::Sphere;
    else if (kind == "euclidean") t.kind = TargetKind::Euclidean;
    else if (kind == "hyperbolic") t.kind = TargetKind::Hyperbolic;
    else throw ConfigError("target.kind: unknown target '" + kind + "'");
    t.n = n;
    return t;
  }

  std::string name() const {
    switch (kind) {
      case TargetKind::Sphere: return "sphere";
      case TargetKind::Euclidean: return "euclidean";
      default: return "hyperbolic";
    }
  }
};

// Poincare-ball conformal factor: metric = lambda(x)^2 * euclidean,
// lambda = 2/(1-|x|^2).
inline double ball_lambda(const double* x, int amb) {
  return 2.0 / (1.0 - norm2(x, amb));
}

// Riemannian inner product of tangent vectors u, v at x.
inline double metric_dot(const TargetManifold& t, const double* x,
                         const double* u, const double* v) {
  const int amb = t.ambient();
  const double e = dot(u, v, amb);
  if (t.kind == TargetKind::Hyperbolic) {
    const double lam = ball_lambda(x, amb);
    return lam * lam * e;
  }
  return e;
}

// Point sanity: unit norm on the sphere, strictly inside the ball.
inline void check_point(const TargetManifold& t, const double* x,
                        const std::string& where) {
  const int amb = t.ambient();
  for (int c = 0; c < amb; ++c)
    if (!std::isfinite(x[c]))
      throw NumericError("non-finite point component at " + where);
  if (t.kind == TargetKind::Sphere) {
    if (std::abs(std::sqrt(norm2(x, amb)) - 1.0) > 1e-10)
      throw NumericError("sphere point norm deviates beyond 1e-10 at " + where);
  } else if (t.kind == TargetKind::Hyperbolic) {
    if (!(std::sqrt(norm2(x, amb)) < 1.0 - 1e-6))
      throw NumericError("ball point norm reached 1 - 1e-6 at " + where);
  }
}

// W minus its normal part on the sphere; identity on coordinate targets.
inline void project_tangent(const TargetManifold& t, const double* x,
                            const double* W, double* out) {
  const int amb = t.ambient();
  if (t.kind == TargetKind::Sphere) {
    const double wn = dot(W, x, amb);
    for (int c = 0; c < amb; ++c) out[c] = W[c] - wn * x[c];
  } else {
    for (int c = 0; c < amb; ++c) out[c] = W[c];
  }
}

namespace detail {

// Mobius addition on the Poincare ball.
inline void mobius_add(const double* x, const double* y, int amb, double* out) {
  const double xy = dot(x, y, amb);
  const double x2 = norm2(x, amb);
  const double y2 = norm2(y, amb);
  const double denom = 1.0 + 2.0 * xy + x2 * y2;
  const double cx = (1.0 + 2.0 * xy + y2) / denom;
  const double cy = (1.0 - x2) / denom;
  for (int c = 0; c < amb; ++c) out[c] = cx * x[c] + cy * y[c];
}

}  // namespace detail

// Geodesic step from x along tangent v, scaled by t. Sphere results are
// renormalized; ball results are guarded against leaving the model.
inline void retract(const TargetManifold& tgt, const double* x, const double* v,
                    double t, double* out) {
  const int amb = tgt.ambient();
  switch (tgt.kind) {
    case TargetKind::Euclidean: {
      for (int c = 0; c < amb; ++c) out[c] = x[c] + t * v[c];
      return;
    }
    case TargetKind::Sphere: {
      const double speed = std::sqrt(norm2(v, amb));
      const double ang = t * speed;
      if (speed == 0.0 || ang == 0.0) {
        for (int c = 0; c < amb; ++c) out[c] = x[c];
        return;
      }
      const double ca = std::cos(ang), sa = std::sin(ang) / speed;
      for (int c = 0; c < amb; ++c) out[c] = ca * x[c] + sa * v[c];
      const double inv = 1.0 / std::sqrt(norm2(out, amb));
      for (int c = 0; c < amb; ++c) out[c] *= inv;
      return;
    }
    case TargetKind::Hyperbolic: {
      double speed = 0.0;
      for (int c = 0; c < amb; ++c) speed += (t * v[c]) * (t * v[c]);
      speed = std::sqrt(speed);
      if (speed == 0.0) {
        for (int c = 0; c < amb; ++c) out[c] = x[c];
        return;
      }
      const double lam = ball_lambda(x, amb);
      const double mag = std::tanh(0.5 * lam * speed) / speed;
      std::array<double, 16> ybuf;
      std::vector<double> yheap;
      double* y = amb <= 16 ? ybuf.data() : (yheap.resize(amb), yheap.data());
      for (int c = 0; c < amb; ++c) y[c] = mag * t * v[c];
      detail::mobius_add(x, y, amb, out);
      if (!(std::sqrt(norm2(out, amb)) < 1.0 - 1e-6))
        throw NumericError("ball retraction step too large: left the model");
      return;
    }
  }
}

// R(X,Y)Z for the constant-curvature targets: +-(<Y,Z>X - <X,Z>Y) in the
// respective metric, zero when flat. Inner products use the target metric,
// so the hyperbolic case carries the conformal factor.
inline void curvature_operator(const TargetManifold& t, const double* x,
                               const double* X, const double* Y,
                               const double* Z, double* out) {
  const int amb = t.ambient();
  if (t.kind == TargetKind::Euclidean) {
    for (int c = 0; c < amb; ++c) out[c] = 0.0;
    return;
  }
  const double yz = metric_dot(t, x, Y, Z);
  const double xz = metric_dot(t, x, X, Z);
  const double sign = t.kind == TargetKind::Sphere ? 1.0 : -1.0;
  for (int c = 0; c < amb; ++c) out[c] = sign * (yz * X[c] - xz * Y[c]);
}

// Sphere Weingarten map A^W(X) = -<x,W>X for a normal field W. Rejects W
// with a tangential part, which would make the closed form silently wrong.
inline void shape_operator(const TargetManifold& t, const double* x,
                           const double* W, const double* X, double* out) {
  if (t.kind != TargetKind::Sphere)
    throw ConfigError("shape_operator: only defined on the sphere target");
  const int amb = t.ambient();
  const double wn = dot(W, x, amb);
  double tang2 = 0.0;
  for (int c = 0; c < amb; ++c) {
    const double r = W[c] - wn * x[c];
    tang2 += r * r;
  }
  if (std::sqrt(tang2) > 1e-8)
    throw NumericError("shape_operator: W has a tangential part above 1e-8");
  for (int c = 0; c < amb; ++c) out[c] = -wn * X[c];
}

// Christoffel correction of the Poincare metric:
// Gamma(u,v)^k = lambda (u_k <x,v> + v_k <x,u> - x_k <u,v>).
inline void ball_christoffel(const double* x, int amb, const double* u,
                             const double* v, double* out) {
  const double lam = ball_lambda(x, amb);
  const double xu = dot(x, u, amb);
  const double xv = dot(x, v, amb);
  const double uv = dot(u, v, amb);
  for (int c = 0; c < amb; ++c)
    out[c] = lam * (u[c] * xv + v[c] * xu - x[c] * uv);
}

// Euclidean adjoint of v -> Gamma(u, v) at fixed u:
// <Gamma(u,v), z> = <v, Gamma_adj(u,z)> with
// Gamma_adj(u,z)^k = lambda (x_k <u,z> + z_k <x,u> - u_k <x,z>).
inline void ball_christoffel_adjoint(const double* x, int amb, const double* u,
                                     const double* z, double* out) {
  const double lam = ball_lambda(x, amb);
  const double uz = dot(u, z, amb);
  const double xu = dot(x, u, amb);
  const double xz = dot(x, z, amb);
  for (int c = 0; c < amb; ++c)
    out[c] = lam * (x[c] * uz + z[c] * xu - u[c] * xz);
}

}  // namespace exph

#endif  // EXPH_TARGET_HPP
