#ifndef EXPH_FIELDS_HPP
#define EXPH_FIELDS_HPP

// Maps f: M -> N stored as one target point per node, and sections of
// f^{-1}TN stored as one tangent vector per node, with the guards that keep
// finite differencing meaningful.

#include "frame.hpp"
#include "target.hpp"

namespace exph {

struct MapField {
  const FrameManifold* manifold = nullptr;
  TargetManifold target;
  std::vector<double> values;  // nodes x ambient, node-major

  double* point(Index node) { return values.data() + node * target.ambient(); }
  const double* point(Index node) const {
    return values.data() + node * target.ambient();
  }
};

struct VariationField {
  const MapField* base = nullptr;
  std::vector<double> vectors;  // nodes x ambient, node-major

  double* vec(Index node) {
    return vectors.data() + node * base->target.ambient();
  }
  const double* vec(Index node) const {
    return vectors.data() + node * base->target.ambient();
  }
};

// Point invariants plus the stencil guard: adjacent nodes must stay within a
// quarter great circle on the sphere, otherwise differencing reads noise.
inline void validate_map(const MapField& f) {
  const Grid& g = f.manifold->grid;
  const int amb = f.target.ambient();
  for (Index node = 0; node < g.nodes; ++node)
    check_point(f.target, f.point(node), "node " + g.node_name(node));
  if (f.target.kind == TargetKind::Sphere) {
    const double chord_cap = kTwoPi / 4.0;  // chordal pi/2
    for (Index node = 0; node < g.nodes; ++node) {
      for (int axis = 0; axis < g.naxes(); ++axis) {
        const double* p = f.point(node);
        const double* q = f.point(g.shift(node, axis, 1));
        double chord2 = 0.0;
        for (int c = 0; c < amb; ++c) chord2 += (p[c] - q[c]) * (p[c] - q[c]);
        if (chord2 >= chord_cap * chord_cap)
          throw NumericError(
              "under-resolved map: adjacent chordal distance >= pi/2 at node " +
              g.node_name(node) + ", axis " + std::to_string(axis));
      }
    }
  }
}

inline void validate_variation(const VariationField& V) {
  const MapField& f = *V.base;
  const Grid& g = f.manifold->grid;
  const int amb = f.target.ambient();
  for (Index node = 0; node < g.nodes; ++node) {
    const double* v = V.vec(node);
    for (int c = 0; c < amb; ++c)
      if (!std::isfinite(v[c]))
        throw NumericError("non-finite variation vector at node " +
                           g.node_name(node));
    if (f.target.kind == TargetKind::Sphere &&
        std::abs(dot(v, f.point(node), amb)) > 1e-10)
      throw NumericError("variation not tangent within 1e-10 at node " +
                         g.node_name(node));
  }
}

inline MapField constant_map(const FrameManifold& M, const TargetManifold& t,
                             const std::vector<double>& point) {
  if (static_cast<int>(point.size()) != t.ambient())
    throw ConfigError("initial_map.point: expected " +
                      std::to_string(t.ambient()) + " components");
  check_point(t, point.data(), "constant point");
  MapField f;
  f.manifold = &M;
  f.target = t;
  f.values.resize(static_cast<size_t>(M.grid.nodes) * t.ambient());
  for (Index node = 0; node < M.grid.nodes; ++node)
    for (int c = 0; c < t.ambient(); ++c) f.point(node)[c] = point[c];
  return f;
}

// f = (cos k x, sin k x, 0, ...) in the given ambient coordinate plane, with
// x the first coordinate: wraps the first torus axis k times around a great
// circle. |df_H|^2 = k^2 in the continuum.
inline MapField eigenmap(const FrameManifold& M, const TargetManifold& t,
                         Index k, std::array<int, 2> plane = {0, 1}) {
  if (t.kind != TargetKind::Sphere)
    throw ConfigError("initial_map eigenmap: requires a sphere target");
  const int amb = t.ambient();
  if (plane[0] < 0 || plane[1] < 0 || plane[0] >= amb || plane[1] >= amb ||
      plane[0] == plane[1])
    throw ConfigError("initial_map.plane: needs two distinct indices < " +
                      std::to_string(amb));
  MapField f;
  f.manifold = &M;
  f.target = t;
  f.values.assign(static_cast<size_t>(M.grid.nodes) * amb, 0.0);
  for (Index node = 0; node < M.grid.nodes; ++node) {
    const double x = M.grid.coordinate(node, 0);
    f.point(node)[plane[0]] = std::cos(k * x);
    f.point(node)[plane[1]] = std::sin(k * x);
  }
  return f;
}

// Circle map with phase x + eps*sin(x): same winding as the k=1 eigenmap but
// non-critical for eps != 0 — the standard flow fixture.
inline MapField perturbed_phase_map(const FrameManifold& M,
                                    const TargetManifold& t, double eps,
                                    std::array<int, 2> plane = {0, 1}) {
  MapField f = eigenmap(M, t, 1, plane);
  for (Index node = 0; node < M.grid.nodes; ++node) {
    const double x = M.grid.coordinate(node, 0);
    const double phi = x + eps * std::sin(x);
    f.point(node)[plane[0]] = std::cos(phi);
    f.point(node)[plane[1]] = std::sin(phi);
  }
  return f;
}

// Seeded low-frequency trigonometric scalar field: constant + frequency-1
// waves and first cross products. Smooth at every grid scale used here.
inline std::vector<double> random_trig_scalar(const Grid& g, Rng& rng,
                                              double amplitude) {
  std::array<double, 10> c;
  for (auto& v : c) v = rng.normal() * amplitude * 0.34;
  std::vector<double> out(static_cast<size_t>(g.nodes));
  const int naxes = g.naxes();
  for (Index node = 0; node < g.nodes; ++node) {
    const double x = g.coordinate(node, 0);
    const double y = naxes > 1 ? g.coordinate(node, 1) : 0.0;
    const double z = naxes > 2 ? g.coordinate(node, 2) : 0.0;
    out[node] = c[0] + c[1] * std::sin(x) + c[2] * std::cos(x) +
                c[3] * std::sin(y) + c[4] * std::cos(y) + c[5] * std::sin(z) +
                c[6] * std::cos(z) + c[7] * std::sin(x) * std::cos(y) +
                c[8] * std::cos(x) * std::sin(z) +
                c[9] * std::sin(y) * std::sin(z);
  }
  return out;
}

// Smooth random map: ambient trig fields pushed onto the target. Sphere:
// normalized around a random base direction kept away from the origin;
// ball: scaled into radius <= 0.7.
inline MapField random_smooth_map(const FrameManifold& M,
                                  const TargetManifold& t, Rng& rng,
                                  double amplitude = 0.4) {
  const int amb = t.ambient();
  MapField f;
  f.manifold = &M;
  f.target = t;
  f.values.assign(static_cast<size_t>(M.grid.nodes) * amb, 0.0);
  std::vector<std::vector<double>> comp(static_cast<size_t>(amb));
  for (int c = 0; c < amb; ++c) comp[c] = random_trig_scalar(M.grid, rng, amplitude);
  if (t.kind == TargetKind::Sphere) {
    // Anchor away from zero so normalization stays smooth.
    std::vector<double> base(static_cast<size_t>(amb));
    double bn = 0.0;
    for (int c = 0; c < amb; ++c) {
      base[c] = rng.normal();
      bn += base[c] * base[c];
    }
    bn = 2.0 / std::sqrt(bn);
    for (Index node = 0; node < M.grid.nodes; ++node) {
      double* p = f.point(node);
      double n2 = 0.0;
      for (int c = 0; c < amb; ++c) {
        p[c] = base[c] * bn + comp[c][node];
        n2 += p[c] * p[c];
      }
      const double inv = 1.0 / std::sqrt(n2);
      for (int c = 0; c < amb; ++c) p[c] *= inv;
    }
  } else {
    double sup = 0.0;
    for (Index node = 0; node < M.grid.nodes; ++node) {
      double n2 = 0.0;
      for (int c = 0; c < amb; ++c) n2 += comp[c][node] * comp[c][node];
      sup = std::max(sup, n2);
    }
    const double scale =
        t.kind == TargetKind::Hyperbolic && sup > 0.49
            ? 0.7 / std::sqrt(sup)
            : 1.0;
    for (Index node = 0; node < M.grid.nodes; ++node)
      for (int c = 0; c < amb; ++c)
        f.point(node)[c] = scale * comp[c][node];
  }
  validate_map(f);
  return f;
}

// Smooth random section of f^{-1}TN (tangent-projected on the sphere).
inline VariationField random_smooth_variation(const MapField& f, Rng& rng,
                                              double amplitude = 1.0) {
  const int amb = f.target.ambient();
  VariationField V;
  V.base = &f;
  V.vectors.assign(f.values.size(), 0.0);
  std::vector<std::vector<double>> comp(static_cast<size_t>(amb));
  for (int c = 0; c < amb; ++c)
    comp[c] = random_trig_scalar(f.manifold->grid, rng, amplitude);
  for (Index node = 0; node < f.manifold->grid.nodes; ++node) {
    std::array<double, 16> raw;
    for (int c = 0; c < amb; ++c) raw[c] = comp[c][node];
    project_tangent(f.target, f.point(node), raw.data(), V.vec(node));
  }
  return V;
}

inline VariationField zero_variation(const MapField& f) {
  VariationField V;
  V.base = &f;
  V.vectors.assign(f.values.size(), 0.0);
  return V;
}

// Nodewise geodesic step: the one-parameter family realizing a variation.
inline MapField retract_map(const MapField& f, const VariationField& V,
                            double t) {
  MapField out;
  out.manifold = f.manifold;
  out.target = f.target;
  out.values.resize(f.values.size());
  const Grid& g = f.manifold->grid;
  const int amb = f.target.ambient();
  for (Index node = 0; node < g.nodes; ++node) {
    try {
      retract(f.target, f.point(node), V.vec(node), t,
              out.values.data() + node * amb);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at node " +
                         g.node_name(node));
    }
  }
  return out;
}

}  // namespace exph

#endif  // EXPH_FIELDS_HPP
