#ifndef EXPH_TESTS_FIXTURES_HPP
#define EXPH_TESTS_FIXTURES_HPP

// Shared analytic fixtures: frequency-1 fields that stay smooth at every grid
// size used in the tests, so observed convergence orders measure the scheme
// and not the data.

#include <exph/exph.hpp>

namespace exph_fixtures {

using exph::FrameManifold;
using exph::Grid;
using exph::Index;
using exph::MapField;
using exph::TargetManifold;
using exph::VariationField;

inline Index node_at(const Grid& g, Index ix, Index iy, Index iz) {
  const Index multi[3] = {ix, iy, iz};
  return g.flatten(multi);
}

// Sphere(2) map built from low-frequency waves around a dominant constant
// component: never near a pole flip, chordal steps far below the guard.
inline MapField gentle_sphere_map(const FrameManifold& M) {
  const TargetManifold t = TargetManifold::make("sphere", 2);
  MapField f;
  f.manifold = &M;
  f.target = t;
  f.values.assign(static_cast<size_t>(M.grid.nodes) * 3, 0.0);
  for (Index node = 0; node < M.grid.nodes; ++node) {
    const double x = M.grid.coordinate(node, 0);
    const double y = M.grid.coordinate(node, 1);
    const double z = M.grid.coordinate(node, 2);
    double v[3] = {2.0 + 0.3 * std::cos(x) + 0.15 * std::sin(y),
                   0.4 * std::sin(x) - 0.1 * std::cos(z),
                   0.3 + 0.2 * std::sin(y)};
    const double inv = 1.0 / std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (int c = 0; c < 3; ++c) f.point(node)[c] = inv * v[c];
  }
  exph::validate_map(f);
  return f;
}

// Matching low-frequency tangent section along the map above.
inline VariationField gentle_variation(const MapField& f) {
  VariationField V;
  V.base = &f;
  V.vectors.assign(f.values.size(), 0.0);
  for (Index node = 0; node < f.manifold->grid.nodes; ++node) {
    const double x = f.manifold->grid.coordinate(node, 0);
    const double y = f.manifold->grid.coordinate(node, 1);
    const double z = f.manifold->grid.coordinate(node, 2);
    const double raw[3] = {0.3 * std::sin(x), 0.5 * std::cos(z),
                           0.2 + 0.3 * std::cos(y)};
    exph::project_tangent(f.target, f.point(node), raw, V.vec(node));
  }
  return V;
}

}  // namespace exph_fixtures

#endif  // EXPH_TESTS_FIXTURES_HPP
