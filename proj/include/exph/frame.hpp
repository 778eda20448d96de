#ifndef EXPH_FRAME_HPP
#define EXPH_FRAME_HPP

// Framed periodic source manifolds: a global orthonormal frame {e_A} on a
// torus, split into m horizontal and d vertical fields, with structure
// functions c_AB^C, connection coefficients Gamma_AB^C (Koszul in an
// orthonormal frame), the vertical mean-curvature vector zeta, and volume
// weights relative to coordinate cell volume.

#include <Eigen/Dense>

#include "stencil.hpp"

namespace exph {

struct FrameManifold {
  Grid grid;
  int m = 0;  // horizontal frame fields e_1..e_m
  int d = 0;  // vertical frame fields e_{m+1}..e_{m+d}
  Stencil stencil;
  std::string preset;

  // frame[(node*nA + A)*nA + c]: coordinate component of e_A along axis c.
  std::vector<double> frame;
  // structure[((node*nA + A)*nA + B)*nA + C]: c_AB^C with [e_A,e_B]=c_AB^C e_C.
  std::vector<double> structure;
  // gamma, same layout: Gamma_AB^C = <nabla_{e_A} e_B, e_C>.
  std::vector<double> gamma;
  // zeta[node*m + i]: horizontal frame components of pi_H(nabla_{e_alpha} e_alpha).
  std::vector<double> zeta;
  // vol_weight[node]: density of dv_g over coordinate cell volume, 1/|det frame|.
  std::vector<double> vol_weight;

  int nA() const { return m + d; }

  double frame_coeff(Index node, int A, int c) const {
    return frame[(node * nA() + A) * nA() + c];
  }
  double structure_fn(Index node, int A, int B, int C) const {
    const int n = nA();
    return structure[((node * n + A) * n + B) * n + C];
  }
  double gamma_fn(Index node, int A, int B, int C) const {
    const int n = nA();
    return gamma[((node * n + A) * n + B) * n + C];
  }
  double zeta_fn(Index node, int i) const { return zeta[node * m + i]; }
};

// Gamma_AB^C = (c_AB^C - c_BC^A + c_CA^B)/2 — Koszul formula specialized to an
// orthonormal frame. Metric compatibility and torsion-freeness follow
// identically from the antisymmetry c_AB^C = -c_BA^C.
inline void koszul_from_structure(const double* c, int n, double* g) {
  auto at = [n](const double* p, int A, int B, int C) {
    return p[(A * n + B) * n + C];
  };
  for (int A = 0; A < n; ++A)
    for (int B = 0; B < n; ++B)
      for (int C = 0; C < n; ++C)
        g[(A * n + B) * n + C] =
            0.5 * (at(c, A, B, C) - at(c, B, C, A) + at(c, C, A, B));
}

// zeta^i = sum_alpha Gamma_{alpha alpha}^i, i horizontal.
inline void zeta_from_gamma(const double* g, int n, int m, double* z) {
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int alpha = m; alpha < n; ++alpha) s += g[(alpha * n + alpha) * n + i];
    z[i] = s;
  }
}

// Structure functions by centered differencing of the frame coefficient
// fields: [e_A,e_B]^coord = F_A^c d_c F_B^coord - F_B^c d_c F_A^coord, then
// expanded in the frame at the node. Used for custom frames and as the
// convergence oracle against analytic preset values.
inline std::vector<double> structure_functions_fd(const FrameManifold& M) {
  const Grid& g = M.grid;
  const int n = M.nA();
  const int nn = n * n;
  // dframe[axis][(node*n + A)*n + c] = d_axis of frame coefficient field.
  std::vector<std::vector<double>> dframe(static_cast<size_t>(n));
  for (int axis = 0; axis < n; ++axis) {
    dframe[axis].resize(M.frame.size());
    axis_derivative(g, M.stencil, axis, M.frame.data(), nn,
                    dframe[axis].data());
  }
  std::vector<double> out(static_cast<size_t>(g.nodes) * n * n * n, 0.0);
  parallel_for(g.nodes, [&](Index lo, Index hi) {
    Eigen::MatrixXd Mat(n, n);
    Eigen::VectorXd bracket(n);
    for (Index node = lo; node < hi; ++node) {
      // Mat maps frame components to coordinate components: col A = e_A.
      for (int A = 0; A < n; ++A)
        for (int c = 0; c < n; ++c) Mat(c, A) = M.frame_coeff(node, A, c);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Mat);
      for (int A = 0; A < n; ++A) {
        for (int B = 0; B < n; ++B) {
          for (int coord = 0; coord < n; ++coord) {
            double v = 0.0;
            for (int c = 0; c < n; ++c) {
              v += M.frame_coeff(node, A, c) *
                       dframe[c][(node * n + B) * n + coord] -
                   M.frame_coeff(node, B, c) *
                       dframe[c][(node * n + A) * n + coord];
            }
            bracket(coord) = v;
          }
          Eigen::VectorXd comp = lu.solve(bracket);
          for (int C = 0; C < n; ++C)
            out[((node * n + A) * n + B) * n + C] = comp(C);
        }
      }
    }
  });
  return out;
}

namespace detail {

// Fills structure/gamma/zeta/vol_weight from the already-populated frame
// coefficients plus an optional analytic structure array (empty: use FD).
inline void finish_build(FrameManifold& M, std::vector<double>&& analytic_structure) {
  const Grid& g = M.grid;
  const int n = M.nA();
  // Invertibility / volume weights first, so FD structure can assume them.
  M.vol_weight.resize(static_cast<size_t>(g.nodes));
  for (Index node = 0; node < g.nodes; ++node) {
    Eigen::MatrixXd Mat(n, n);
    for (int A = 0; A < n; ++A)
      for (int c = 0; c < n; ++c) Mat(c, A) = M.frame_coeff(node, A, c);
    const double det = std::abs(Mat.determinant());
    if (!(det > 1e-12))
      throw NumericError("degenerate frame: |det| <= 1e-12 at node " +
                         g.node_name(node));
    M.vol_weight[node] = 1.0 / det;
  }
  M.structure = analytic_structure.empty() ? structure_functions_fd(M)
                                           : std::move(analytic_structure);
  M.gamma.resize(M.structure.size());
  M.zeta.resize(static_cast<size_t>(g.nodes) * M.m);
  const int nnn = n * n * n;
  parallel_for(g.nodes, [&](Index lo, Index hi) {
    for (Index node = lo; node < hi; ++node) {
      koszul_from_structure(M.structure.data() + node * nnn, n,
                            M.gamma.data() + node * nnn);
      zeta_from_gamma(M.gamma.data() + node * nnn, n, M.m,
                      M.zeta.data() + node * M.m);
    }
  });
}

}  // namespace detail

struct PresetParams {
  double stretch_amplitude = 0.5;  // a(x) = 1 + amplitude*sin(x)
  double twist_lambda = 1.0;       // e_2 = d_y + lambda*cos(x) d_z
};

// Presets live on the 3-torus: e_1 = d_x, and
//   flat:      e_2 = d_y,                     e_3 = d_z
//   stretched: e_2 = d_y,                     e_3 = a(x) d_z
//   twisted:   e_2 = d_y + lambda cos(x) d_z, e_3 = d_z
// m = 2 horizontal, d = 1 vertical. Structure functions are analytic here;
// custom frames go through the FD path.
inline FrameManifold build_framed_torus(const std::string& preset,
                                        const std::vector<Index>& dims,
                                        int stencil_order = 2,
                                        const PresetParams& params = {}) {
  FrameManifold M;
  M.grid = Grid::make(dims);
  M.stencil = Stencil::make(stencil_order);
  M.preset = preset;
  if (preset == "flat" || preset == "stretched" || preset == "twisted") {
    if (dims.size() != 3)
      throw ConfigError("manifold.dims: preset '" + preset +
                        "' needs 3 axes, got " + std::to_string(dims.size()));
    M.m = 2;
    M.d = 1;
    const int n = 3;
    const Grid& g = M.grid;
    M.frame.assign(static_cast<size_t>(g.nodes) * n * n, 0.0);
    std::vector<double> cs(static_cast<size_t>(g.nodes) * n * n * n, 0.0);
    for (Index node = 0; node < g.nodes; ++node) {
      const double x = g.coordinate(node, 0);
      double* F = M.frame.data() + node * n * n;
      F[0 * n + 0] = 1.0;  // e_1 = d_x
      F[1 * n + 1] = 1.0;  // e_2 has d_y part
      if (preset == "flat") {
        F[2 * n + 2] = 1.0;
      } else if (preset == "stretched") {
        const double a = 1.0 + params.stretch_amplitude * std::sin(x);
        const double da = params.stretch_amplitude * std::cos(x);
        F[2 * n + 2] = a;
        // [e_1, e_3] = a' d_z = (a'/a) e_3
        double* c = cs.data() + node * n * n * n;
        c[(0 * n + 2) * n + 2] = da / a;
        c[(2 * n + 0) * n + 2] = -da / a;
      } else {  // twisted
        const double lam = params.twist_lambda;
        F[1 * n + 2] = lam * std::cos(x);
        F[2 * n + 2] = 1.0;
        // [e_1, e_2] = -lambda sin(x) d_z = -lambda sin(x) e_3
        double* c = cs.data() + node * n * n * n;
        c[(0 * n + 1) * n + 2] = -lam * std::sin(x);
        c[(1 * n + 0) * n + 2] = lam * std::sin(x);
      }
    }
    detail::finish_build(M, std::move(cs));
    return M;
  }
  throw ConfigError("manifold.preset: unknown preset '" + preset + "'");
}

// Custom frame: caller supplies per-node coefficients (layout as
// FrameManifold::frame) and the horizontal/vertical split; structure
// functions come from centered differences of those fields.
inline FrameManifold build_custom_torus(const std::vector<Index>& dims, int m,
                                        int d, std::vector<double> frame_coeffs,
                                        int stencil_order = 2) {
  FrameManifold M;
  M.grid = Grid::make(dims);
  M.stencil = Stencil::make(stencil_order);
  M.preset = "custom";
  if (m < 1 || d < 0 || m + d != static_cast<int>(dims.size()))
    throw ConfigError("custom frame: m + d must equal the number of axes");
  M.m = m;
  M.d = d;
  const size_t want = static_cast<size_t>(M.grid.nodes) * (m + d) * (m + d);
  if (frame_coeffs.size() != want)
    throw ConfigError("custom frame: expected " + std::to_string(want) +
                      " coefficients, got " + std::to_string(frame_coeffs.size()));
  M.frame = std::move(frame_coeffs);
  detail::finish_build(M, {});
  return M;
}

}  // namespace exph

#endif  // EXPH_FRAME_HPP
