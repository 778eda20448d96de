#ifndef EXPH_CALCULUS_HPP
#define EXPH_CALCULUS_HPP

// Discrete calculus for maps along the frame: horizontal differential,
// energy density, pull-back covariant derivative, second-fundamental-form
// trace, and the tension field.
//
// The tension field is assembled as the exact adjoint of the implemented
// quadrature energy (divergence/gather form), so the first-variation pairing
// reproduces the discrete energy's directional derivative to rounding. The
// named three-term geometric assembly is kept alongside as
// tension_field_geometric; the two agree at second order under refinement,
// which is the integration-by-parts identity in discrete form.

#include "fields.hpp"

namespace exph {

// ---------------------------------------------------------------------------
// Per-node operators (reference path; field-level bulk versions below).

// df(e_A) at one node: centered differences along coordinates contracted
// with the frame coefficients of e_A. No tangent projection here.
inline void frame_derivative(const MapField& f, Index node, int A, double* out) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = f.target.ambient();
  for (int c = 0; c < amb; ++c) out[c] = 0.0;
  for (int axis = 0; axis < g.naxes(); ++axis) {
    const double coef = M.frame_coeff(node, A, axis);
    if (coef == 0.0) continue;
    const double inv_h = 1.0 / g.spacing[axis];
    for (int t = 1; t <= M.stencil.taps; ++t) {
      const double* p = f.point(g.shift(node, axis, t));
      const double* m = f.point(g.shift(node, axis, -t));
      const double w = coef * M.stencil.w[t - 1] * inv_h;
      for (int c = 0; c < amb; ++c) out[c] += w * (p[c] - m[c]);
    }
  }
}

// Scalar version, for densities and other node functions.
inline double frame_derivative_scalar(const FrameManifold& M,
                                      const std::vector<double>& field,
                                      Index node, int A) {
  const Grid& g = M.grid;
  double out = 0.0;
  for (int axis = 0; axis < g.naxes(); ++axis) {
    const double coef = M.frame_coeff(node, A, axis);
    if (coef == 0.0) continue;
    const double inv_h = 1.0 / g.spacing[axis];
    for (int t = 1; t <= M.stencil.taps; ++t) {
      out += coef * M.stencil.w[t - 1] * inv_h *
             (field[g.shift(node, axis, t)] - field[g.shift(node, axis, -t)]);
    }
  }
  return out;
}

// df_H(e_i) for the m horizontal indices; tangent-projected on the sphere so
// downstream inner products carry no finite-difference normal drift.
inline void horizontal_differential(const MapField& f, Index node,
                                    std::vector<std::array<double, 16>>& out) {
  const int m = f.manifold->m;
  const int amb = f.target.ambient();
  out.resize(static_cast<size_t>(m));
  std::array<double, 16> bare;
  for (int i = 0; i < m; ++i) {
    frame_derivative(f, node, i, bare.data());
    project_tangent(f.target, f.point(node), bare.data(), out[i].data());
    for (int c = amb; c < 16; ++c) out[i][c] = 0.0;
  }
}

// e_f = |df_H|^2 / 2 in the target metric.
inline double energy_density(const MapField& f, Index node) {
  std::vector<std::array<double, 16>> u;
  horizontal_differential(f, node, u);
  double e = 0.0;
  for (int i = 0; i < f.manifold->m; ++i)
    e += metric_dot(f.target, f.point(node), u[i].data(), u[i].data());
  return 0.5 * e;
}

// Pull-back covariant derivative of a section V along e_A at one node:
// sphere — tangential part of the ambient frame derivative; flat — the
// frame derivative itself; ball — frame derivative plus the Christoffel
// correction contracted with df(e_A).
inline void pullback_derivative(const MapField& f, const VariationField& V,
                                Index node, int A, double* out) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = f.target.ambient();
  std::array<double, 16> dv{};
  for (int axis = 0; axis < g.naxes(); ++axis) {
    const double coef = M.frame_coeff(node, A, axis);
    if (coef == 0.0) continue;
    const double inv_h = 1.0 / g.spacing[axis];
    for (int t = 1; t <= M.stencil.taps; ++t) {
      const double* p = V.vec(g.shift(node, axis, t));
      const double* mv = V.vec(g.shift(node, axis, -t));
      const double w = coef * M.stencil.w[t - 1] * inv_h;
      for (int c = 0; c < amb; ++c) dv[c] += w * (p[c] - mv[c]);
    }
  }
  switch (f.target.kind) {
    case TargetKind::Sphere:
      project_tangent(f.target, f.point(node), dv.data(), out);
      return;
    case TargetKind::Euclidean:
      for (int c = 0; c < amb; ++c) out[c] = dv[c];
      return;
    case TargetKind::Hyperbolic: {
      std::array<double, 16> dfA, corr;
      frame_derivative(f, node, A, dfA.data());
      ball_christoffel(f.point(node), amb, dfA.data(), V.vec(node),
                       corr.data());
      for (int c = 0; c < amb; ++c) out[c] = dv[c] + corr[c];
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Field-level geometry bundle: everything the energy, gradient, and index
// form reuse, computed in a few stencil passes.

struct MapGeometry {
  int m = 0;
  int amb = 0;
  Index nodes = 0;
  // bare[i]: df(e_i) per node (no projection); horiz[i]: df_H(e_i) with the
  // sphere tangent projection applied (equal to bare off the sphere).
  std::vector<std::vector<double>> bare;
  std::vector<std::vector<double>> horiz;
  std::vector<double> vdotf;    // sphere only: <bare_i, f> per node, i-major
  std::vector<double> lambda;   // ball conformal factor per node (hyperbolic)
  std::vector<double> density;  // e_f per node
  std::vector<double> weight;   // exp(e_f) * vol_weight * cell_volume
  double energy = 0.0;
  double sup_density = 0.0;
};

inline MapGeometry map_geometry(const MapField& f) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = f.target.ambient();
  const int m = M.m;
  const int naxes = g.naxes();
  MapGeometry geo;
  geo.m = m;
  geo.amb = amb;
  geo.nodes = g.nodes;

  // Coordinate derivatives of f, one pass per axis.
  std::vector<std::vector<double>> df(static_cast<size_t>(naxes));
  for (int axis = 0; axis < naxes; ++axis) {
    df[axis].resize(f.values.size());
    axis_derivative(g, M.stencil, axis, f.values.data(), amb, df[axis].data());
  }

  geo.bare.assign(static_cast<size_t>(m), {});
  for (int i = 0; i < m; ++i) {
    geo.bare[i].assign(f.values.size(), 0.0);
    for (int axis = 0; axis < naxes; ++axis) {
      const std::vector<double>& d = df[axis];
      std::vector<double>& v = geo.bare[i];
      parallel_for(g.nodes, [&](Index lo, Index hi) {
        for (Index node = lo; node < hi; ++node) {
          const double coef = M.frame_coeff(node, i, axis);
          if (coef == 0.0) continue;
          const double* src = d.data() + node * amb;
          double* dst = v.data() + node * amb;
          for (int c = 0; c < amb; ++c) dst[c] += coef * src[c];
        }
      });
    }
  }

  geo.density.resize(static_cast<size_t>(g.nodes));
  geo.weight.resize(static_cast<size_t>(g.nodes));
  if (f.target.kind == TargetKind::Sphere) {
    geo.horiz.assign(static_cast<size_t>(m), {});
    for (int i = 0; i < m; ++i) geo.horiz[i].resize(f.values.size());
    geo.vdotf.assign(static_cast<size_t>(m) * g.nodes, 0.0);
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        const double* p = f.point(node);
        double e = 0.0;
        for (int i = 0; i < m; ++i) {
          const double* v = geo.bare[i].data() + node * amb;
          double* u = geo.horiz[i].data() + node * amb;
          const double b = dot(v, p, amb);
          geo.vdotf[i * g.nodes + node] = b;
          double un = 0.0;
          for (int c = 0; c < amb; ++c) {
            u[c] = v[c] - b * p[c];
            un += u[c] * u[c];
          }
          e += un;
        }
        geo.density[node] = 0.5 * e;
      }
    });
  } else if (f.target.kind == TargetKind::Hyperbolic) {
    geo.lambda.resize(static_cast<size_t>(g.nodes));
    geo.horiz = geo.bare;  // no projection off the sphere
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        const double lam = ball_lambda(f.point(node), amb);
        geo.lambda[node] = lam;
        double e = 0.0;
        for (int i = 0; i < m; ++i)
          e += norm2(geo.bare[i].data() + node * amb, amb);
        geo.density[node] = 0.5 * lam * lam * e;
      }
    });
  } else {
    geo.horiz = geo.bare;
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        double e = 0.0;
        for (int i = 0; i < m; ++i)
          e += norm2(geo.bare[i].data() + node * amb, amb);
        geo.density[node] = 0.5 * e;
      }
    });
  }

  double sup = 0.0;
  for (Index node = 0; node < g.nodes; ++node) {
    const double e = geo.density[node];
    if (e > 700.0)
      throw NumericError("energy density overflow (e_f > 700) at node " +
                         g.node_name(node));
    sup = std::max(sup, e);
    geo.weight[node] = std::exp(e) * M.vol_weight[node] * g.cell_volume;
  }
  geo.sup_density = sup;
  geo.energy = pairwise_sum(geo.weight);
  return geo;
}

inline double exponential_energy(const MapField& f) {
  return map_geometry(f).energy;
}

// ---------------------------------------------------------------------------
// Energy gradient: dE/df as an ambient field, assembled by moving the
// difference operators off the varied slot (exact discrete adjoint, using
// the antisymmetry of the centered stencils).

struct EnergyGradient {
  MapGeometry geo;
  std::vector<double> grad;  // nodes x ambient
};

inline EnergyGradient energy_and_gradient(const MapField& f) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = f.target.ambient();
  const int m = M.m;
  const int naxes = g.naxes();
  EnergyGradient out;
  out.geo = map_geometry(f);
  const MapGeometry& geo = out.geo;
  out.grad.assign(f.values.size(), 0.0);

  // Divergence part: G -= sum_axis D_axis[ sum_i a * (metric factor) *
  // F_i^axis * u_i ].
  std::vector<double> q(f.values.size());
  for (int axis = 0; axis < naxes; ++axis) {
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        double* qn = q.data() + node * amb;
        for (int c = 0; c < amb; ++c) qn[c] = 0.0;
        double scale = geo.weight[node];
        if (f.target.kind == TargetKind::Hyperbolic) {
          const double lam = geo.lambda[node];
          scale *= lam * lam;
        }
        for (int i = 0; i < m; ++i) {
          const double coef = M.frame_coeff(node, i, axis) * scale;
          if (coef == 0.0) continue;
          const double* u = geo.horiz[i].data() + node * amb;
          for (int c = 0; c < amb; ++c) qn[c] += coef * u[c];
        }
      }
    });
    add_axis_derivative(g, M.stencil, axis, q.data(), amb, -1.0,
                        out.grad.data());
  }

  // Pointwise parts from differentiating the projection (sphere) or the
  // conformal factor (ball).
  if (f.target.kind == TargetKind::Sphere) {
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        const double a = geo.weight[node];
        double* gn = out.grad.data() + node * amb;
        for (int i = 0; i < m; ++i) {
          const double b = geo.vdotf[i * g.nodes + node];
          if (b == 0.0) continue;
          const double* u = geo.horiz[i].data() + node * amb;
          for (int c = 0; c < amb; ++c) gn[c] -= a * b * u[c];
        }
      }
    });
  } else if (f.target.kind == TargetKind::Hyperbolic) {
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        const double a = geo.weight[node];
        const double lam = geo.lambda[node];
        double uu = 0.0;
        for (int i = 0; i < m; ++i)
          uu += norm2(geo.horiz[i].data() + node * amb, amb);
        const double* p = f.point(node);
        double* gn = out.grad.data() + node * amb;
        const double coef = a * lam * lam * lam * uu;
        for (int c = 0; c < amb; ++c) gn[c] += coef * p[c];
      }
    });
  }
  return out;
}

// tau_H from the gradient: the field with
// dE/dt = -sum_nodes e^{e_f} <V, tau_H>_h vol_weight cellvol for tangent V.
inline std::vector<double> tension_from_gradient(const MapField& f,
                                                 const EnergyGradient& eg) {
  const int amb = f.target.ambient();
  const Index nodes = f.manifold->grid.nodes;
  std::vector<double> tau(f.values.size());
  parallel_for(nodes, [&](Index lo, Index hi) {
    std::array<double, 16> proj;
    for (Index node = lo; node < hi; ++node) {
      const double* gn = eg.grad.data() + node * amb;
      double* tn = tau.data() + node * amb;
      double inv = -1.0 / eg.geo.weight[node];
      if (f.target.kind == TargetKind::Hyperbolic) {
        const double lam = eg.geo.lambda[node];
        inv /= lam * lam;
      }
      if (f.target.kind == TargetKind::Sphere) {
        project_tangent(f.target, f.point(node), gn, proj.data());
        for (int c = 0; c < amb; ++c) tn[c] = inv * proj[c];
      } else {
        for (int c = 0; c < amb; ++c) tn[c] = inv * gn[c];
      }
    }
  });
  return tau;
}

inline std::vector<double> tension_field(const MapField& f) {
  return tension_from_gradient(f, energy_and_gradient(f));
}

// sup over nodes of the target-metric norm of tau_H.
inline double tension_sup_norm(const MapField& f, const MapGeometry& geo,
                               const std::vector<double>& tau) {
  const int amb = f.target.ambient();
  double sup = 0.0;
  for (Index node = 0; node < geo.nodes; ++node) {
    double n2 = norm2(tau.data() + node * amb, amb);
    if (f.target.kind == TargetKind::Hyperbolic) {
      const double lam = geo.lambda[node];
      n2 *= lam * lam;
    }
    sup = std::max(sup, n2);
  }
  return std::sqrt(sup);
}

// Criticality gate shared by the second-variation machinery: tau_H small
// relative to the energy scale.
inline bool is_critical(const MapField& f, const MapGeometry& geo,
                        const std::vector<double>& tau, double tol = 1e-6) {
  return tension_sup_norm(f, geo, tau) <= tol * (1.0 + geo.sup_density);
}

// ---------------------------------------------------------------------------
// Pull-back derivatives of a section, bulk form.

// q[i] = pull-back derivative of V along e_i for all horizontal i, reusing
// one set of coordinate-derivative passes of V.
inline std::vector<std::vector<double>> pullback_horizontal(
    const MapField& f, const MapGeometry& geo, const std::vector<double>& V) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = geo.amb;
  const int m = geo.m;
  const int naxes = g.naxes();
  std::vector<std::vector<double>> dV(static_cast<size_t>(naxes));
  for (int axis = 0; axis < naxes; ++axis) {
    dV[axis].resize(V.size());
    axis_derivative(g, M.stencil, axis, V.data(), amb, dV[axis].data());
  }
  std::vector<std::vector<double>> q(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) q[i].assign(V.size(), 0.0);
  parallel_for(g.nodes, [&](Index lo, Index hi) {
    std::array<double, 16> acc, corr;
    for (Index node = lo; node < hi; ++node) {
      for (int i = 0; i < m; ++i) {
        for (int c = 0; c < amb; ++c) acc[c] = 0.0;
        for (int axis = 0; axis < naxes; ++axis) {
          const double coef = M.frame_coeff(node, i, axis);
          if (coef == 0.0) continue;
          const double* src = dV[axis].data() + node * amb;
          for (int c = 0; c < amb; ++c) acc[c] += coef * src[c];
        }
        double* dst = q[i].data() + node * amb;
        switch (f.target.kind) {
          case TargetKind::Sphere:
            project_tangent(f.target, f.point(node), acc.data(), dst);
            break;
          case TargetKind::Euclidean:
            for (int c = 0; c < amb; ++c) dst[c] = acc[c];
            break;
          case TargetKind::Hyperbolic:
            ball_christoffel(f.point(node), amb,
                             geo.bare[i].data() + node * amb, V.data() + node * amb,
                             corr.data());
            for (int c = 0; c < amb; ++c) dst[c] = acc[c] + corr[c];
            break;
        }
      }
    }
  });
  return q;
}

// ---------------------------------------------------------------------------
// Second-fundamental-form trace and the named tension assembly.

// sum_i [ pullback_i(df_H(e_i)) - df_H(pi_H nabla_{e_i} e_i) ] as a field.
inline std::vector<double> beta_h_trace_field(const MapField& f,
                                              const MapGeometry& geo) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = geo.amb;
  const int m = geo.m;
  std::vector<double> out(f.values.size(), 0.0);
  for (int i = 0; i < m; ++i) {
    // Pull-back derivative of the section u_i along e_i.
    std::vector<std::vector<double>> qi =
        pullback_horizontal(f, geo, geo.horiz[i]);
    const std::vector<double>& pb = qi[i];
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        double* o = out.data() + node * amb;
        const double* p = pb.data() + node * amb;
        for (int c = 0; c < amb; ++c) o[c] += p[c];
        // df_H applied to the horizontal part of nabla_{e_i} e_i.
        for (int j = 0; j < m; ++j) {
          const double gam = M.gamma_fn(node, i, i, j);
          if (gam == 0.0) continue;
          const double* u = geo.horiz[j].data() + node * amb;
          for (int c = 0; c < amb; ++c) o[c] -= gam * u[c];
        }
      }
    });
  }
  return out;
}

inline void beta_h_trace(const MapField& f, Index node, double* out) {
  // Reference per-node path used by tests; recomputes the local stencil.
  const MapGeometry geo = map_geometry(f);
  const std::vector<double> field = beta_h_trace_field(f, geo);
  for (int c = 0; c < f.target.ambient(); ++c)
    out[c] = field[node * f.target.ambient() + c];
}

// Three-term assembly: beta-trace - df(zeta) + df_H(pi_H grad e_f). Agrees
// with tension_field at the scheme's order; kept for diagnostics and the
// discrete integration-by-parts check.
inline std::vector<double> tension_field_geometric(const MapField& f) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const MapGeometry geo = map_geometry(f);
  const int amb = geo.amb;
  const int m = geo.m;
  std::vector<double> out = beta_h_trace_field(f, geo);
  // Horizontal gradient components of the density: e_i(e_f).
  std::vector<std::vector<double>> de(static_cast<size_t>(g.naxes()));
  for (int axis = 0; axis < g.naxes(); ++axis) {
    de[axis].resize(static_cast<size_t>(g.nodes));
    axis_derivative(g, M.stencil, axis, geo.density.data(), 1,
                    de[axis].data());
  }
  parallel_for(g.nodes, [&](Index lo, Index hi) {
    std::array<double, 16> total, proj;
    for (Index node = lo; node < hi; ++node) {
      double* o = out.data() + node * amb;
      for (int c = 0; c < amb; ++c) total[c] = o[c];
      for (int i = 0; i < m; ++i) {
        double ge = 0.0;
        for (int axis = 0; axis < g.naxes(); ++axis) {
          const double coef = M.frame_coeff(node, i, axis);
          if (coef != 0.0) ge += coef * de[axis][node];
        }
        const double zi = M.zeta_fn(node, i);
        const double* u = geo.horiz[i].data() + node * amb;
        for (int c = 0; c < amb; ++c) total[c] += (ge - zi) * u[c];
      }
      if (f.target.kind == TargetKind::Sphere) {
        project_tangent(f.target, f.point(node), total.data(), proj.data());
        for (int c = 0; c < amb; ++c) o[c] = proj[c];
      } else {
        for (int c = 0; c < amb; ++c) o[c] = total[c];
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Discrete integration-by-parts identity: difference of the two integrals
// for a section W. Decays at the scheme's order on smooth data.

inline double divergence_identity_gap(const MapField& f,
                                      const VariationField& W) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const MapGeometry geo = map_geometry(f);
  const int amb = geo.amb;
  const int m = geo.m;
  // s_i = <W, df_H(e_i)>_h as scalar fields.
  std::vector<std::vector<double>> s(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    s[i].resize(static_cast<size_t>(g.nodes));
    for (Index node = 0; node < g.nodes; ++node) {
      s[i][node] = metric_dot(f.target, f.point(node), W.vec(node),
                              geo.horiz[i].data() + node * amb);
    }
  }
  // Horizontal gradient of the density.
  std::vector<std::vector<double>> de(static_cast<size_t>(g.naxes()));
  for (int axis = 0; axis < g.naxes(); ++axis) {
    de[axis].resize(static_cast<size_t>(g.nodes));
    axis_derivative(g, M.stencil, axis, geo.density.data(), 1,
                    de[axis].data());
  }
  std::vector<double> lhs(static_cast<size_t>(g.nodes));
  std::vector<double> rhs(static_cast<size_t>(g.nodes));
  for (Index node = 0; node < g.nodes; ++node) {
    double L = 0.0, R = 0.0;
    for (int i = 0; i < m; ++i) {
      // e_i applied to the scalar s_i.
      L += frame_derivative_scalar(M, s[i], node, i);
      // <W, df_H(pi_H nabla_{e_i} e_i)>_h
      for (int j = 0; j < m; ++j) {
        const double gam = M.gamma_fn(node, i, i, j);
        if (gam != 0.0) L -= gam * s[j][node];
      }
      double ge = 0.0;
      for (int axis = 0; axis < g.naxes(); ++axis) {
        const double coef = M.frame_coeff(node, i, axis);
        if (coef != 0.0) ge += coef * de[axis][node];
      }
      R += (M.zeta_fn(node, i) - ge) * s[i][node];
    }
    lhs[node] = geo.weight[node] * L;
    rhs[node] = geo.weight[node] * R;
  }
  return std::abs(pairwise_sum(lhs) - pairwise_sum(rhs));
}

}  // namespace exph

#endif  // EXPH_CALCULUS_HPP
