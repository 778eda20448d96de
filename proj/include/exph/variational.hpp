#ifndef EXPH_VARIATIONAL_HPP
#define EXPH_VARIATIONAL_HPP

// First and second variation of the exponential horizontal energy, with
// finite-difference oracles (Richardson-extrapolated), the index quadratic
// form at critical maps, and a matrix-free operator realizing that form
// against the L2 pairing.

#include "calculus.hpp"

namespace exph {

// d/dt E(R_f(tV)) at t = 0: the tension pairing against V. Equal, to
// rounding, to the plain ambient pairing of V with the energy gradient.
inline double first_variation(const MapField& f, const VariationField& V) {
  validate_variation(V);
  const EnergyGradient eg = energy_and_gradient(f);
  const std::vector<double> tau = tension_from_gradient(f, eg);
  const MapGeometry& geo = eg.geo;
  std::vector<double> integrand(static_cast<size_t>(geo.nodes));
  for (Index node = 0; node < geo.nodes; ++node) {
    integrand[node] = -geo.weight[node] *
                      metric_dot(f.target, f.point(node), V.vec(node),
                                 tau.data() + node * geo.amb);
  }
  return pairwise_sum(integrand);
}

// ---------------------------------------------------------------------------
// Finite-difference oracles along retraction curves.

// Steps must be at least three, positive, strictly halving; Richardson
// extrapolation below assumes the ratio.
inline void validate_fd_steps(const std::vector<double>& steps) {
  if (steps.size() < 3)
    throw ConfigError("fd_steps: need at least 3 entries");
  for (size_t k = 0; k < steps.size(); ++k) {
    if (!(steps[k] > 0.0))
      throw ConfigError("fd_steps: entries must be positive");
    if (k > 0 && std::abs(steps[k - 1] / steps[k] - 2.0) > 1e-9)
      throw ConfigError("fd_steps: entries must halve (ratio 2)");
  }
}

struct OracleReport {
  double analytic = 0.0;
  std::vector<double> steps;
  std::vector<double> finite_difference;  // one estimate per step
  double extrapolated = 0.0;              // Richardson limit of the last three
  double observed_order = 0.0;            // 0 when differences degenerate
  double abs_error = 0.0;                 // |analytic - extrapolated|
  double rel_error = 0.0;                 // abs_error / max(|analytic|, eps)
};

namespace detail {

inline void richardson(OracleReport& r) {
  const size_t n = r.finite_difference.size();
  const double d1 = r.finite_difference[n - 3];
  const double d2 = r.finite_difference[n - 2];
  const double d3 = r.finite_difference[n - 1];
  const double g1 = std::abs(d1 - d2);
  const double g2 = std::abs(d2 - d3);
  const double scale = std::max({std::abs(d1), std::abs(d2), std::abs(d3), 1.0});
  if (g2 <= 1e-13 * scale || g1 <= 1e-13 * scale) {
    // Differences at rounding level: the coarsest answer is already converged.
    r.extrapolated = d3;
    r.observed_order = 0.0;
  } else {
    const double p = std::log2(g1 / g2);
    r.observed_order = p;
    const double denom = std::pow(2.0, p) - 1.0;
    r.extrapolated = (std::isfinite(p) && denom > 0.1)
                         ? d3 + (d3 - d2) / denom
                         : d3;
  }
  r.abs_error = std::abs(r.analytic - r.extrapolated);
  r.rel_error = r.abs_error / std::max(std::abs(r.analytic), 1e-300);
}

}  // namespace detail

// Centered difference of t -> E(R_f(tV)) against the analytic pairing.
inline OracleReport first_variation_oracle(const MapField& f,
                                           const VariationField& V,
                                           const std::vector<double>& steps) {
  validate_fd_steps(steps);
  OracleReport r;
  r.analytic = first_variation(f, V);
  r.steps = steps;
  for (double t : steps) {
    const double ep = exponential_energy(retract_map(f, V, t));
    const double em = exponential_energy(retract_map(f, V, -t));
    r.finite_difference.push_back((ep - em) / (2.0 * t));
  }
  detail::richardson(r);
  return r;
}

// ---------------------------------------------------------------------------
// Index form at a critical map.

// L2 mass per node: vol_weight * cellvol, carrying the conformal factor on
// the ball so plain ambient dots below integrate the target metric.
inline std::vector<double> mass_weights(const MapField& f,
                                        const MapGeometry& geo) {
  const FrameManifold& M = *f.manifold;
  std::vector<double> mass(static_cast<size_t>(geo.nodes));
  for (Index node = 0; node < geo.nodes; ++node) {
    double s = M.vol_weight[node] * M.grid.cell_volume;
    if (f.target.kind == TargetKind::Hyperbolic) {
      const double lam = geo.lambda[node];
      s *= lam * lam;
    }
    mass[node] = s;
  }
  return mass;
}

inline double l2_inner(const MapGeometry& geo, const std::vector<double>& mass,
                       const std::vector<double>& A,
                       const std::vector<double>& B) {
  std::vector<double> buf(static_cast<size_t>(geo.nodes));
  for (Index node = 0; node < geo.nodes; ++node)
    buf[node] = mass[node] * dot(A.data() + node * geo.amb,
                                 B.data() + node * geo.amb, geo.amb);
  return pairwise_sum(buf);
}

// Quadrature of the second-variation integrand for a tangent section V,
// with no criticality gate (callers gate). The divergence-squared term is
// the square of the summed pull-back/differential pairing.
inline double index_form_quadrature(const MapField& f, const MapGeometry& geo,
                                    const std::vector<double>& V) {
  const std::vector<std::vector<double>> q = pullback_horizontal(f, geo, V);
  const int amb = geo.amb;
  const int m = geo.m;
  std::vector<double> integrand(static_cast<size_t>(geo.nodes));
  parallel_for(geo.nodes, [&](Index lo, Index hi) {
    for (Index node = lo; node < hi; ++node) {
      double mu = 1.0;  // metric factor on ambient dots
      if (f.target.kind == TargetKind::Hyperbolic) {
        const double lam = geo.lambda[node];
        mu = lam * lam;
      }
      const double* v = V.data() + node * amb;
      double div = 0.0, qq = 0.0, curv = 0.0;
      for (int i = 0; i < m; ++i) {
        const double* u = geo.horiz[i].data() + node * amb;
        const double* qi = q[i].data() + node * amb;
        div += mu * dot(qi, u, amb);
        qq += mu * norm2(qi, amb);
        if (f.target.kind != TargetKind::Euclidean) {
          // <R(u,V)V,u>_h: +/- (|V|^2|u|^2 - <u,V>^2) in the target metric.
          const double sign =
              (f.target.kind == TargetKind::Sphere) ? 1.0 : -1.0;
          const double uv = mu * dot(u, v, amb);
          curv += sign * (mu * norm2(v, amb) * mu * norm2(u, amb) - uv * uv);
        }
      }
      integrand[node] = geo.weight[node] * (div * div + qq - curv);
    }
  });
  return pairwise_sum(integrand);
}

// Second variation d^2/dt^2 E(R_f(tV)) at a critical map. Throws off
// criticality unless explicitly allowed (the quadrature is still the stated
// integral, but it only equals the second derivative when tau vanishes).
inline double index_form(const MapField& f, const VariationField& V,
                         bool allow_non_critical = false) {
  validate_variation(V);
  const EnergyGradient eg = energy_and_gradient(f);
  if (!allow_non_critical) {
    const std::vector<double> tau = tension_from_gradient(f, eg);
    if (!is_critical(f, eg.geo, tau))
      throw NumericError(
          "index form evaluated at a non-critical map (sup tension " +
          std::to_string(tension_sup_norm(f, eg.geo, tau)) + ")");
  }
  return index_form_quadrature(f, eg.geo, V.vectors);
}

// Bilinear extension by polarization.
inline double index_form_polarized(const MapField& f, const VariationField& V,
                                   const VariationField& W,
                                   bool allow_non_critical = false) {
  const size_t n = V.vectors.size();
  VariationField plus{V.base, std::vector<double>(n)};
  VariationField minus{V.base, std::vector<double>(n)};
  for (size_t k = 0; k < n; ++k) {
    plus.vectors[k] = V.vectors[k] + W.vectors[k];
    minus.vectors[k] = V.vectors[k] - W.vectors[k];
  }
  return 0.25 * (index_form(f, plus, allow_non_critical) -
                 index_form(f, minus, allow_non_critical));
}

// Centered second difference of t -> E(R_f(tV)) against the index form.
inline OracleReport second_variation_oracle(const MapField& f,
                                            const VariationField& V,
                                            const std::vector<double>& steps,
                                            bool allow_non_critical = false) {
  validate_fd_steps(steps);
  OracleReport r;
  r.analytic = index_form(f, V, allow_non_critical);
  r.steps = steps;
  const double e0 = exponential_energy(f);
  for (double t : steps) {
    const double ep = exponential_energy(retract_map(f, V, t));
    const double em = exponential_energy(retract_map(f, V, -t));
    r.finite_difference.push_back((ep - 2.0 * e0 + em) / (t * t));
  }
  detail::richardson(r);
  return r;
}

// ---------------------------------------------------------------------------
// Matrix-free index operator: <W, L V>_ambient = I(V, W) for tangent V, W,
// obtained by moving the stencils off the W slot of the polarized quadrature.
// The companion mass weights realize the L2 pairing the Rayleigh quotient
// divides by.

inline std::vector<double> apply_index_operator(const MapField& f,
                                                const MapGeometry& geo,
                                                const std::vector<double>& V) {
  const FrameManifold& M = *f.manifold;
  const Grid& g = M.grid;
  const int amb = geo.amb;
  const int m = geo.m;
  const std::vector<std::vector<double>> q = pullback_horizontal(f, geo, V);

  // Divergence pairing scalar S = sum_i <q_i, u_i>_h per node.
  std::vector<double> S(static_cast<size_t>(g.nodes));
  parallel_for(g.nodes, [&](Index lo, Index hi) {
    for (Index node = lo; node < hi; ++node) {
      double mu = 1.0;
      if (f.target.kind == TargetKind::Hyperbolic) {
        const double lam = geo.lambda[node];
        mu = lam * lam;
      }
      double s = 0.0;
      for (int i = 0; i < m; ++i)
        s += mu * dot(q[i].data() + node * amb,
                      geo.horiz[i].data() + node * amb, amb);
      S[node] = s;
    }
  });

  std::vector<double> out(V.size(), 0.0);
  std::vector<double> y(V.size());  // per-axis gather buffer
  // Reused per node: y_i = a * mu * (S u_i + q_i) are what D_i W pairs with.
  for (int axis = 0; axis < g.naxes(); ++axis) {
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        double mu = 1.0;
        if (f.target.kind == TargetKind::Hyperbolic) {
          const double lam = geo.lambda[node];
          mu = lam * lam;
        }
        const double a = geo.weight[node];
        double* yn = y.data() + node * amb;
        for (int c = 0; c < amb; ++c) yn[c] = 0.0;
        for (int i = 0; i < m; ++i) {
          const double coef = M.frame_coeff(node, i, axis);
          if (coef == 0.0) continue;
          const double* u = geo.horiz[i].data() + node * amb;
          const double* qi = q[i].data() + node * amb;
          const double w = coef * a * mu;
          for (int c = 0; c < amb; ++c)
            yn[c] += w * (S[node] * u[c] + qi[c]);
        }
      }
    });
    add_axis_derivative(g, M.stencil, axis, y.data(), amb, -1.0, out.data());
  }

  // Pointwise terms, then the tangent projection on the sphere.
  parallel_for(g.nodes, [&](Index lo, Index hi) {
    std::array<double, 16> tmp, corr;
    for (Index node = lo; node < hi; ++node) {
      const double a = geo.weight[node];
      const double* v = V.data() + node * amb;
      double* o = out.data() + node * amb;
      if (f.target.kind == TargetKind::Sphere) {
        double uu = 0.0;
        for (int c = 0; c < amb; ++c) tmp[c] = 0.0;
        for (int i = 0; i < m; ++i) {
          const double* u = geo.horiz[i].data() + node * amb;
          const double uv = dot(u, v, amb);
          uu += norm2(u, amb);
          for (int c = 0; c < amb; ++c) tmp[c] += uv * u[c];
        }
        for (int c = 0; c < amb; ++c) o[c] += a * (tmp[c] - uu * v[c]);
        project_tangent(f.target, f.point(node), o, tmp.data());
        for (int c = 0; c < amb; ++c) o[c] = tmp[c];
      } else if (f.target.kind == TargetKind::Hyperbolic) {
        const double lam = geo.lambda[node];
        const double mu = lam * lam;
        double uu = 0.0;
        for (int c = 0; c < amb; ++c) tmp[c] = 0.0;
        for (int i = 0; i < m; ++i) {
          const double* u = geo.horiz[i].data() + node * amb;
          const double* qi = q[i].data() + node * amb;
          // Adjoint of the Christoffel correction in the varied slot.
          std::array<double, 16> yv;
          for (int c = 0; c < amb; ++c)
            yv[c] = mu * (S[node] * u[c] + qi[c]);
          ball_christoffel_adjoint(f.point(node), amb, u, yv.data(),
                                   corr.data());
          for (int c = 0; c < amb; ++c) tmp[c] += corr[c];
          const double uv = dot(u, v, amb);
          uu += norm2(u, amb);
          for (int c = 0; c < amb; ++c) tmp[c] -= mu * mu * uv * u[c];
        }
        for (int c = 0; c < amb; ++c)
          o[c] += a * (tmp[c] + mu * mu * uu * v[c]);
      }
    }
  });
  return out;
}

}  // namespace exph

#endif  // EXPH_VARIATIONAL_HPP
