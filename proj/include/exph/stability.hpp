#ifndef EXPH_STABILITY_HPP
#define EXPH_STABILITY_HPP

// Stability analysis at critical maps: parallel-field probes on spheres,
// the closed-form instability integral with its two-route cross-check,
// pointwise identity residuals, a Rayleigh-quotient minimizer for the
// smallest index eigenvalue, and the three-valued verdict.

#include <Eigen/Dense>

#include "variational.hpp"

namespace exph {

// Tangential projection of the a-th ambient basis vector along f.
inline VariationField sphere_parallel_field(const MapField& f, int a) {
  if (f.target.kind != TargetKind::Sphere)
    throw ConfigError("parallel fields require a sphere target");
  const int amb = f.target.ambient();
  if (a < 0 || a >= amb)
    throw ConfigError("parallel field index out of range");
  VariationField V{&f, std::vector<double>(f.values.size())};
  const Index nodes = f.manifold->grid.nodes;
  for (Index node = 0; node < nodes; ++node) {
    const double* p = f.point(node);
    double* v = V.vectors.data() + node * amb;
    const double b = p[a];
    for (int c = 0; c < amb; ++c) v[c] = -b * p[c];
    v[a] += 1.0;
  }
  return V;
}

// Quadrature of e^{e_f} |df_H|^2 (|df_H|^2 - (n-2)) dv on Sphere(n): the
// sign certificate behind the parallel-field instability argument.
inline double instability_integral(const MapField& f) {
  if (f.target.kind != TargetKind::Sphere)
    throw ConfigError("instability integral requires a sphere target");
  const MapGeometry geo = map_geometry(f);
  const double n = static_cast<double>(f.target.n);
  std::vector<double> buf(static_cast<size_t>(geo.nodes));
  for (Index node = 0; node < geo.nodes; ++node) {
    const double d2 = 2.0 * geo.density[node];  // |df_H|^2
    buf[node] = geo.weight[node] * d2 * (d2 - (n - 2.0));
  }
  return pairwise_sum(buf);
}

// Sum of the index form over the full set of projected ambient basis fields,
// computed two ways: probing the quadratic form, and the closed-form
// integrand the sum telescopes to. Both carry independent discretization
// error; agreement is relative at scale, with an absolute floor tied to the
// energy for near-cancelling sums.
struct SphereSumResult {
  double by_parallel_fields = 0.0;
  double by_closed_form = 0.0;
  bool crosscheck_ok = true;
};

inline SphereSumResult sphere_index_sum(const MapField& f) {
  if (f.target.kind != TargetKind::Sphere)
    throw ConfigError("sphere index sum requires a sphere target");
  const EnergyGradient eg = energy_and_gradient(f);
  {
    const std::vector<double> tau = tension_from_gradient(f, eg);
    if (!is_critical(f, eg.geo, tau))
      throw NumericError(
          "sphere index sum evaluated at a non-critical map (sup tension " +
          std::to_string(tension_sup_norm(f, eg.geo, tau)) + ")");
  }
  SphereSumResult r;
  const int amb = f.target.ambient();
  for (int a = 0; a < amb; ++a) {
    const VariationField V = sphere_parallel_field(f, a);
    r.by_parallel_fields += index_form_quadrature(f, eg.geo, V.vectors);
  }
  const double n = static_cast<double>(f.target.n);
  std::vector<double> buf(static_cast<size_t>(eg.geo.nodes));
  for (Index node = 0; node < eg.geo.nodes; ++node) {
    const double d2 = 2.0 * eg.geo.density[node];
    buf[node] = eg.geo.weight[node] * d2 * (d2 + (2.0 - n));
  }
  r.by_closed_form = pairwise_sum(buf);
  const double gap = std::abs(r.by_parallel_fields - r.by_closed_form);
  const double tol =
      1e-3 * std::max(std::abs(r.by_parallel_fields),
                      std::abs(r.by_closed_form)) +
      1e-5 * (1.0 + eg.geo.energy);
  r.crosscheck_ok = gap <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Pointwise identity residuals for sphere targets: the three sums over the
// projected basis fields against their closed right-hand sides, with left
// sides assembled through the generic pull-back derivative and curvature
// operator. Columns: quartic (divergence pairing squared vs |df_H|^4),
// pullback norm (vs |df_H|^2), curvature pairing (vs (n-1)|df_H|^2).

struct IdentityResiduals {
  double quartic = 0.0;
  double pullback_norm = 0.0;
  double curvature = 0.0;
};

inline std::vector<IdentityResiduals> check_sphere_identities_field(
    const MapField& f) {
  if (f.target.kind != TargetKind::Sphere)
    throw ConfigError("identity residuals require a sphere target");
  const MapGeometry geo = map_geometry(f);
  const int amb = geo.amb;
  const int m = geo.m;
  const Index nodes = geo.nodes;
  std::vector<double> lhs1(static_cast<size_t>(nodes), 0.0);
  std::vector<double> lhs2(static_cast<size_t>(nodes), 0.0);
  std::vector<double> lhs3(static_cast<size_t>(nodes), 0.0);
  for (int a = 0; a < amb; ++a) {
    const VariationField Va = sphere_parallel_field(f, a);
    const std::vector<std::vector<double>> q =
        pullback_horizontal(f, geo, Va.vectors);
    parallel_for(nodes, [&](Index lo, Index hi) {
      std::array<double, 16> rv;
      for (Index node = lo; node < hi; ++node) {
        double div = 0.0;
        const double* v = Va.vectors.data() + node * amb;
        for (int i = 0; i < m; ++i) {
          const double* u = geo.horiz[i].data() + node * amb;
          const double* qi = q[i].data() + node * amb;
          div += dot(qi, u, amb);
          lhs2[node] += norm2(qi, amb);
          curvature_operator(f.target, f.point(node), u, v, v, rv.data());
          lhs3[node] += dot(rv.data(), u, amb);
        }
        lhs1[node] += div * div;
      }
    });
  }
  std::vector<IdentityResiduals> out(static_cast<size_t>(nodes));
  const double n = static_cast<double>(f.target.n);
  for (Index node = 0; node < nodes; ++node) {
    const double d2 = 2.0 * geo.density[node];
    out[node].quartic = std::abs(lhs1[node] - d2 * d2);
    out[node].pullback_norm = std::abs(lhs2[node] - d2);
    out[node].curvature = std::abs(lhs3[node] - (n - 1.0) * d2);
  }
  return out;
}

inline IdentityResiduals check_sphere_identities(const MapField& f,
                                                 Index node) {
  return check_sphere_identities_field(f)[static_cast<size_t>(node)];
}

inline IdentityResiduals max_identity_residuals(const MapField& f) {
  IdentityResiduals mx;
  for (const IdentityResiduals& r : check_sphere_identities_field(f)) {
    mx.quartic = std::max(mx.quartic, r.quartic);
    mx.pullback_norm = std::max(mx.pullback_norm, r.pullback_norm);
    mx.curvature = std::max(mx.curvature, r.curvature);
  }
  return mx;
}

// ---------------------------------------------------------------------------
// Rayleigh-quotient minimization: matrix-free, restarted projected descent
// with an exact two-dimensional generalized eigensolve on span{V, D}.

struct MinRayleighOptions {
  Index iters = 100;
  Index samples = 4;
  uint64_t seed = 12345;
};

struct MinRayleighResult {
  double estimate = 0.0;
  std::vector<double> minimizer;  // L2-normalized
  bool converged = false;
};

namespace detail {

inline double plain_dot(const std::vector<double>& a,
                        const std::vector<double>& b) {
  std::vector<double> buf(a.size());
  for (size_t k = 0; k < a.size(); ++k) buf[k] = a[k] * b[k];
  return pairwise_sum(buf);
}

inline void project_field(const MapField& f, std::vector<double>& V) {
  if (f.target.kind != TargetKind::Sphere) return;
  const int amb = f.target.ambient();
  const Index nodes = f.manifold->grid.nodes;
  std::array<double, 16> tmp;
  for (Index node = 0; node < nodes; ++node) {
    double* v = V.data() + node * amb;
    project_tangent(f.target, f.point(node), v, tmp.data());
    for (int c = 0; c < amb; ++c) v[c] = tmp[c];
  }
}

inline std::vector<double> mass_multiply(const MapGeometry& geo,
                                         const std::vector<double>& mass,
                                         const std::vector<double>& V) {
  std::vector<double> out(V.size());
  for (Index node = 0; node < geo.nodes; ++node)
    for (int c = 0; c < geo.amb; ++c)
      out[node * geo.amb + c] = mass[node] * V[node * geo.amb + c];
  return out;
}

}  // namespace detail

inline MinRayleighResult min_rayleigh(const MapField& f,
                                      const MinRayleighOptions& opt = {}) {
  const EnergyGradient eg = energy_and_gradient(f);
  {
    const std::vector<double> tau = tension_from_gradient(f, eg);
    if (!is_critical(f, eg.geo, tau))
      throw NumericError(
          "Rayleigh minimization requires a critical map (sup tension " +
          std::to_string(tension_sup_norm(f, eg.geo, tau)) + ")");
  }
  const MapGeometry& geo = eg.geo;
  const int amb = geo.amb;
  const std::vector<double> mass = mass_weights(f, geo);

  // Starting sections: the best projected basis / constant field, then
  // seeded random smooth probes.
  std::vector<std::vector<double>> starts;
  {
    std::vector<double> best;
    double best_rho = std::numeric_limits<double>::infinity();
    for (int a = 0; a < amb; ++a) {
      std::vector<double> cand(f.values.size(), 0.0);
      if (f.target.kind == TargetKind::Sphere) {
        cand = sphere_parallel_field(f, a).vectors;
      } else {
        for (Index node = 0; node < geo.nodes; ++node)
          cand[node * amb + a] = 1.0;
      }
      const double nn = l2_inner(geo, mass, cand, cand);
      if (nn < 1e-20) continue;
      const double rho = index_form_quadrature(f, geo, cand) / nn;
      if (rho < best_rho) {
        best_rho = rho;
        best = std::move(cand);
      }
    }
    if (!best.empty()) starts.push_back(std::move(best));
  }
  for (Index s = 0; s < opt.samples; ++s) {
    Rng rng(opt.seed +
            0x9E3779B97F4A7C15ull * static_cast<uint64_t>(s + 1));
    starts.push_back(random_smooth_variation(f, rng).vectors);
  }

  MinRayleighResult best;
  best.estimate = std::numeric_limits<double>::infinity();
  for (std::vector<double>& V : starts) {
    double nn = l2_inner(geo, mass, V, V);
    if (nn < 1e-20) continue;
    double scale = 1.0 / std::sqrt(nn);
    for (double& x : V) x *= scale;
    double rho = 0.0;
    bool converged = false;
    for (Index it = 0; it < opt.iters; ++it) {
      const std::vector<double> LV = apply_index_operator(f, geo, V);
      const std::vector<double> MV = detail::mass_multiply(geo, mass, V);
      const double a11 = detail::plain_dot(V, LV);
      const double b11 = detail::plain_dot(V, MV);
      rho = a11 / b11;
      // Mass-preconditioned residual direction.
      std::vector<double> D(V.size());
      for (Index node = 0; node < geo.nodes; ++node) {
        const double inv = 1.0 / mass[node];
        for (int c = 0; c < amb; ++c) {
          const size_t k = static_cast<size_t>(node * amb + c);
          D[k] = -(LV[k] - rho * MV[k]) * inv;
        }
      }
      detail::project_field(f, D);
      const std::vector<double> MD = detail::mass_multiply(geo, mass, D);
      const double dMd = detail::plain_dot(D, MD);
      if (!(dMd > 1e-24)) {
        converged = true;
        break;
      }
      const double dscale = 1.0 / std::sqrt(dMd);
      for (double& x : D) x *= dscale;
      const std::vector<double> LD = apply_index_operator(f, geo, D);
      const std::vector<double> MD2 = detail::mass_multiply(geo, mass, D);
      Eigen::Matrix2d A, B;
      const double a12 = 0.5 * (detail::plain_dot(V, LD) + detail::plain_dot(D, LV));
      A << a11, a12, a12, detail::plain_dot(D, LD);
      const double b12 = detail::plain_dot(V, MD2);
      B << b11, b12, b12, detail::plain_dot(D, MD2);
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> ges(A, B);
      if (ges.info() != Eigen::Success) break;
      const double lam = ges.eigenvalues()(0);
      const Eigen::Vector2d w = ges.eigenvectors().col(0);
      for (size_t k = 0; k < V.size(); ++k)
        V[k] = w(0) * V[k] + w(1) * D[k];
      detail::project_field(f, V);
      nn = l2_inner(geo, mass, V, V);
      if (!(nn > 1e-24)) break;
      scale = 1.0 / std::sqrt(nn);
      for (double& x : V) x *= scale;
      if (std::abs(lam - rho) <= 1e-11 * (1.0 + std::abs(rho))) {
        rho = lam;
        converged = true;
        break;
      }
      rho = lam;
    }
    if (rho < best.estimate) {
      best.estimate = rho;
      best.minimizer = V;
      best.converged = converged;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Verdict assembly.

struct StabilityOptions {
  Index random_probes = 16;
  MinRayleighOptions rayleigh;
  double witness_tol = 1e-8;  // I < -tol * ||V||^2 certifies instability
  double criticality_tol = 1e-6;
  uint64_t seed = 12345;
};

struct StabilityReport {
  double energy = 0.0;
  double residual = 0.0;
  bool critical = false;
  double rayleigh_min = std::numeric_limits<double>::quiet_NaN();
  bool rayleigh_converged = false;
  bool has_sphere_data = false;
  double sphere_sum = std::numeric_limits<double>::quiet_NaN();
  double sphere_sum_closed_form = std::numeric_limits<double>::quiet_NaN();
  bool crosscheck_ok = true;
  double instability_integral_value =
      std::numeric_limits<double>::quiet_NaN();
  bool instability_test_conclusive = false;
  bool pointwise_condition = false;  // sup |df_H|^2 < n-2 on spheres
  IdentityResiduals identity_residual_max;
  std::string verdict = "inconclusive";
  bool has_witness = false;
  std::vector<double> witness;  // tangent section with I_H < 0, if any
  double witness_value = 0.0;   // I_H at the witness
  uint64_t seed = 0;
};

inline StabilityReport stability_verdict(const MapField& f,
                                         const StabilityOptions& opt = {}) {
  StabilityReport rep;
  rep.seed = opt.seed;
  const EnergyGradient eg = energy_and_gradient(f);
  const MapGeometry& geo = eg.geo;
  const std::vector<double> tau = tension_from_gradient(f, eg);
  rep.energy = geo.energy;
  rep.residual = tension_sup_norm(f, geo, tau);
  rep.critical = rep.residual <= opt.criticality_tol * (1.0 + geo.sup_density);
  if (!rep.critical) {
    rep.verdict = "inconclusive";  // index data not meaningful off criticality
    return rep;
  }

  const std::vector<double> mass = mass_weights(f, geo);
  double best_rho = std::numeric_limits<double>::infinity();
  double witness_rho = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& V) {
    const double nn = l2_inner(geo, mass, V, V);
    if (nn < 1e-20) return;
    const double I = index_form_quadrature(f, geo, V);
    const double rho = I / nn;
    if (rho < best_rho) best_rho = rho;
    if (I < -opt.witness_tol * nn && rho < witness_rho) {
      witness_rho = rho;
      rep.has_witness = true;
      rep.witness = V;
      rep.witness_value = I;
    }
  };

  if (f.target.kind == TargetKind::Sphere) {
    for (int a = 0; a < f.target.ambient(); ++a)
      consider(sphere_parallel_field(f, a).vectors);
    const SphereSumResult s = sphere_index_sum(f);
    rep.has_sphere_data = true;
    rep.sphere_sum = s.by_parallel_fields;
    rep.sphere_sum_closed_form = s.by_closed_form;
    rep.crosscheck_ok = s.crosscheck_ok;
    rep.instability_integral_value = instability_integral(f);
    rep.instability_test_conclusive =
        rep.instability_integral_value < -1e-3 * std::max(1.0, geo.energy);
    rep.pointwise_condition =
        2.0 * geo.sup_density < static_cast<double>(f.target.n) - 2.0;
    rep.identity_residual_max = max_identity_residuals(f);
  }
  for (Index k = 0; k < opt.random_probes; ++k) {
    Rng rng(opt.seed +
            0xD1B54A32D192ED03ull * static_cast<uint64_t>(k + 1));
    consider(random_smooth_variation(f, rng).vectors);
  }
  MinRayleighOptions ropt = opt.rayleigh;
  ropt.seed = opt.seed;
  const MinRayleighResult mr = min_rayleigh(f, ropt);
  rep.rayleigh_converged = mr.converged;
  consider(mr.minimizer);
  rep.rayleigh_min = std::min(mr.estimate, best_rho);

  if (rep.has_witness) {
    rep.verdict = "unstable";
  } else if (f.target.flat_or_negative() ||
             best_rho >= -opt.witness_tol) {
    rep.verdict = "stable-evidence";
  } else {
    rep.verdict = "inconclusive";
  }
  return rep;
}

}  // namespace exph

#endif  // EXPH_STABILITY_HPP
