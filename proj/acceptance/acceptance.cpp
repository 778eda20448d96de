// Acceptance gate: nine numbered behavior checks, one PASS/FAIL line each.
// Exit status 0 only when every criterion holds at its pinned tolerance.

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <exph/exph.hpp>

#include "../tests/fixtures.hpp"

using namespace exph;

namespace {

int g_failures = 0;

std::string g3(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

void run(int idx, const std::string& what,
         const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  if (ok) {
    std::printf("PASS criterion %d: %s\n", idx, what.c_str());
  } else {
    std::printf("FAIL criterion %d: %s -- %s\n", idx, what.c_str(),
                detail.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

// --------------------------------------------------------------------------
// 1. The analytic first variation matches centered finite differences for
//    every preset and every target family, at random smooth data.

bool criterion1(std::string& detail) {
  const std::vector<double> steps{1e-2, 5e-3, 2.5e-3};
  struct Case {
    const char* preset;
    const char* kind;
    int n;
    int seeds;
  };
  const std::vector<Case> cases{
      {"flat", "sphere", 3, 2},      {"flat", "euclidean", 3, 2},
      {"flat", "hyperbolic", 3, 2},  {"stretched", "sphere", 3, 2},
      {"stretched", "euclidean", 3, 2}, {"stretched", "hyperbolic", 3, 2},
      {"twisted", "sphere", 3, 2},   {"twisted", "euclidean", 3, 2},
      {"twisted", "hyperbolic", 3, 2},
      {"flat", "sphere", 5, 1},      {"flat", "euclidean", 2, 1},
      {"flat", "hyperbolic", 2, 1}};
  double worst = 0.0;
  std::string worst_case;
  int checked = 0;
  int case_id = 0;
  for (const Case& c : cases) {
    const FrameManifold M = build_framed_torus(c.preset, {24, 24, 24});
    const TargetManifold t = TargetManifold::make(c.kind, c.n);
    for (int s = 0; s < c.seeds; ++s) {
      Rng rng(1000 + 10 * case_id + s);
      const MapField f = random_smooth_map(M, t, rng);
      const VariationField V = random_smooth_variation(f, rng);
      const OracleReport r = first_variation_oracle(f, V, steps);
      ++checked;
      const double score =
          std::abs(r.analytic) >= 1e-4 ? r.rel_error : r.abs_error / 1e-2;
      const bool ok = std::abs(r.analytic) >= 1e-4 ? (r.rel_error <= 1e-4)
                                                   : (r.abs_error <= 1e-6);
      if (score > worst) {
        worst = score;
        worst_case = std::string(c.preset) + "/" + c.kind + "(" +
                     std::to_string(c.n) + ")";
      }
      if (!ok) {
        detail = worst_case + ": analytic " + g3(r.analytic) + ", rel " +
                 g3(r.rel_error) + ", abs " + g3(r.abs_error);
        return false;
      }
    }
    ++case_id;
  }
  detail = std::to_string(checked) + " cases, worst score " + g3(worst) +
           " at " + worst_case;
  return true;
}

// --------------------------------------------------------------------------
// 2. At a critical map, the quadratic index form equals the second
//    derivative of the energy along retraction curves.

bool criterion2(std::string& detail) {
  const FrameManifold M = build_framed_torus("flat", {32, 32, 32}, 6);
  const TargetManifold t = TargetManifold::make("sphere", 5);
  const MapField f = eigenmap(M, t, 1);
  const MapGeometry geo = map_geometry(f);
  const std::vector<double> tau = tension_field(f);
  if (!is_critical(f, geo, tau, 1e-8)) {
    detail = "start map is not critical: sup tension " +
             g3(tension_sup_norm(f, geo, tau));
    return false;
  }
  const std::vector<double> steps{2e-2, 1e-2, 5e-3};
  const double escale = 1.0 + exponential_energy(f);
  double worst = 0.0;
  std::vector<VariationField> fields;
  for (int k = 0; k < 10; ++k) {
    Rng rng(100 + k);
    fields.push_back(random_smooth_variation(f, rng));
  }
  for (int a = 0; a < t.ambient(); ++a)
    fields.push_back(sphere_parallel_field(f, a));
  for (size_t k = 0; k < fields.size(); ++k) {
    const OracleReport r = second_variation_oracle(f, fields[k], steps);
    const bool ok = std::abs(r.analytic) >= 1e-4 * escale
                        ? (r.rel_error <= 1e-3)
                        : (r.abs_error <= 1e-6 * escale);
    worst = std::max(worst, r.rel_error);
    if (!ok) {
      detail = "field " + std::to_string(k) + ": analytic " +
               g3(r.analytic) + ", extrapolated " + g3(r.extrapolated) +
               ", rel " + g3(r.rel_error);
      return false;
    }
  }
  detail = std::to_string(fields.size()) + " fields, worst rel " + g3(worst);
  return true;
}

// --------------------------------------------------------------------------
// 3. The exact-adjoint tension and the three-term geometric assembly agree
//    at second order under grid refinement.

bool criterion3(std::string& detail) {
  auto gap = [](Index n) {
    const FrameManifold M = build_framed_torus("stretched", {n, n, n});
    const MapField f = exph_fixtures::gentle_sphere_map(M);
    const std::vector<double> exact = tension_field(f);
    const std::vector<double> geom = tension_field_geometric(f);
    double sup = 0.0;
    for (size_t k = 0; k < exact.size(); ++k)
      sup = std::max(sup, std::abs(exact[k] - geom[k]));
    return sup;
  };
  const double g1 = gap(16), g2 = gap(32), g3v = gap(64);
  const double p12 = std::log2(g1 / g2);
  const double p23 = std::log2(g2 / g3v);
  detail = "gaps " + g3(g1) + " / " + g3(g2) + " / " + g3(g3v) +
           ", observed orders " + g3(p12) + ", " + g3(p23);
  return p12 >= 1.8 && p23 >= 1.8;
}

// --------------------------------------------------------------------------
// 4. The pointwise sphere identities hold at an eigenmap to grid accuracy.

bool criterion4(std::string& detail) {
  const FrameManifold M = build_framed_torus("flat", {128, 4, 4}, 6);
  const TargetManifold t = TargetManifold::make("sphere", 5);
  const MapField f = eigenmap(M, t, 1);
  const IdentityResiduals mx = max_identity_residuals(f);
  detail = "quartic " + g3(mx.quartic) + ", pullback " +
           g3(mx.pullback_norm) + ", curvature " + g3(mx.curvature);
  return mx.quartic <= 1e-6 && mx.pullback_norm <= 1e-6 &&
         mx.curvature <= 1e-6;
}

// --------------------------------------------------------------------------
// 5. The parallel-field index sum matches its closed form for the standard
//    eigenmap into the five-sphere and certifies instability with a witness.

bool criterion5(std::string& detail) {
  const FrameManifold M = build_framed_torus("flat", {48, 48, 48}, 4);
  const TargetManifold t = TargetManifold::make("sphere", 5);
  const MapField f = eigenmap(M, t, 1);
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  const double expect = -2.0 * std::exp(0.5) * vol;
  const SphereSumResult sum = sphere_index_sum(f);
  const double rel_closed =
      std::abs(sum.by_parallel_fields - expect) / std::abs(expect);
  const double rel_routes =
      std::abs(sum.by_parallel_fields - sum.by_closed_form) /
      std::abs(expect);
  const StabilityReport rep = stability_verdict(f);
  detail = "sum " + g3(sum.by_parallel_fields) + " vs closed form " +
           g3(expect) + " (rel " + g3(rel_closed) + "), route gap rel " +
           g3(rel_routes) + ", verdict " + rep.verdict;
  return rel_closed <= 1e-3 && rel_routes <= 1e-3 && sum.crosscheck_ok &&
         rep.verdict == "unstable" && rep.has_witness &&
         rep.witness_value < 0.0;
}

// --------------------------------------------------------------------------
// 6. The target-dimension threshold separates the borderline three-sphere,
//    where the integral criterion is inconclusive, from the five-sphere,
//    where the pointwise bound certifies instability.

bool criterion6(std::string& detail) {
  const FrameManifold M = build_framed_torus("flat", {128, 4, 4}, 6);
  const MapField f3 = eigenmap(M, TargetManifold::make("sphere", 3), 1);
  const StabilityReport r3 = stability_verdict(f3);
  const bool border_ok = std::abs(r3.sphere_sum) <= 1e-3 &&
                         std::abs(r3.sphere_sum_closed_form) <= 1e-3 &&
                         r3.crosscheck_ok && !r3.instability_test_conclusive;
  const MapField f5 = eigenmap(M, TargetManifold::make("sphere", 5), 1);
  const StabilityReport r5 = stability_verdict(f5);
  const bool sharp_ok = r5.pointwise_condition &&
                        r5.instability_test_conclusive &&
                        r5.verdict == "unstable" && r5.has_witness;
  detail = "three-sphere sum " + g3(r3.sphere_sum) + " (conclusive: " +
           (r3.instability_test_conclusive ? "yes" : "no") +
           "), five-sphere integral " + g3(r5.instability_integral_value) +
           ", verdict " + r5.verdict;
  return border_ok && sharp_ok;
}

// --------------------------------------------------------------------------
// 7. Gradient descent reaches stable critical maps when the target carries
//    no positive curvature: flat targets from random starts, and the
//    negatively curved ball from a constant start.

bool criterion7(std::string& detail) {
  const FrameManifold M = build_framed_torus("flat", {16, 16, 16});
  StabilityOptions so;
  so.random_probes = 100;

  Rng rng(7);
  const MapField f0 =
      random_smooth_map(M, TargetManifold::make("euclidean", 3), rng);
  const FlowResult re = minimize_energy(f0);
  if (!re.converged) {
    detail = "flat-target flow did not converge (residual " +
             g3(re.final_residual) + ")";
    return false;
  }
  const StabilityReport rpe = stability_verdict(re.final_map, so);

  const MapField h0 = constant_map(M, TargetManifold::make("hyperbolic", 3),
                                   {0.2, -0.1, 0.3});
  const FlowResult rh = minimize_energy(h0);
  if (!rh.converged) {
    detail = "ball-target flow did not converge (residual " +
             g3(rh.final_residual) + ")";
    return false;
  }
  const StabilityReport rph = stability_verdict(rh.final_map, so);

  detail = "flat target: verdict " + rpe.verdict + ", rayleigh " +
           g3(rpe.rayleigh_min) + "; ball target: verdict " + rph.verdict +
           ", rayleigh " + g3(rph.rayleigh_min);
  return rpe.verdict == "stable-evidence" && !rpe.has_witness &&
         rpe.rayleigh_min >= -1e-6 && rph.verdict == "stable-evidence" &&
         !rph.has_witness && rph.rayleigh_min >= -1e-6;
}

// --------------------------------------------------------------------------
// 8. Gradient descent recovers the eigenmap energy level from a perturbed
//    phase, and the limit's density is constant at the symbol level.

bool criterion8(std::string& detail) {
  const FrameManifold M = build_framed_torus("flat", {24, 24, 24}, 6);
  const TargetManifold t = TargetManifold::make("sphere", 5);
  const MapField f0 = perturbed_phase_map(M, t, 0.1);
  const FlowResult res = minimize_energy(f0);
  if (!res.converged) {
    detail = "flow did not converge (residual " + g3(res.final_residual) +
             " after " + std::to_string(res.iterations) + " iterations)";
    return false;
  }
  const double vol = kTwoPi * kTwoPi * kTwoPi;
  const double expect = std::exp(0.5) * vol;
  const double rel = std::abs(res.final_energy - expect) / expect;
  const double s = M.stencil.symbol(M.grid.spacing[0]);
  const MapGeometry geo = map_geometry(res.final_map);
  double sup = 0.0;
  for (Index node = 0; node < geo.nodes; ++node)
    sup = std::max(sup, std::abs(2.0 * geo.density[node] - s * s));
  detail = "final energy " + g3(res.final_energy) + " vs " + g3(expect) +
           " (rel " + g3(rel) + "), density flatness " + g3(sup) + " in " +
           std::to_string(res.iterations) + " iterations";
  return rel <= 1e-4 && sup <= 1e-4;
}

// --------------------------------------------------------------------------
// 9. The frame connection is metric-compatible and torsion-free on every
//    preset, and finite-difference structure functions from raw frame
//    coefficients converge at second order.

bool criterion9(std::string& detail) {
  double worst_skew = 0.0, worst_torsion = 0.0;
  for (const char* preset : {"flat", "stretched", "twisted"}) {
    const FrameManifold M = build_framed_torus(preset, {12, 12, 12});
    const int nA = M.nA();
    for (Index node = 0; node < M.grid.nodes; ++node)
      for (int A = 0; A < nA; ++A)
        for (int B = 0; B < nA; ++B)
          for (int C = 0; C < nA; ++C) {
            worst_skew = std::max(
                worst_skew, std::abs(M.gamma_fn(node, A, B, C) +
                                     M.gamma_fn(node, A, C, B)));
            worst_torsion = std::max(
                worst_torsion,
                std::abs(M.gamma_fn(node, A, B, C) -
                         M.gamma_fn(node, B, A, C) -
                         M.structure_fn(node, A, B, C)));
          }
  }
  if (worst_skew > 1e-12 || worst_torsion > 1e-12) {
    detail = "connection residuals: skew " + g3(worst_skew) + ", torsion " +
             g3(worst_torsion);
    return false;
  }

  auto fd_error = [](const char* preset, Index n) {
    const FrameManifold ref = build_framed_torus(preset, {n, n, n});
    const FrameManifold fd =
        build_custom_torus(ref.grid.dims, ref.m, ref.d, ref.frame);
    double sup = 0.0;
    for (size_t k = 0; k < ref.structure.size(); ++k)
      sup = std::max(sup, std::abs(ref.structure[k] - fd.structure[k]));
    return sup;
  };
  std::string rates;
  for (const char* preset : {"stretched", "twisted"}) {
    const double e1 = fd_error(preset, 12);
    const double e2 = fd_error(preset, 24);
    const double e3 = fd_error(preset, 48);
    const double r1 = e1 / e2;
    const double r2 = e2 / e3;
    rates += std::string(preset) + " ratios " + g3(r1) + ", " + g3(r2) + "; ";
    if (r1 < 3.2 || r1 > 4.8 || r2 < 3.2 || r2 > 4.8) {
      detail = rates + "outside [3.2, 4.8]";
      return false;
    }
  }
  detail = "connection residuals at rounding; " + rates;
  return true;
}

}  // namespace

int main() {
  run(1, "analytic first variation matches centered finite differences "
         "across presets and targets", criterion1);
  run(2, "index form equals the second energy derivative at a critical map",
      criterion2);
  run(3, "exact-adjoint and geometric tension assemblies agree at second "
         "order", criterion3);
  run(4, "sphere identities hold at an eigenmap to grid accuracy",
      criterion4);
  run(5, "parallel-field index sum matches its closed form and certifies "
         "instability", criterion5);
  run(6, "dimension threshold separates borderline from conclusive "
         "instability", criterion6);
  run(7, "descent reaches stable critical maps for flat and negatively "
         "curved targets", criterion7);
  run(8, "descent recovers the eigenmap energy level from a perturbed start",
      criterion8);
  run(9, "frame connection is metric-compatible and torsion-free; "
         "finite-difference structure functions converge at second order",
      criterion9);
  if (g_failures > 0) {
    std::printf("%d of 9 criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
