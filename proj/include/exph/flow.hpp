#ifndef EXPH_FLOW_HPP
#define EXPH_FLOW_HPP

// Retraction-based descent for the exponential horizontal energy:
// backtracking line search along d = exp(e_f) * tau_H, with an optional
// symmetric positive low-pass applied to the direction. Centered stencils
// are exactly blind to the per-axis alternating (Nyquist) mode, so raw
// descent can drift into spurious sawtooth states the energy cannot see;
// the (1,2,1)/4 filter vanishes on exactly that mode while preserving every
// critical point of the discrete energy (the filtered direction is zero iff
// tau pairs to zero against all filtered fields, and the accept test below
// falls back to the raw direction whenever filtering destroys descent).

#include "variational.hpp"

namespace exph {

struct FlowOptions {
  Index max_iterations = 20000;
  double residual_tol = 1e-6;   // sup |tau_H|_h target
  double step_init = 1.0;
  double backtrack = 0.5;
  double armijo_c = 1e-4;
  double step_min = 1e-12;
  bool smooth_direction = true;
};

struct FlowTraceRow {
  Index iteration = 0;
  double energy = 0.0;
  double residual = 0.0;
  double step = 0.0;  // step accepted from this iterate; 0 on the final row
};

struct FlowResult {
  std::vector<FlowTraceRow> trace;
  MapField final_map;
  bool converged = false;
  bool stalled = false;  // line search hit step_min before the tolerance
  Index iterations = 0;
  double final_energy = 0.0;
  double final_residual = 0.0;
};

namespace detail {

// Product of the per-axis (1,2,1)/4 filters; tangent-projected afterwards on
// the sphere so the direction stays admissible.
inline void smooth_direction_field(const MapField& f, std::vector<double>& d) {
  const Grid& g = f.manifold->grid;
  const int amb = f.target.ambient();
  std::vector<double> scratch(d.size());
  for (int axis = 0; axis < g.naxes(); ++axis)
    smooth_axis(g, axis, amb, d, scratch);
  if (f.target.kind == TargetKind::Sphere) {
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      std::array<double, 16> proj;
      for (Index node = lo; node < hi; ++node) {
        double* dn = d.data() + node * amb;
        project_tangent(f.target, f.point(node), dn, proj.data());
        for (int c = 0; c < amb; ++c) dn[c] = proj[c];
      }
    });
  }
}

inline double pairing(const std::vector<double>& a,
                      const std::vector<double>& b) {
  std::vector<double> buf(a.size());
  for (size_t k = 0; k < a.size(); ++k) buf[k] = a[k] * b[k];
  return pairwise_sum(buf);
}

}  // namespace detail

inline FlowResult minimize_energy(const MapField& start,
                                  const FlowOptions& opt = {}) {
  FlowResult res;
  res.final_map = start;
  MapField& f = res.final_map;
  const Grid& g = f.manifold->grid;
  const int amb = f.target.ambient();

  for (Index iter = 0; iter <= opt.max_iterations; ++iter) {
    const EnergyGradient eg = energy_and_gradient(f);
    const std::vector<double> tau = tension_from_gradient(f, eg);
    const double residual = tension_sup_norm(f, eg.geo, tau);
    const double energy = eg.geo.energy;
    res.iterations = iter;
    res.final_energy = energy;
    res.final_residual = residual;

    if (residual <= opt.residual_tol) {
      res.trace.push_back({iter, energy, residual, 0.0});
      res.converged = true;
      return res;
    }
    if (iter == opt.max_iterations) {
      res.trace.push_back({iter, energy, residual, 0.0});
      return res;  // budget exhausted, neither converged nor stalled
    }

    // Descent direction: pointwise exp(e_f) tau, optionally low-passed.
    std::vector<double> d(f.values.size());
    parallel_for(g.nodes, [&](Index lo, Index hi) {
      for (Index node = lo; node < hi; ++node) {
        const double s = std::exp(eg.geo.density[node]);
        const double* tn = tau.data() + node * amb;
        double* dn = d.data() + node * amb;
        for (int c = 0; c < amb; ++c) dn[c] = s * tn[c];
      }
    });
    double slope = 0.0;
    if (opt.smooth_direction) {
      std::vector<double> filtered = d;
      detail::smooth_direction_field(f, filtered);
      const double g_filtered = detail::pairing(filtered, eg.grad);
      if (g_filtered < 0.0) {
        d.swap(filtered);
        slope = g_filtered;
      } else {
        slope = detail::pairing(d, eg.grad);
      }
    } else {
      slope = detail::pairing(d, eg.grad);
    }
    if (!(slope < 0.0)) {
      // No descent available along tau at working precision.
      res.trace.push_back({iter, energy, residual, 0.0});
      res.stalled = true;
      return res;
    }

    // Cap the first trial so single-node moves stay modest on curved targets.
    double dmax = 0.0;
    for (Index node = 0; node < g.nodes; ++node)
      dmax = std::max(dmax, norm2(d.data() + node * amb, amb));
    dmax = std::sqrt(dmax);
    double t = std::min(opt.step_init, 0.5 / std::max(dmax, 1e-30));

    const VariationField dir{&f, d};
    bool accepted = false;
    while (t >= opt.step_min) {
      try {
        MapField trial = retract_map(f, dir, t);
        validate_map(trial);
        const double e_t = exponential_energy(trial);
        if (e_t <= energy + opt.armijo_c * t * slope) {
          res.trace.push_back({iter, energy, residual, t});
          f = std::move(trial);
          accepted = true;
          break;
        }
      } catch (const NumericError&) {
        // Trial left the admissible set (ball exit, chord guard, overflow):
        // treat as a rejected step.
      }
      t *= opt.backtrack;
    }
    if (!accepted) {
      res.trace.push_back({iter, energy, residual, 0.0});
      res.stalled = true;
      return res;
    }
  }
  return res;  // unreachable
}

}  // namespace exph

#endif  // EXPH_FLOW_HPP
