#ifndef EXPH_RUNNER_HPP
#define EXPH_RUNNER_HPP

// Task orchestration: build the manifold, target, and initial map from a
// RunConfig, run the requested task, and emit the deterministic artifacts
// (manifest always; task outputs per the format contracts in io.hpp).

#include "io.hpp"

namespace exph {

namespace detail {

inline MapField build_initial_map(const RunConfig& cfg, const FrameManifold& M,
                                  const TargetManifold& tgt) {
  const InitialMapSpec& im = cfg.initial_map;
  if (im.kind == "constant") return constant_map(M, tgt, im.point);
  if (im.kind == "eigenmap") return eigenmap(M, tgt, im.k, im.plane);
  if (im.kind == "perturbed_phase")
    return perturbed_phase_map(M, tgt, im.epsilon, im.plane);
  // kind == "file" (config validation rejects anything else)
  std::string path = im.path;
  if (!std::filesystem::exists(path) && !cfg.source_dir.empty()) {
    const std::string alt =
        (std::filesystem::path(cfg.source_dir) / path).string();
    if (std::filesystem::exists(alt)) path = alt;
  }
  if (!std::filesystem::exists(path))
    throw ConfigError("initial_map.path: file not found: '" + im.path + "'");
  const TableData t = read_table(path);
  if (t.label != "map")
    throw ConfigError("initial_map.path: '" + path + "' is not a map table");
  if (t.dims != cfg.dims)
    throw ConfigError("initial_map.path: table dims do not match manifold.dims");
  if (t.target_kind != cfg.target_kind || t.target_n != cfg.target_n)
    throw ConfigError("initial_map.path: table target does not match target");
  MapField f;
  f.manifold = &M;
  f.target = tgt;
  f.values = t.values;
  validate_map(f);
  return f;
}

}  // namespace detail

inline void run_config(const RunConfig& cfg_in,
                       const std::optional<std::string>& out_override,
                       const std::optional<uint64_t>& seed_override,
                       int threads) {
  RunConfig cfg = cfg_in;
  if (out_override) cfg.output_dir = *out_override;
  if (threads < 1) throw ConfigError("--threads: must be >= 1");
  thread_count() = threads;
  const uint64_t seed = seed_override ? *seed_override : cfg.seeds.front();

  const FrameManifold M =
      build_framed_torus(cfg.preset, cfg.dims, cfg.stencil_order, cfg.params);
  const TargetManifold tgt = TargetManifold::make(cfg.target_kind, cfg.target_n);
  MapField f = detail::build_initial_map(cfg, M, tgt);
  validate_map(f);

  const std::filesystem::path out(cfg.output_dir);
  std::filesystem::create_directories(out);
  write_json((out / "manifest.json").string(),
             manifest_json(cfg, M.grid, seed, threads));

  if (cfg.task == "flow") {
    FlowOptions fo;
    fo.residual_tol = cfg.residual_tol;
    const FlowResult res = minimize_energy(f, fo);
    write_trace_csv((out / "trace.csv").string(), res.trace);
    write_table((out / "final.map").string(), "map", M.grid, tgt,
                res.final_map.values);
    ordered_json j;
    j["converged"] = res.converged;
    j["stalled"] = res.stalled;
    j["iterations"] = res.iterations;
    j["final_energy"] = res.final_energy;
    j["final_residual"] = res.final_residual;
    write_json((out / "flow.json").string(), j);
    return;
  }

  if (cfg.task == "check-variation") {
    Rng rng(seed);
    const VariationField V = random_smooth_variation(f, rng);
    const OracleReport first = first_variation_oracle(f, V, cfg.fd_steps);
    write_json((out / "first_variation.json").string(),
               oracle_report_json(first));
    const EnergyGradient eg = energy_and_gradient(f);
    const std::vector<double> tau = tension_from_gradient(f, eg);
    if (is_critical(f, eg.geo, tau, cfg.residual_tol)) {
      const OracleReport second = second_variation_oracle(f, V, cfg.fd_steps);
      write_json((out / "second_variation.json").string(),
                 oracle_report_json(second));
    } else {
      ordered_json j;
      j["skipped"] = true;
      j["reason"] = "map is not critical (sup tension " +
                    detail::fmt17(tension_sup_norm(f, eg.geo, tau)) +
                    "); the index form equals the second derivative only "
                    "at critical maps";
      write_json((out / "second_variation.json").string(), j);
    }
    return;
  }

  if (cfg.task == "stability") {
    StabilityOptions so;
    so.seed = seed;
    so.criticality_tol = cfg.residual_tol;
    const StabilityReport rep = stability_verdict(f, so);
    std::string ref;
    if (rep.has_witness) {
      ref = "witness.map";
      write_table((out / ref).string(), "variation", M.grid, tgt, rep.witness);
    }
    write_json((out / "report.json").string(),
               stability_report_json(rep, ref));
    return;
  }

  // identities
  if (tgt.kind != TargetKind::Sphere)
    throw ConfigError("task: identities requires a sphere target");
  const std::vector<IdentityResiduals> rows = check_sphere_identities_field(f);
  write_identities_csv((out / "identities.csv").string(), rows);
  Rng rng(seed);
  const VariationField W = random_smooth_variation(f, rng);
  ordered_json j;
  j["divergence_identity_gap"] = divergence_identity_gap(f, W);
  IdentityResiduals mx;
  for (const IdentityResiduals& r : rows) {
    mx.quartic = std::max(mx.quartic, r.quartic);
    mx.pullback_norm = std::max(mx.pullback_norm, r.pullback_norm);
    mx.curvature = std::max(mx.curvature, r.curvature);
  }
  j["identity_residual_max"] = {{"quartic", mx.quartic},
                                {"pullback_norm", mx.pullback_norm},
                                {"curvature", mx.curvature}};
  j["seed"] = seed;
  write_json((out / "identities.json").string(), j);
}

}  // namespace exph

#endif  // EXPH_RUNNER_HPP
