#ifndef EXPH_IO_HPP
#define EXPH_IO_HPP

// Run configuration, deterministic file formats (map/field tables, CSV
// traces, JSON reports), and the run manifest. All serialization is
// fixed-order and locale-independent so identical config + seed produce
// byte-identical artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "stability.hpp"
#include "flow.hpp"

namespace exph {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// RunConfig

struct InitialMapSpec {
  std::string kind;           // constant | eigenmap | perturbed_phase | file
  std::vector<double> point;  // constant
  int k = 1;                  // eigenmap
  std::array<int, 2> plane{0, 1};
  double epsilon = 0.1;       // perturbed_phase
  std::string path;           // file
};

struct RunConfig {
  std::string preset = "flat";
  std::vector<Index> dims{16, 16, 16};
  PresetParams params;
  std::string target_kind = "sphere";
  int target_n = 2;
  InitialMapSpec initial_map;
  std::string task = "flow";
  int stencil_order = 2;
  double residual_tol = 1e-6;
  std::vector<uint64_t> seeds{12345};
  std::vector<double> fd_steps{1e-2, 5e-3, 2.5e-3};
  std::string output_dir = "out";
  std::string source_dir;  // directory of the config file, for relative paths
  std::string raw_bytes;   // verbatim config text, hashed into the manifest
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const std::string& section,
                                           const std::string& key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(section + "." + key + ": missing required field");
  return *it;
}

}  // namespace detail

inline RunConfig parse_config_json(const nlohmann::json& j,
                                   const std::string& source_dir) {
  RunConfig cfg;
  cfg.source_dir = source_dir;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  const nlohmann::json& man = detail::require_field(j, "config", "manifold");
  cfg.preset = detail::require_field(man, "manifold", "preset")
                   .get<std::string>();
  if (cfg.preset != "flat" && cfg.preset != "stretched" &&
      cfg.preset != "twisted")
    throw ConfigError("manifold.preset: unknown preset '" + cfg.preset + "'");
  const nlohmann::json& dims = detail::require_field(man, "manifold", "dims");
  if (!dims.is_array() || dims.size() != 3)
    throw ConfigError("manifold.dims: presets use exactly 3 axes");
  cfg.dims.clear();
  for (const auto& d : dims) {
    if (!d.is_number_integer() || d.get<Index>() < 4)
      throw ConfigError("manifold.dims: each extent must be an integer >= 4");
    cfg.dims.push_back(d.get<Index>());
  }
  if (man.contains("params")) {
    const nlohmann::json& p = man["params"];
    if (p.contains("stretch_amplitude")) {
      cfg.params.stretch_amplitude = p["stretch_amplitude"].get<double>();
      if (!(std::abs(cfg.params.stretch_amplitude) < 1.0))
        throw ConfigError(
            "manifold.params.stretch_amplitude: must satisfy |amp| < 1");
    }
    if (p.contains("twist_lambda"))
      cfg.params.twist_lambda = p["twist_lambda"].get<double>();
  }

  const nlohmann::json& tgt = detail::require_field(j, "config", "target");
  cfg.target_kind = detail::require_field(tgt, "target", "kind")
                        .get<std::string>();
  if (cfg.target_kind != "sphere" && cfg.target_kind != "euclidean" &&
      cfg.target_kind != "hyperbolic")
    throw ConfigError("target.kind: unknown kind '" + cfg.target_kind + "'");
  cfg.target_n = detail::require_field(tgt, "target", "n").get<int>();
  if (cfg.target_n < 1 || cfg.target_n > 15)
    throw ConfigError("target.n: must be between 1 and 15");

  const nlohmann::json& im = detail::require_field(j, "config", "initial_map");
  cfg.initial_map.kind = detail::require_field(im, "initial_map", "kind")
                             .get<std::string>();
  const std::string& ik = cfg.initial_map.kind;
  if (ik == "constant") {
    const nlohmann::json& pt = detail::require_field(im, "initial_map", "point");
    if (!pt.is_array())
      throw ConfigError("initial_map.point: must be an array");
    for (const auto& x : pt) cfg.initial_map.point.push_back(x.get<double>());
  } else if (ik == "eigenmap" || ik == "perturbed_phase") {
    if (cfg.target_kind != "sphere")
      throw ConfigError("initial_map.kind: '" + ik +
                        "' requires a sphere target");
    if (im.contains("k")) {
      cfg.initial_map.k = im["k"].get<int>();
      if (cfg.initial_map.k < 1)
        throw ConfigError("initial_map.k: must be a positive integer");
    }
    if (im.contains("plane")) {
      const nlohmann::json& pl = im["plane"];
      if (!pl.is_array() || pl.size() != 2)
        throw ConfigError("initial_map.plane: must be two ambient indices");
      cfg.initial_map.plane = {pl[0].get<int>(), pl[1].get<int>()};
    }
    if (ik == "perturbed_phase" && im.contains("epsilon"))
      cfg.initial_map.epsilon = im["epsilon"].get<double>();
  } else if (ik == "file") {
    cfg.initial_map.path =
        detail::require_field(im, "initial_map", "path").get<std::string>();
  } else {
    throw ConfigError("initial_map.kind: unknown kind '" + ik + "'");
  }

  cfg.task = detail::require_field(j, "config", "task").get<std::string>();
  if (cfg.task != "flow" && cfg.task != "check-variation" &&
      cfg.task != "stability" && cfg.task != "identities")
    throw ConfigError("task: unknown task '" + cfg.task + "'");

  if (j.contains("numeric")) {
    const nlohmann::json& num = j["numeric"];
    if (num.contains("stencil_order")) {
      cfg.stencil_order = num["stencil_order"].get<int>();
      if (cfg.stencil_order != 2 && cfg.stencil_order != 4 &&
          cfg.stencil_order != 6)
        throw ConfigError("numeric.stencil_order: must be 2, 4, or 6");
    }
    if (num.contains("residual_tol")) {
      cfg.residual_tol = num["residual_tol"].get<double>();
      if (!(cfg.residual_tol > 0.0))
        throw ConfigError("numeric.residual_tol: must be positive");
    }
    if (num.contains("seeds")) {
      cfg.seeds.clear();
      const nlohmann::json& s = num["seeds"];
      if (s.is_number_unsigned() || s.is_number_integer()) {
        cfg.seeds.push_back(s.get<uint64_t>());
      } else if (s.is_array() && !s.empty()) {
        for (const auto& x : s) cfg.seeds.push_back(x.get<uint64_t>());
      } else {
        throw ConfigError("numeric.seeds: integer or nonempty integer array");
      }
    }
    if (num.contains("fd_steps")) {
      cfg.fd_steps.clear();
      for (const auto& x : num["fd_steps"])
        cfg.fd_steps.push_back(x.get<double>());
      try {
        validate_fd_steps(cfg.fd_steps);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("numeric.") + e.what());
      }
    }
  }

  if (j.contains("output")) {
    if (j["output"].is_string()) {
      cfg.output_dir = j["output"].get<std::string>();
    } else if (j["output"].is_object() && j["output"].contains("directory")) {
      cfg.output_dir = j["output"]["directory"].get<std::string>();
    } else {
      throw ConfigError("output: directory path expected");
    }
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig cfg = parse_config_json(
      j, std::filesystem::path(path).parent_path().string());
  cfg.raw_bytes = ss.str();
  return cfg;
}

// ---------------------------------------------------------------------------
// Deterministic number formatting: 17 significant digits round-trip doubles.

namespace detail {

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tables: one row per node, node index then 17-significant-digit components.

inline void write_table(const std::string& path, const std::string& label,
                        const Grid& grid, const TargetManifold& tgt,
                        const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output: cannot write '" + path + "'");
  out << "# exph " << label << " table\n";
  out << "# dims:";
  for (Index d : grid.dims) out << ' ' << d;
  out << "\n# target: " << tgt.name() << ' ' << tgt.n << "\n";
  const int amb = tgt.ambient();
  for (Index node = 0; node < grid.nodes; ++node) {
    out << node;
    for (int c = 0; c < amb; ++c)
      out << ' ' << detail::fmt17(values[node * amb + c]);
    out << '\n';
  }
}

struct TableData {
  std::string label;
  std::vector<Index> dims;
  std::string target_kind;
  int target_n = 0;
  std::vector<double> values;
};

inline TableData read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("initial_map.path: cannot open '" + path + "'");
  TableData t;
  std::string line;
  // Header: "# exph <label> table", "# dims: ...", "# target: <kind> <n>"
  if (!std::getline(in, line) || line.rfind("# exph ", 0) != 0 ||
      line.find(" table") == std::string::npos)
    throw ConfigError("table: bad header in '" + path + "'");
  t.label = line.substr(7, line.size() - 7 - 6);
  if (!std::getline(in, line) || line.rfind("# dims:", 0) != 0)
    throw ConfigError("table: missing dims header in '" + path + "'");
  {
    std::istringstream ss(line.substr(7));
    Index d;
    while (ss >> d) t.dims.push_back(d);
  }
  if (!std::getline(in, line) || line.rfind("# target: ", 0) != 0)
    throw ConfigError("table: missing target header in '" + path + "'");
  {
    std::istringstream ss(line.substr(10));
    ss >> t.target_kind >> t.target_n;
  }
  Index expected = 1;
  for (Index d : t.dims) expected *= d;
  const int amb =
      (t.target_kind == "sphere") ? t.target_n + 1 : t.target_n;
  t.values.assign(static_cast<size_t>(expected * amb), 0.0);
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Index node;
    if (!(ss >> node) || node < 0 || node >= expected)
      throw ConfigError("table: bad node index in '" + path + "'");
    for (int c = 0; c < amb; ++c)
      if (!(ss >> t.values[node * amb + c]))
        throw ConfigError("table: short row in '" + path + "'");
    ++rows;
  }
  if (rows != expected)
    throw ConfigError("table: row count mismatch in '" + path + "'");
  return t;
}

// ---------------------------------------------------------------------------
// CSV writers.

inline void write_trace_csv(const std::string& path,
                            const std::vector<FlowTraceRow>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output: cannot write '" + path + "'");
  out << "iteration,energy,residual,step\n";
  for (const FlowTraceRow& r : trace) {
    out << r.iteration << ',' << detail::fmt17(r.energy) << ','
        << detail::fmt17(r.residual) << ',' << detail::fmt17(r.step) << '\n';
  }
}

inline void write_identities_csv(const std::string& path,
                                 const std::vector<IdentityResiduals>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output: cannot write '" + path + "'");
  out << "node,res_quartic,res_pullback_norm,res_curvature\n";
  for (size_t node = 0; node < rows.size(); ++node) {
    out << node << ',' << detail::fmt17(rows[node].quartic) << ','
        << detail::fmt17(rows[node].pullback_norm) << ','
        << detail::fmt17(rows[node].curvature) << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON reports.

inline ordered_json oracle_report_json(const OracleReport& r) {
  ordered_json j;
  j["analytic"] = r.analytic;
  j["steps"] = r.steps;
  j["finite_difference"] = r.finite_difference;
  j["extrapolated"] = r.extrapolated;
  j["observed_order"] = r.observed_order;
  j["abs_error"] = r.abs_error;
  j["rel_error"] = r.rel_error;
  return j;
}

// Fixed-key serialization: energy, residual, rayleigh_min, sphere_sum,
// theorem33_value, identity_residuals, verdict, witness_ref, seed. Optional
// entries are null when the target carries no sphere data or no witness
// was found; diagnostic extras follow the fixed keys.
inline ordered_json stability_report_json(const StabilityReport& rep,
                                          const std::string& witness_ref) {
  ordered_json j;
  j["energy"] = rep.energy;
  j["residual"] = rep.residual;
  if (std::isnan(rep.rayleigh_min))
    j["rayleigh_min"] = nullptr;
  else
    j["rayleigh_min"] = rep.rayleigh_min;
  if (rep.has_sphere_data) {
    j["sphere_sum"] = rep.sphere_sum;
    j["theorem33_value"] = rep.instability_integral_value;
    j["identity_residuals"] = {
        {"quartic", rep.identity_residual_max.quartic},
        {"pullback_norm", rep.identity_residual_max.pullback_norm},
        {"curvature", rep.identity_residual_max.curvature}};
  } else {
    j["sphere_sum"] = nullptr;
    j["theorem33_value"] = nullptr;
    j["identity_residuals"] = nullptr;
  }
  j["verdict"] = rep.verdict;
  if (rep.has_witness)
    j["witness_ref"] = witness_ref;
  else
    j["witness_ref"] = nullptr;
  j["seed"] = rep.seed;
  // Diagnostics beyond the fixed keys.
  j["critical"] = rep.critical;
  j["rayleigh_converged"] = rep.rayleigh_converged;
  if (rep.has_sphere_data) {
    j["sphere_sum_closed_form"] = rep.sphere_sum_closed_form;
    j["crosscheck_ok"] = rep.crosscheck_ok;
    j["instability_test_conclusive"] = rep.instability_test_conclusive;
    j["pointwise_condition_holds"] = rep.pointwise_condition;
  } else {
    j["sphere_sum_closed_form"] = nullptr;
    j["crosscheck_ok"] = nullptr;
    j["instability_test_conclusive"] = nullptr;
    j["pointwise_condition_holds"] = nullptr;
  }
  if (rep.has_witness) j["witness_value"] = rep.witness_value;
  return j;
}

inline void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output: cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// Every run emits one of these: config hash, grid spacing, tolerances.
inline ordered_json manifest_json(const RunConfig& cfg, const Grid& grid,
                                  uint64_t seed, int threads) {
  ordered_json j;
  j["config_hash"] = detail::hex64(detail::fnv1a64(cfg.raw_bytes));
  j["task"] = cfg.task;
  j["preset"] = cfg.preset;
  j["dims"] = cfg.dims;
  std::vector<double> spacing(grid.spacing.begin(), grid.spacing.end());
  j["grid_spacing"] = spacing;
  j["stencil_order"] = cfg.stencil_order;
  j["target"] = {{"kind", cfg.target_kind}, {"n", cfg.target_n}};
  j["tolerances"] = {{"residual_tol", cfg.residual_tol},
                     {"sphere_norm", 1e-10},
                     {"tangency", 1e-10},
                     {"ball_guard", 1e-6},
                     {"witness", 1e-8}};
  j["fd_steps"] = cfg.fd_steps;
  j["seed"] = seed;
  j["seeds"] = cfg.seeds;
  j["threads"] = threads;
  return j;
}

}  // namespace exph

#endif  // EXPH_IO_HPP
