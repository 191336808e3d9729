// Command line front end for the spectral laboratory. Every run is
// deterministic: randomness only enters through the configured seed, and all
// numeric output is printed with enough digits to round-trip.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "imlab/cone.hpp"
#include "imlab/config.hpp"
#include "imlab/evolution.hpp"
#include "imlab/lattice.hpp"
#include "imlab/manifold.hpp"
#include "imlab/model.hpp"
#include "imlab/snapshot.hpp"

using namespace imlab;
using Field = SpectralField<double>;

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// shared options

struct CommonOpts {
  std::string config_path;
  std::string preset;
  int grid = 0;       // 0 keeps the configured grid
  double dt = 0;      // 0 keeps the configured step
  double t_max = 0;   // 0 keeps the configured horizon
  std::uint64_t seed = 0;
  bool has_seed = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  auto* cfg = cmd->add_option("--config", c.config_path, "configuration JSON file");
  auto* pre = cmd->add_option("--preset", c.preset, "named preset configuration");
  cfg->excludes(pre);
  pre->excludes(cfg);
  cmd->add_option("--grid", c.grid, "override the grid size (even, >= 8)");
  cmd->add_option("--dt", c.dt, "override the time step");
  cmd->add_option("--t-max", c.t_max, "override the time horizon");
  cmd->add_option("--seed", c.seed, "override the seed")->each([&c](const std::string&) {
    c.has_seed = true;
  });
}

ModelConfig resolve_config(const CommonOpts& c) {
  if (c.config_path.empty() == c.preset.empty())
    throw std::runtime_error("pass exactly one of --config or --preset");
  ModelConfig cfg = c.config_path.empty() ? preset_config(c.preset) : load_config(c.config_path);
  if (c.grid > 0) cfg.grid_m = c.grid;
  if (c.dt > 0) cfg.dt = c.dt;
  if (c.t_max > 0) cfg.t_max = c.t_max;
  if (c.has_seed) cfg.seed = c.seed;
  validate(cfg);
  return cfg;
}

struct InitOpts {
  std::string path;        // snapshot to start from
  double norm = 0.1;       // else: seeded random state of this H norm (0 = zero state)
};

void add_init(CLI::App* cmd, InitOpts& o) {
  cmd->add_option("--init", o.path, "initial state snapshot");
  cmd->add_option("--init-norm", o.norm,
                  "H norm of the seeded random initial state when --init is absent "
                  "(0 starts from zero)");
}

Field initial_state(const Model<double>& model, const InitOpts& o, std::uint64_t salt) {
  if (!o.path.empty()) {
    const auto snap = load_snapshot<double>(o.path);
    if (snap.meta.family != model.config().family)
      throw std::runtime_error("snapshot family does not match the configuration: " + o.path);
    if (snap.field.grid_m() != model.grid_m())
      throw std::runtime_error("snapshot grid does not match the configuration: " + o.path);
    return snap.field;
  }
  if (o.norm <= 0) return model.zero_field();
  Rng rng(model.config().seed + salt);
  const double s = model.config().s_decay;
  auto u = make_random_field<double>(model.space(), model.grid_m(), rng,
                                     [s](std::int64_t ell) {
                                       return std::pow(1.0 + static_cast<double>(ell), -0.5 * s);
                                     });
  const double n = std::sqrt(l2_norm_sq(u));
  if (n > 0) u *= o.norm / n;
  return u;
}

SnapshotMeta meta_for(const ModelConfig& cfg, double t) {
  SnapshotMeta meta;
  meta.family = cfg.family;
  meta.gamma = cfg.gamma;
  meta.gamma_bar = cfg.gamma_bar;
  meta.alpha_reg = cfg.alpha_reg;
  meta.t = t;
  return meta;
}

struct GraphCliOpts {
  GraphOptions opts;
  void add(CLI::App* cmd) {
    cmd->add_option("--bvp-dt", opts.dt, "node spacing of the window solver");
    cmd->add_option("--bvp-tol", opts.tol, "sweep tolerance of the window solver");
    cmd->add_option("--ladder-tol", opts.ladder_tol, "window-doubling stop tolerance");
    cmd->add_option("--max-doublings", opts.max_doublings, "cap on window doublings");
    cmd->add_option("--fixed-T", opts.fixed_T, "skip the ladder, solve once on this window");
  }
};

// ---------------------------------------------------------------------------
// table output

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  void write(const std::string& path) const {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!path.empty()) {
      file.open(path);
      if (!file) throw std::runtime_error("cannot open output file: " + path);
      out = &file;
    }
    for (std::size_t c = 0; c < header.size(); ++c)
      *out << (c ? "," : "") << header[c];
    *out << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < columns.size(); ++c)
        *out << (c ? "," : "") << g17(columns[c][r]);
      *out << "\n";
    }
    if (!path.empty() && !*out) throw std::runtime_error("write failed: " + path);
  }
};

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  file << j.dump(2) << "\n";
  if (!file) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_preset(const std::string& name, const std::string& out) {
  if (name.empty()) {
    for (const auto& n : preset_names()) std::cout << n << "\n";
    return;
  }
  write_json(config_to_json(preset_config(name)), out);
}

void cmd_spectrum(const CommonOpts& common, double lip, std::int64_t r, const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const std::int64_t min_ell = model.space() == SpaceKind::full_scalar ? 0 : 1;
  const int shift = static_cast<int>(model.op().shift);
  const auto cut = cut_eigenvalues(ProjectorSpec{cfg.lambda_cut, cfg.window_k, shift}, min_ell);
  const auto sg = check_sg_condition(cut.lambda_lo, lip, cfg.gamma, shift);
  const auto ann = annulus(ProjectorSpec{cfg.lambda_cut, cfg.window_k, 0});
  const bool sa = check_sa_condition(cfg.lambda_cut, cfg.window_k, r);

  nlohmann::json j;
  j["lambda_cut"] = cfg.lambda_cut;
  j["window_k"] = cfg.window_k;
  j["lambda_n"] = sg.lambda_n;
  j["lambda_n1"] = sg.lambda_n1;
  j["gap"] = {{"lhs", sg.lhs}, {"alpha", sg.alpha}, {"mu", sg.mu},
              {"lip", lip},    {"pass", sg.pass}};
  j["annulus_size"] = ann.size();
  j["separation"] = {{"r", r},
                     {"admissible", sa},
                     {"min_pair_dist_sq", annulus_min_pair_dist_sq(cfg.lambda_cut, cfg.window_k)}};

  std::cout << "cut eigenvalues: " << sg.lambda_n << " | " << sg.lambda_n1 << "\n";
  std::cout << "gap lhs = " << g17(sg.lhs) << ", alpha = " << g17(sg.alpha)
            << ", mu = " << g17(sg.mu) << " against lip = " << g17(lip) << " -> "
            << (sg.pass ? "pass" : "fail") << "\n";
  std::cout << "annulus size " << ann.size() << ", separation radius " << r << " -> "
            << (sa ? "admissible" : "not admissible") << "\n";
  if (!out.empty()) write_json(j, out);
}

void cmd_admissible(std::int64_t k, std::int64_t r, std::int64_t from, std::int64_t to, bool first,
                    const std::string& out) {
  const auto records = search_admissible(from, to, k, r, first);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw std::runtime_error("cannot open output file: " + out);
    os = &file;
  }
  *os << "lambda,annulus_size,min_pair_dist_sq\n";
  for (const auto& rec : records)
    *os << rec.lambda << "," << rec.annulus_size << "," << rec.min_pair_dist_sq << "\n";
  if (records.empty()) std::cerr << "no admissible dimension in the scanned range\n";
}

void cmd_simulate(const CommonOpts& common, const InitOpts& init, const std::string& save_final,
                  const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u0 = initial_state(model, init, 0);

  const auto trace = trace_trajectory(evo, u0, cfg.t_max, cfg.dt);
  Table table;
  table.header = {"t", "h_norm", "hneg_norm", "h2_norm"};
  table.columns = {trace.t, trace.h_norm, trace.hneg_norm, trace.h2_norm};
  if (!trace.mass.empty()) {
    table.header.push_back("mass");
    table.columns.push_back(trace.mass);
  }
  if (!trace.lyapunov.empty()) {
    table.header.push_back("free_energy");
    table.columns.push_back(trace.lyapunov);
  }
  if (!trace.filtered_energy.empty()) {
    table.header.push_back("filtered_energy");
    table.columns.push_back(trace.filtered_energy);
  }
  table.write(out);
  if (!save_final.empty())
    save_snapshot(save_final, trace.final_state, meta_for(cfg, cfg.t_max));
  std::cerr << "final |u|_H = " << g17(std::sqrt(l2_norm_sq(trace.final_state))) << " at t = "
            << g17(cfg.t_max) << "\n";
}

void cmd_verify_cone(const CommonOpts& common, const InitOpts& init, const std::string& tangent,
                     double lip, const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u0 = initial_state(model, init, 0);

  Field v0 = model.zero_field();
  if (!tangent.empty()) {
    const auto snap = load_snapshot<double>(tangent);
    if (snap.field.grid_m() != model.grid_m())
      throw std::runtime_error("tangent snapshot grid does not match the configuration");
    v0 = snap.field;
  } else {
    Rng rng(cfg.seed + 1);
    v0 = make_random_field<double>(model.space(), model.grid_m(), rng,
                                   [](std::int64_t ell) {
                                     return std::pow(1.0 + static_cast<double>(ell), -1.0);
                                   });
    v0 *= 1.0 / std::sqrt(l2_norm_sq(v0));
  }

  const auto at_start = strong_cone_check(model, u0, v0, lip);
  const auto probe = cone_trajectory_probe(evo, u0, v0, lip, cfg.t_max, cfg.dt);

  Table table;
  table.header = {"t", "v_value", "v_norm_sq", "margin"};
  table.columns = {probe.t, probe.v_value, probe.v_norm_sq, probe.margin};
  table.write(out);

  std::cerr << "alpha = " << g17(at_start.alpha) << ", mu = " << g17(at_start.mu)
            << ", lip = " << g17(lip) << "\n";
  std::cerr << "inequality " << (probe.inequality_held ? "held" : "violated");
  if (!probe.inequality_held) std::cerr << " first at t = " << g17(probe.first_violation);
  std::cerr << "; cone invariance " << (probe.invariance_held ? "held" : "violated") << "\n";
}

void cmd_sa_deviation(const CommonOpts& common, const InitOpts& init, std::int64_t lambda,
                      std::int64_t k, const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const auto u = initial_state(model, init, 0);
  const std::int64_t lam = lambda > 0 ? lambda : cfg.lambda_cut;
  const std::int64_t kk = k > 0 ? k : cfg.window_k;
  const auto rep = sa_deviation(model, u, lam, kk);

  nlohmann::json j;
  j["lambda"] = lam;
  j["k"] = kk;
  j["dim"] = rep.dim;
  j["a_eff"] = rep.a_eff;
  j["delta"] = rep.delta;
  j["off_diag_max"] = rep.off_diag_max;
  j["used_svd"] = rep.used_svd;
  std::cout << "annulus dim " << rep.dim << ", a_eff = " << g17(rep.a_eff) << ", delta = "
            << g17(rep.delta) << ", max off-diagonal = " << g17(rep.off_diag_max) << "\n";
  if (!out.empty()) write_json(j, out);
}

void cmd_build_im(const CommonOpts& common, const InitOpts& init, const GraphCliOpts& graph,
                  const std::string& save_state, const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto p0 = low_pass(initial_state(model, init, 0), cfg.lambda_cut);

  const auto point = build_graph_point(evo, p0, graph.opts);
  nlohmann::json j;
  j["converged"] = point.converged;
  j["T_used"] = point.T_used;
  j["ladder_steps"] = point.ladder_steps;
  j["picard_iterations"] = point.picard_iterations;
  j["residual"] = point.residual;
  j["graph_norm"] = std::sqrt(l2_norm_sq(point.value));
  std::cout << "graph point " << (point.converged ? "converged" : "did not converge")
            << ": window T = " << g17(point.T_used) << ", sweeps = " << point.picard_iterations
            << ", |Q| = " << g17(std::sqrt(l2_norm_sq(point.value))) << "\n";
  if (!save_state.empty()) save_snapshot(save_state, p0 + point.value, meta_for(cfg, 0.0));
  if (!out.empty()) write_json(j, out);
}

void cmd_track(const CommonOpts& common, const InitOpts& init, const GraphCliOpts& graph,
               int samples, const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto u0 = initial_state(model, init, 0);

  const auto report = tracking_test(evo, u0, cfg.t_max, cfg.dt, samples, graph.opts);
  Table table;
  table.header = {"t", "distance"};
  table.columns = {report.t, report.distance};
  table.write(out);
  std::cerr << "fitted decay rate = " << g17(report.rate) << "\n";
}

void cmd_reduce(const CommonOpts& common, const InitOpts& init, const GraphCliOpts& graph,
                const std::string& out) {
  const ModelConfig cfg = resolve_config(common);
  const Model<double> model(cfg);
  const Evolution<double> evo(model);
  const auto p0 = low_pass(initial_state(model, init, 0), cfg.lambda_cut);

  const auto report = reduced_vs_full_test(evo, p0, cfg.t_max, cfg.dt, graph.opts);
  Table table;
  table.header = {"t", "low_gap", "full_gap"};
  table.columns = {report.t, report.low_gap, report.full_gap};
  table.write(out);
  std::cerr << "max full gap = " << g17(report.max_full_gap) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral laboratory for dissipative equations on the torus"};
  app.require_subcommand(1);

  std::string out;

  // preset
  auto* preset_cmd = app.add_subcommand("preset", "list presets or print one as JSON");
  std::string preset_name;
  preset_cmd->add_option("name", preset_name, "preset to print (omit to list)");
  preset_cmd->add_option("--out", out, "output file");
  preset_cmd->callback([&]() { cmd_preset(preset_name, out); });

  // spectrum
  auto* spectrum_cmd = app.add_subcommand("spectrum", "cut eigenvalues and gap condition");
  CommonOpts spectrum_common;
  add_common(spectrum_cmd, spectrum_common);
  double spectrum_lip = 0.1;
  std::int64_t spectrum_r = 1;
  spectrum_cmd->add_option("--lip", spectrum_lip, "nonlinearity bound to test the gap against");
  spectrum_cmd->add_option("--r", spectrum_r, "separation radius for the annulus check");
  spectrum_cmd->add_option("--out", out, "JSON report file");
  spectrum_cmd->callback(
      [&]() { cmd_spectrum(spectrum_common, spectrum_lip, spectrum_r, out); });

  // admissible
  auto* adm_cmd = app.add_subcommand("admissible", "scan for admissible cut dimensions");
  std::int64_t adm_k = 1, adm_r = 1, adm_from = 1, adm_to = 100;
  bool adm_first = false;
  adm_cmd->add_option("--k", adm_k, "annulus half-width")->required();
  adm_cmd->add_option("--r", adm_r, "separation radius")->required();
  adm_cmd->add_option("--from", adm_from, "lowest cut to scan");
  adm_cmd->add_option("--to", adm_to, "highest cut to scan");
  adm_cmd->add_flag("--first", adm_first, "stop at the first admissible cut");
  adm_cmd->add_option("--out", out, "CSV output file");
  adm_cmd->callback([&]() { cmd_admissible(adm_k, adm_r, adm_from, adm_to, adm_first, out); });

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "integrate the flow and trace norms");
  CommonOpts sim_common;
  InitOpts sim_init;
  add_common(sim_cmd, sim_common);
  add_init(sim_cmd, sim_init);
  std::string sim_save;
  sim_cmd->add_option("--save-final", sim_save, "write the final state snapshot here");
  sim_cmd->add_option("--out", out, "CSV trace file (default stdout)");
  sim_cmd->callback([&]() { cmd_simulate(sim_common, sim_init, sim_save, out); });

  // verify-cone
  auto* cone_cmd = app.add_subcommand("verify-cone", "march a tangent and check the cone bound");
  CommonOpts cone_common;
  InitOpts cone_init;
  add_common(cone_cmd, cone_common);
  add_init(cone_cmd, cone_init);
  std::string cone_tangent;
  double cone_lip = 0.1;
  cone_cmd->add_option("--tangent", cone_tangent, "tangent snapshot (default: seeded random)");
  cone_cmd->add_option("--lip", cone_lip, "nonlinearity bound entering the gap constants");
  cone_cmd->add_option("--out", out, "CSV probe file (default stdout)");
  cone_cmd->callback(
      [&]() { cmd_verify_cone(cone_common, cone_init, cone_tangent, cone_lip, out); });

  // sa-deviation
  auto* sa_cmd = app.add_subcommand("sa-deviation",
                                    "deviation of the annulus interaction matrix from scalar");
  CommonOpts sa_common;
  InitOpts sa_init;
  add_common(sa_cmd, sa_common);
  add_init(sa_cmd, sa_init);
  std::int64_t sa_lambda = 0, sa_k = 0;
  sa_cmd->add_option("--lambda", sa_lambda, "annulus center (default: configured cut)");
  sa_cmd->add_option("--k", sa_k, "annulus half-width (default: configured window)");
  sa_cmd->add_option("--out", out, "JSON report file");
  sa_cmd->callback([&]() { cmd_sa_deviation(sa_common, sa_init, sa_lambda, sa_k, out); });

  // build-im
  auto* im_cmd = app.add_subcommand("build-im", "solve the window problem for one graph point");
  CommonOpts im_common;
  InitOpts im_init;
  GraphCliOpts im_graph;
  add_common(im_cmd, im_common);
  add_init(im_cmd, im_init);
  im_graph.add(im_cmd);
  std::string im_save;
  im_cmd->add_option("--save-state", im_save, "write the manifold state snapshot here");
  im_cmd->add_option("--out", out, "JSON report file");
  im_cmd->callback([&]() { cmd_build_im(im_common, im_init, im_graph, im_save, out); });

  // track
  auto* track_cmd = app.add_subcommand("track", "distance of a trajectory to the graph");
  CommonOpts track_common;
  InitOpts track_init;
  GraphCliOpts track_graph;
  add_common(track_cmd, track_common);
  add_init(track_cmd, track_init);
  track_graph.add(track_cmd);
  int track_samples = 12;
  track_cmd->add_option("--samples", track_samples, "number of distance samples");
  track_cmd->add_option("--out", out, "CSV output file (default stdout)");
  track_cmd->callback([&]() { cmd_track(track_common, track_init, track_graph, track_samples, out); });

  // reduce
  auto* red_cmd = app.add_subcommand("reduce", "compare the reduced flow with the full flow");
  CommonOpts red_common;
  InitOpts red_init;
  GraphCliOpts red_graph;
  add_common(red_cmd, red_common);
  add_init(red_cmd, red_init);
  red_graph.add(red_cmd);
  red_cmd->add_option("--out", out, "CSV output file (default stdout)");
  red_cmd->callback([&]() { cmd_reduce(red_common, red_init, red_graph, out); });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
