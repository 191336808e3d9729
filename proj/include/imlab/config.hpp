#pragma once
// Model configuration: strict JSON in, validated parameters out, plus the
// named presets. Unknown keys are rejected everywhere so a typo in a config
// file fails loudly instead of silently running the defaults.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "imlab/lattice.hpp"
#include "imlab/nonlinearity.hpp"

namespace imlab {

struct ForcingMode {
  ModeVec n{0, 0, 0};
  int component = 0;
  double re = 0.0;
  double im = 0.0;
};

struct ForcingSpec {
  enum class Kind { none, modes, random };
  Kind kind = Kind::none;
  std::vector<ForcingMode> modes;  // kind == modes
  std::uint64_t seed = 0;          // kind == random
  double amplitude = 0.0;          // kind == random: exact H norm of g
  double decay = 2.0;              // kind == random: coefficient profile power
};

struct ModelConfig {
  std::string name = "unnamed";
  Family family = Family::reaction;
  double gamma = 0.0;
  double gamma_bar = 0.0;   // advective family only
  double alpha_reg = 1.0;   // advective family only
  int grid_m = 16;
  std::vector<double> f_coeffs{0.0, -1.0, 0.0, 1.0};  // ascending powers
  double c_star = 1.0;
  double s_decay = 3.5;
  double s0 = 1.75;
  double radius = 1.0;
  double radius_bar = 1.0;
  std::int64_t lambda_cut = 7;
  std::int64_t window_k = 1;
  double dt = 1e-3;
  double t_max = 1.0;
  std::uint64_t seed = 1;
  ForcingSpec forcing;
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::reaction: return "rde";
    case Family::cahn_hilliard: return "ch";
    case Family::navier_stokes: return "nse";
  }
  return "?";
}

inline Family family_from_name(const std::string& s) {
  if (s == "rde") return Family::reaction;
  if (s == "ch") return Family::cahn_hilliard;
  if (s == "nse") return Family::navier_stokes;
  throw std::invalid_argument("unknown family '" + s + "' (expected rde, ch or nse)");
}

inline void validate(const ModelConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };

  if (c.grid_m < 8 || c.grid_m % 2 != 0) fail("grid must be even and at least 8");
  if (c.dt <= 0.0) fail("dt must be positive");
  if (c.t_max <= 0.0) fail("t_max must be positive");
  if (c.c_star <= 0.0) fail("c_star must be positive");
  if (c.radius <= 0.0 || c.radius_bar <= 0.0) fail("truncation radii must be positive");
  if (c.lambda_cut < 1) fail("lambda_cut must be at least 1");
  if (c.window_k < 0) fail("window_k must be nonnegative");
  if (!(c.s0 > 1.5 && c.s0 < 2.0)) fail("s0 must lie in (3/2, 2)");
  if (!(c.s_decay > c.s0 + 1.5 && c.s_decay < c.s0 + 2.0))
    fail("s must lie in (s0 + 3/2, s0 + 2)");

  switch (c.family) {
    case Family::reaction:
      if (c.gamma != 0.0) fail("the reaction family runs at gamma = 0");
      if (c.f_coeffs.empty()) fail("reaction family needs a drift polynomial");
      break;
    case Family::cahn_hilliard:
      if (c.gamma != 0.5 && c.gamma != 1.0 && c.gamma != 2.0)
        fail("cahn-hilliard gamma must be 0.5, 1 or 2");
      if (c.f_coeffs.empty()) fail("cahn-hilliard family needs a drift polynomial");
      break;
    case Family::navier_stokes:
      if (c.gamma < 0.0 || c.gamma_bar < 0.0) fail("nse exponents must be nonnegative");
      if (std::abs(c.gamma + c.gamma_bar - 0.5) > 1e-12)
        fail("nse requires gamma + gamma_bar = 1/2");
      if (c.gamma_bar > 0.0 && c.alpha_reg <= 0.0) fail("nse filter needs alpha > 0");
      break;
  }

  if (c.forcing.kind == ForcingSpec::Kind::random) {
    if (c.forcing.amplitude < 0.0) fail("forcing amplitude must be nonnegative");
    if (c.forcing.decay < 0.0) fail("forcing decay must be nonnegative");
  }
}

// ---------------------------------------------------------------------------
// strict JSON

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (known.find(it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

inline ForcingSpec parse_forcing(const nlohmann::json& j) {
  ForcingSpec f;
  reject_unknown_keys(j, {"kind", "modes", "seed", "amplitude", "decay"}, "forcing");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    f.kind = ForcingSpec::Kind::none;
  } else if (kind == "modes") {
    f.kind = ForcingSpec::Kind::modes;
    for (const auto& jm : j.at("modes")) {
      reject_unknown_keys(jm, {"n", "component", "re", "im"}, "forcing mode");
      ForcingMode m;
      const auto n = jm.at("n");
      if (!n.is_array() || n.size() != 3)
        throw std::invalid_argument("config: forcing mode n must be a 3-vector");
      m.n = {n[0].get<std::int64_t>(), n[1].get<std::int64_t>(), n[2].get<std::int64_t>()};
      m.component = jm.value("component", 0);
      m.re = jm.value("re", 0.0);
      m.im = jm.value("im", 0.0);
      f.modes.push_back(m);
    }
  } else if (kind == "random") {
    f.kind = ForcingSpec::Kind::random;
    f.seed = j.at("seed").get<std::uint64_t>();
    f.amplitude = j.at("amplitude").get<double>();
    f.decay = j.value("decay", 2.0);
  } else {
    throw std::invalid_argument("config: forcing kind must be none, modes or random");
  }
  return f;
}

}  // namespace detail

inline ModelConfig config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j,
      {"name", "family", "gamma", "gamma_bar", "alpha", "grid", "f", "c_star", "s",
       "s0", "radius", "radius_bar", "lambda_cut", "window_k", "dt", "t_max", "seed",
       "forcing"},
      "config");
  ModelConfig c;
  c.name = j.value("name", std::string("unnamed"));
  c.family = family_from_name(j.at("family").get<std::string>());
  c.gamma = j.value("gamma", 0.0);
  c.gamma_bar = j.value("gamma_bar", 0.0);
  c.alpha_reg = j.value("alpha", 1.0);
  c.grid_m = j.value("grid", 16);
  if (j.contains("f")) c.f_coeffs = j.at("f").get<std::vector<double>>();
  c.c_star = j.value("c_star", 1.0);
  c.s_decay = j.value("s", 3.5);
  c.s0 = j.value("s0", 1.75);
  c.radius = j.value("radius", 1.0);
  c.radius_bar = j.value("radius_bar", 1.0);
  c.lambda_cut = j.value("lambda_cut", std::int64_t{7});
  c.window_k = j.value("window_k", std::int64_t{1});
  c.dt = j.value("dt", 1e-3);
  c.t_max = j.value("t_max", 1.0);
  c.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("forcing")) c.forcing = detail::parse_forcing(j.at("forcing"));
  validate(c);
  return c;
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["family"] = family_name(c.family);
  j["gamma"] = c.gamma;
  j["gamma_bar"] = c.gamma_bar;
  j["alpha"] = c.alpha_reg;
  j["grid"] = c.grid_m;
  j["f"] = c.f_coeffs;
  j["c_star"] = c.c_star;
  j["s"] = c.s_decay;
  j["s0"] = c.s0;
  j["radius"] = c.radius;
  j["radius_bar"] = c.radius_bar;
  j["lambda_cut"] = c.lambda_cut;
  j["window_k"] = c.window_k;
  j["dt"] = c.dt;
  j["t_max"] = c.t_max;
  j["seed"] = c.seed;
  switch (c.forcing.kind) {
    case ForcingSpec::Kind::none:
      j["forcing"] = {{"kind", "none"}};
      break;
    case ForcingSpec::Kind::modes: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& m : c.forcing.modes)
        arr.push_back({{"n", {m.n[0], m.n[1], m.n[2]}},
                       {"component", m.component},
                       {"re", m.re},
                       {"im", m.im}});
      j["forcing"] = {{"kind", "modes"}, {"modes", arr}};
      break;
    }
    case ForcingSpec::Kind::random:
      j["forcing"] = {{"kind", "random"},
                      {"seed", c.forcing.seed},
                      {"amplitude", c.forcing.amplitude},
                      {"decay", c.forcing.decay}};
      break;
  }
  return j;
}

inline ModelConfig parse_config(const std::string& text) {
  return config_from_json(nlohmann::json::parse(text));
}

inline ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// presets

inline ModelConfig preset_config(const std::string& name) {
  ModelConfig c;
  c.name = name;
  c.forcing.kind = ForcingSpec::Kind::random;
  c.forcing.seed = 2026;
  c.forcing.amplitude = 0.05;
  c.forcing.decay = 2.0;

  if (name == "rde-cubic") {
    c.family = Family::reaction;
    c.gamma = 0.0;
    c.f_coeffs = {0.0, -1.0, 0.0, 1.0};
    c.lambda_cut = 7;
    c.window_k = 1;
    c.radius = 2.0;
    c.radius_bar = 2.0;
  } else if (name == "ch-classic" || name == "ch-fractional" || name == "ch6") {
    c.family = Family::cahn_hilliard;
    c.gamma = name == "ch-classic" ? 1.0 : (name == "ch-fractional" ? 0.5 : 2.0);
    c.f_coeffs = {0.0, -1.0, 0.0, 1.0};
    c.lambda_cut = 7;
    c.window_k = 1;
    c.radius = 2.0;
    c.radius_bar = 2.0;
    c.dt = name == "ch6" ? 1e-5 : 1e-4;
  } else if (name == "nse-leray" || name == "nse-hyper" || name == "nse-mixed") {
    c.family = Family::navier_stokes;
    c.gamma = name == "nse-leray" ? 0.0 : (name == "nse-hyper" ? 0.5 : 0.25);
    c.gamma_bar = 0.5 - c.gamma;
    c.alpha_reg = 1.0;
    c.f_coeffs.clear();
    c.lambda_cut = 7;
    c.window_k = 1;
    c.radius = 2.0;
    c.radius_bar = 2.0;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  validate(c);
  return c;
}

inline std::vector<std::string> preset_names() {
  return {"rde-cubic", "ch-classic", "ch-fractional", "ch6",
          "nse-leray", "nse-hyper", "nse-mixed"};
}

}  // namespace imlab
