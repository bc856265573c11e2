#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "rtp/experiments.hpp"
#include "rtp/parallel.hpp"
#include "rtp/spectral.hpp"

namespace rtp {

#ifndef RTP_FLUCT_VERSION
#define RTP_FLUCT_VERSION "0.0.0"
#endif

const char* library_version() { return RTP_FLUCT_VERSION; }

namespace {

struct ExperimentInfo {
  std::string name;
  std::string summary;
  const char* defaults;
};

// Defaults double as the whitelist of accepted keys. Reals are written with a
// decimal point so the type check can tell them from integers.
const std::vector<ExperimentInfo>& registry() {
  static const std::vector<ExperimentInfo> r{
      {"duality-check", "exact duality identity on a tiny ring, 1- and 2-particle dual sectors", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0, "rho": 1.0, "scaling_n": 1},
        "times": [0.1, 0.5, 1.0],
        "output_dir": "out/duality-check",
        "thresholds": {"max_error": 1e-8},
        "params": {"sites": 4, "eta_particles": 3, "dual_particles": [1, 2], "draws": 3}})"},
      {"stationarity", "per-site mean and variance stay at the product-measure values", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0, "rho": 1.0, "scaling_n": 16},
        "lattice": {"macro_length": 1024},
        "times": [0.1, 1.0],
        "replicas": 4,
        "output_dir": "out/stationarity",
        "thresholds": {"z_max": 3.0},
        "params": {"sep_alpha": 2, "sep_p": 0.3, "sep_kappa_layers": [1.0, 1.0], "sep_gamma": 1.0}})"},
      {"covariance", "stationary field covariance against chi <<e^{tA} phi, psi>> (run-and-tumble)", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0, "rho": 1.0, "scaling_n": 64},
        "lattice": {"macro_length": 8},
        "times": [0.0, 0.1, 0.5],
        "replicas": 10000,
        "output_dir": "out/covariance",
        "thresholds": {"z_max": 3.0, "relative_max": 0.05},
        "params": {"bump_width": 1.0, "centres": [3.75, 4.25]}})"},
      {"sep-covariance", "stationary field covariance for the multi-layer exclusion process", R"({
        "convention": "microscopic",
        "model": {"family": "sep", "alpha": 1, "rho": 0.5, "kappa_layers": [1.0, 1.0], "gamma": 1.0,
                  "scaling_n": 64},
        "lattice": {"macro_length": 8},
        "times": [0.0, 0.1, 0.5],
        "replicas": 10000,
        "output_dir": "out/sep-covariance",
        "thresholds": {"z_max": 3.0, "relative_max": 0.05},
        "params": {"bump_width": 1.0, "centres": [3.75, 4.25]}})"},
      {"martingale", "Dynkin martingale variance rate in three regimes", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0, "rho": 1.0, "scaling_n": 64},
        "lattice": {"macro_length": 4},
        "times": [0.02],
        "replicas": 20000,
        "output_dir": "out/martingale",
        "thresholds": {"relative_max": 0.05},
        "params": {"bump_width": 0.5, "flip_only_time": 0.2}})"},
      {"spde-consistency", "Lyapunov balance, second-order whiteness and three-route covariance", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0, "rho": 1.0, "scaling_n": 64},
        "lattice": {"macro_length": 8},
        "times": [0.0, 0.25, 0.5],
        "replicas": 10000,
        "output_dir": "out/spde-consistency",
        "thresholds": {"lyapunov_max": 1e-12, "variance_relative": 0.1, "lag1_relative": 0.2, "z_max": 3.0},
        "params": {"parts": ["lyapunov", "whiteness", "three-routes"], "modes": 256,
                   "whiteness_dt": 0.001, "whiteness_steps": 100001, "whiteness_cutoff": 4, "whiteness_lags": 4,
                   "ou_seeds": 10000, "bump_width": 1.0, "centres": [3.75, 4.25]}})"},
      {"total-density", "closed second-order equation and covariance of the layer sum", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0, "rho": 1.0, "scaling_n": 32},
        "lattice": {"macro_length": 8},
        "times": [0.0, 0.5],
        "replicas": 10000,
        "output_dir": "out/total-density",
        "thresholds": {"residual_max": 1e-6, "z_max": 3.0},
        "params": {"parts": ["residual", "covariance"], "residual_points": 64, "residual_dt": 0.001,
                   "residual_samples": 41, "bump_width": 1.0, "centres": [3.75, 4.25]}})"},
      {"hydro", "averaged empirical density against the hydrodynamic solution over N", R"({
        "convention": "microscopic",
        "model": {"family": "rtp", "kappa": 1.0, "lambda": 1.0, "gamma": 1.0},
        "lattice": {"macro_length": 8},
        "times": [0.5],
        "replicas": 200,
        "output_dir": "out/hydro",
        "thresholds": {"z_max": 3.0},
        "params": {"scaling_ns": [32, 64, 128], "bins": 16, "constant_rho": 1.5, "constant_n": 64}})"},
      {"ldp", "quadratic rate functional: zero cost, quadrature, bridge, Gaussian ratio", R"({
        "model": {"lambda": 1.0, "gamma": 1.0, "rho": 1.0},
        "lattice": {"macro_length": 8},
        "times": [1.0],
        "output_dir": "out/ldp",
        "thresholds": {"flow_relative_max": 1e-10, "quadrature_relative_max": 1e-8, "bridge_relative_max": 1e-6,
                       "ratio_relative_max": 0.2},
        "params": {"parts": ["zero-cost", "quadrature", "bridge", "gaussian-ratio"], "prefactor_mode": "derived",
                   "grid_points": 32, "flow_steps": 2000, "quadrature_steps": 1000, "bridge_steps": 400,
                   "competitors": 100, "ratio_mode": 1, "eps": [0.3, 0.2, 0.1], "samples": 1000000}})"},
  };
  return r;
}

const ExperimentInfo* find_info(const std::string& name) {
  for (const auto& e : registry())
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::string> allowed_parts(const std::string& experiment) {
  if (experiment == "spde-consistency") return {"lyapunov", "whiteness", "three-routes"};
  if (experiment == "total-density") return {"residual", "covariance"};
  if (experiment == "ldp") return {"zero-cost", "quadrature", "bridge", "gaussian-ratio"};
  return {};
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && std::isfinite(out);
}

bool parse_integer(const std::string& s, long long& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool is_real_like(const json& v) {
  if (v.is_number()) return std::isfinite(v.get<double>());
  double d;
  return v.is_string() && parse_real(v.get<std::string>(), d);
}

bool is_integer_like(const json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return true;
  long long i;
  return v.is_string() && parse_integer(v.get<std::string>(), i);
}

void check_leaf(const json& def, const json& value, const std::string& path, std::vector<std::string>& errors) {
  if (def.is_number_integer() || def.is_number_unsigned()) {
    if (!is_integer_like(value)) errors.push_back(path + ": expected an integer (number or decimal string)");
  } else if (def.is_number_float()) {
    if (!is_real_like(value)) errors.push_back(path + ": expected a finite number (number or decimal string)");
  } else if (def.is_string()) {
    if (!value.is_string()) errors.push_back(path + ": expected a string");
  } else if (def.is_boolean()) {
    if (!value.is_boolean()) errors.push_back(path + ": expected true or false");
  }
}

void merge_into(json& target, const json& user, const std::string& path, std::vector<std::string>& errors) {
  if (!user.is_object()) {
    errors.push_back((path.empty() ? "config" : path) + ": expected an object");
    return;
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!target.contains(it.key())) {
      errors.push_back(key + ": unknown key");
      continue;
    }
    json& def = target[it.key()];
    const json& value = it.value();
    if (def.is_object()) {
      merge_into(def, value, key, errors);
    } else if (def.is_array()) {
      if (!value.is_array() || value.empty()) {
        errors.push_back(key + ": expected a non-empty array");
        continue;
      }
      std::size_t before = errors.size();
      for (std::size_t i = 0; i < value.size(); ++i)
        check_leaf(def.front(), value[i], key + "[" + std::to_string(i) + "]", errors);
      if (errors.size() == before) def = value;
    } else {
      std::size_t before = errors.size();
      check_leaf(def, value, key, errors);
      if (errors.size() == before) def = value;
    }
  }
}

double as_real(const json& v) {
  if (v.is_number()) return v.get<double>();
  double d = 0.0;
  parse_real(v.get<std::string>(), d);
  return d;
}

long long as_integer(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_unsigned()) return static_cast<long long>(v.get<unsigned long long>());
  long long i = 0;
  parse_integer(v.get<std::string>(), i);
  return i;
}

json canonical_numbers(const json& v) {
  if (v.is_object()) {
    json out = json::object();
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = canonical_numbers(it.value());
    return out;
  }
  if (v.is_array()) {
    json out = json::array();
    for (const auto& e : v) out.push_back(canonical_numbers(e));
    return out;
  }
  if (v.is_number()) return v.dump();
  return v;
}

bool power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

bool parse_seed(const json& v, std::uint64_t& out) {
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return true;
  }
  if (v.is_number_integer()) {
    long long s = v.get<long long>();
    if (s < 0) return false;
    out = static_cast<std::uint64_t>(s);
    return true;
  }
  if (!v.is_string()) return false;
  const std::string s = v.get<std::string>();
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

double max_time(const ExperimentConfig& c) {
  double t = 0.0;
  for (double v : c.times) t = std::max(t, v);
  return t;
}

void try_check(std::vector<std::string>& errors, const std::string& where, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    errors.push_back(where + ": " + e.what());
  }
}

// Module preconditions that depend on the experiment.
void semantic_checks(ExperimentConfig& c, std::vector<std::string>& errors) {
  const std::string& ex = c.experiment;
  const json& params = c.effective.contains("params") ? c.effective["params"] : json::object();

  if (c.effective.contains("times")) {
    for (double t : c.times)
      if (t < 0.0) errors.push_back("times: entries must be >= 0");
    if (!std::is_sorted(c.times.begin(), c.times.end())) errors.push_back("times: entries must be increasing");
  }
  for (auto it = c.effective["thresholds"].begin(); it != c.effective["thresholds"].end(); ++it)
    if (!(as_real(it.value()) > 0.0)) errors.push_back("thresholds." + it.key() + ": must be > 0");

  if (params.contains("parts")) {
    const auto allowed = allowed_parts(ex);
    for (const auto& p : params["parts"]) {
      const std::string s = p.get<std::string>();
      if (std::find(allowed.begin(), allowed.end(), s) == allowed.end())
        errors.push_back("params.parts: unknown part '" + s + "'");
    }
  }

  if (ex == "ldp") {
    if (c.times.size() != 1 || !(c.times[0] > 0.0)) errors.push_back("times: ldp takes one positive horizon");
    if (!(c.model.lambda > 0.0) || !(c.model.rho > 0.0)) errors.push_back("model: lambda and rho must be > 0");
    if (!(c.model.layers.switch_rates(0, 1) > 0.0)) errors.push_back("model.gamma: must be > 0");
    const std::string mode = params["prefactor_mode"].get<std::string>();
    if (mode != "derived" && mode != "paper") errors.push_back("params.prefactor_mode: expected derived or paper");
    for (double e : c.param_list("eps"))
      if (!(e > 0.0)) errors.push_back("params.eps: entries must be > 0");
    if (c.param_int("samples") < 1000) errors.push_back("params.samples: must be >= 1000");
    if (!power_of_two(c.param_int("grid_points"))) errors.push_back("params.grid_points: must be a power of two");
    if (c.param_int("ratio_mode") < 1 || 2 * c.param_int("ratio_mode") >= c.param_int("grid_points"))
      errors.push_back("params.ratio_mode: must lie in [1, grid_points/2)");
    for (const char* k : {"flow_steps", "quadrature_steps", "bridge_steps"})
      if (c.param_int(k) < 6) errors.push_back(std::string("params.") + k + ": must be >= 6");
    if (c.param_int("competitors") < 1) errors.push_back("params.competitors: must be >= 1");
    if (c.macro_length < 1) errors.push_back("lattice.macro_length: must be >= 1");
    return;
  }

  try_check(errors, "model", [&] { c.model.validate(); });

  if (ex == "duality-check") {
    if (c.model.family != Family::IndependentRtp) errors.push_back("model.family: duality-check needs rtp");
    if (c.param_int("sites") < 2) errors.push_back("params.sites: must be >= 2");
    if (c.param_int("eta_particles") < 1) errors.push_back("params.eta_particles: must be >= 1");
    if (c.param_int("draws") < 1) errors.push_back("params.draws: must be >= 1");
    for (double d : c.param_list("dual_particles"))
      if (d < 1 || d != std::floor(d)) errors.push_back("params.dual_particles: entries must be positive integers");
    return;
  }

  if (c.macro_length < 1) errors.push_back("lattice.macro_length: must be >= 1");
  if (c.effective.contains("replicas")) {
    const std::size_t need = ex == "stationarity" ? 1 : (ex == "hydro" ? 2 : 100);
    if (c.replicas < need) errors.push_back("replicas: must be >= " + std::to_string(need));
  }
  if (c.model.family == Family::MultiLayerSep && c.model.lambda != 0.0)
    errors.push_back("model.lambda: the exclusion process has no active jumps");

  auto lattice_ok = [&](int n, const std::string& where, double horizon, const ModelParams& p) {
    const long sites = static_cast<long>(c.macro_length) * n;
    if (!power_of_two(sites)) {
      errors.push_back(where + ": macro_length * N = " + std::to_string(sites) + " must be a power of two");
      return;
    }
    try_check(errors, where, [&] { check_wrap(p, Lattice::from_macro(c.macro_length, n), horizon); });
  };

  const bool two_state = c.model.layers.size() == 2;
  if (ex == "hydro") {
    for (double n : c.param_list("scaling_ns")) {
      if (n < 1 || n != std::floor(n)) {
        errors.push_back("params.scaling_ns: entries must be positive integers");
        continue;
      }
      ModelParams p = c.model;
      p.scaling_n = static_cast<int>(n);
      lattice_ok(p.scaling_n, "params.scaling_ns", max_time(c), p);
    }
    const auto ns = c.param_list("scaling_ns");
    if (ns.size() < 2 || !std::is_sorted(ns.begin(), ns.end()) ||
        std::adjacent_find(ns.begin(), ns.end()) != ns.end())
      errors.push_back("params.scaling_ns: need at least two increasing values");
    ModelParams p = c.model;
    p.scaling_n = static_cast<int>(c.param_int("constant_n"));
    if (p.scaling_n < 1) errors.push_back("params.constant_n: must be >= 1");
    else lattice_ok(p.scaling_n, "params.constant_n", max_time(c), p);
    if (!(c.param("constant_rho") >= 0.0)) errors.push_back("params.constant_rho: must be >= 0");
    const long bins = c.param_int("bins");
    if (bins < 1) errors.push_back("params.bins: must be >= 1");
    for (double n : ns)
      if (bins >= 1 && static_cast<long>(c.macro_length * n) % bins != 0)
        errors.push_back("params.bins: must divide every ring size");
    return;
  }

  double horizon = max_time(c);
  if (ex == "martingale") horizon = std::max(horizon, c.param("flip_only_time"));
  if (ex == "stationarity") {
    ModelParams sep = c.model;
    sep.family = Family::MultiLayerSep;
    sep.alpha = static_cast<int>(c.param_int("sep_alpha"));
    sep.rho = c.param("sep_p");
    sep.lambda = 0.0;
    sep.kappa_layers = c.param_list("sep_kappa_layers");
    sep.layers = LayerSet::two_state(c.param("sep_gamma"));
    try_check(errors, "params.sep_*", [&] { sep.validate(); });
  }
  lattice_ok(c.model.scaling_n, "lattice", horizon, c.model);

  if (c.effective["params"].contains("bump_width") && !(c.param("bump_width") > 0.0))
    errors.push_back("params.bump_width: must be > 0");
  if (c.effective["params"].contains("centres")) {
    if (c.param_list("centres").size() != 2) errors.push_back("params.centres: need exactly two centres");
    for (double x : c.param_list("centres"))
      if (x < 0.0 || x > c.macro_length) errors.push_back("params.centres: must lie on the torus");
  }
  if (ex == "martingale") {
    if (c.model.family != Family::IndependentRtp) errors.push_back("model.family: martingale needs rtp");
    if (!(c.param("flip_only_time") > 0.0)) errors.push_back("params.flip_only_time: must be > 0");
    for (double t : c.times)
      if (!(t > 0.0)) errors.push_back("times: martingale times must be > 0");
  }
  if (ex == "covariance" && c.model.family != Family::IndependentRtp)
    errors.push_back("model.family: use sep-covariance for the exclusion process");
  if (ex == "sep-covariance" && c.model.family != Family::MultiLayerSep)
    errors.push_back("model.family: sep-covariance needs sep");
  if (ex == "spde-consistency") {
    if (c.param_int("modes") < 1) errors.push_back("params.modes: must be >= 1");
    if (c.has_part("whiteness")) {
      if (c.model.family != Family::IndependentRtp || !two_state)
        errors.push_back("model: the whiteness part needs a two-state run-and-tumble model");
      if (!(c.param("whiteness_dt") > 0.0)) errors.push_back("params.whiteness_dt: must be > 0");
      if (c.param_int("whiteness_steps") < 100) errors.push_back("params.whiteness_steps: must be >= 100");
      if (c.param_int("whiteness_cutoff") < 1) errors.push_back("params.whiteness_cutoff: must be >= 1");
      if (c.param_int("whiteness_lags") < 2) errors.push_back("params.whiteness_lags: must be >= 2");
    }
    if (c.has_part("three-routes")) {
      if (c.param_int("ou_seeds") < 100) errors.push_back("params.ou_seeds: must be >= 100");
      for (std::size_t i = 2; i < c.times.size(); ++i)
        if (std::abs((c.times[i] - c.times[i - 1]) - (c.times[1] - c.times[0])) > 1e-12)
          errors.push_back("times: three-routes needs a uniform time grid");
      if (!c.times.empty() && c.times.front() != 0.0) errors.push_back("times: three-routes grid must start at 0");
    }
  }
  if (ex == "total-density") {
    if (c.model.family != Family::IndependentRtp || !two_state)
      errors.push_back("model: total-density needs a two-state run-and-tumble model");
    if (!power_of_two(c.param_int("residual_points"))) errors.push_back("params.residual_points: power of two");
    if (!(c.param("residual_dt") > 0.0)) errors.push_back("params.residual_dt: must be > 0");
    if (c.param_int("residual_samples") < 5) errors.push_back("params.residual_samples: must be >= 5");
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& e : registry()) n.push_back(e.name);
    return n;
  }();
  return names;
}

std::string experiment_summary(const std::string& name) {
  const ExperimentInfo* info = find_info(name);
  if (!info) throw std::domain_error("unknown experiment '" + name + "'");
  return info->summary;
}

json experiment_defaults(const std::string& name) {
  const ExperimentInfo* info = find_info(name);
  if (!info) throw std::domain_error("unknown experiment '" + name + "'");
  json d = json::parse(info->defaults);
  d["experiment"] = name;
  return d;
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::domain_error([&] {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

double ExperimentConfig::threshold(const std::string& key) const {
  return as_real(effective.at("thresholds").at(key));
}

double ExperimentConfig::param(const std::string& key) const { return as_real(effective.at("params").at(key)); }

long ExperimentConfig::param_int(const std::string& key) const {
  return static_cast<long>(as_integer(effective.at("params").at(key)));
}

std::vector<double> ExperimentConfig::param_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& v : effective.at("params").at(key)) out.push_back(as_real(v));
  return out;
}

std::vector<std::string> ExperimentConfig::param_strings(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& v : effective.at("params").at(key)) out.push_back(v.get<std::string>());
  return out;
}

bool ExperimentConfig::has_part(const std::string& part) const {
  if (!effective.contains("params") || !effective["params"].contains("parts")) return false;
  for (const auto& v : effective["params"]["parts"])
    if (v == part) return true;
  return false;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_text(const json& effective) {
  json c = canonical_numbers(effective);
  c.erase("output_dir");
  c.erase("workers");
  return c.dump();
}

ExperimentConfig parse_config(const json& user, const Overrides& overrides) {
  std::vector<std::string> errors;
  if (!user.is_object()) throw ConfigError({"config: top level must be a JSON object"});
  if (!user.contains("experiment") || !user["experiment"].is_string()) {
    std::string known;
    for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError({"experiment: missing; expected one of " + known});
  }
  ExperimentConfig c;
  c.experiment = user["experiment"].get<std::string>();
  if (!find_info(c.experiment)) {
    std::string known;
    for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError({"experiment: unknown experiment '" + c.experiment + "'; expected one of " + known});
  }

  json body = user;
  body.erase("experiment");
  bool have_seed = false;
  const bool seed_given = body.contains("seed");
  if (seed_given) {
    if (!parse_seed(body["seed"], c.seed)) errors.push_back("seed: expected an unsigned 64-bit integer");
    else have_seed = true;
    body.erase("seed");
  }
  if (body.contains("workers")) {
    const json& w = body["workers"];
    if (!is_integer_like(w) || as_integer(w) < 1) errors.push_back("workers: expected a positive integer");
    else c.workers = static_cast<int>(as_integer(w));
    body.erase("workers");
  } else {
    c.workers = default_workers();
  }
  if (overrides.seed) {
    c.seed = *overrides.seed;
    have_seed = true;
  }
  if (overrides.workers) c.workers = *overrides.workers;
  if (!have_seed && !seed_given) errors.push_back("seed: mandatory (in the config or via --seed)");

  json eff = experiment_defaults(c.experiment);
  merge_into(eff, body, "", errors);
  if (overrides.output_dir) eff["output_dir"] = *overrides.output_dir;
  eff["seed"] = std::to_string(c.seed);
  c.output_dir = eff["output_dir"].get<std::string>();
  if (c.output_dir.empty()) errors.push_back("output_dir: must not be empty");

  // Typed extraction; every leaf has passed the type check or kept its default.
  if (eff.contains("convention")) {
    try {
      c.convention = convention_from_string(eff["convention"].get<std::string>());
    } catch (const std::exception& e) {
      errors.push_back(std::string("convention: ") + e.what());
    }
  }
  const json& m = eff["model"];
  ModelParams& p = c.model;
  if (m.contains("family")) {
    try {
      p.family = family_from_string(m["family"].get<std::string>());
    } catch (const std::exception& e) {
      errors.push_back(std::string("model.family: ") + e.what());
    }
  }
  if (m.contains("kappa")) p.kappa = as_real(m["kappa"]);
  p.lambda = m.contains("lambda") ? as_real(m["lambda"]) : 0.0;
  if (m.contains("rho")) p.rho = as_real(m["rho"]);
  if (m.contains("scaling_n")) p.scaling_n = static_cast<int>(as_integer(m["scaling_n"]));
  if (m.contains("alpha")) p.alpha = static_cast<int>(as_integer(m["alpha"]));
  if (m.contains("kappa_layers"))
    for (const auto& v : m["kappa_layers"]) p.kappa_layers.push_back(as_real(v));
  const double gamma = m.contains("gamma") ? as_real(m["gamma"]) : 1.0;
  if (gamma < 0.0) errors.push_back("model.gamma: must be >= 0");
  p.layers = LayerSet::two_state(gamma);
  p.convention = c.convention;
  if (p.family == Family::MultiLayerSep && m.contains("kappa") && !m.contains("kappa_layers"))
    errors.push_back("model.kappa_layers: required for the exclusion process");
  if (eff.contains("lattice")) c.macro_length = static_cast<int>(as_integer(eff["lattice"]["macro_length"]));
  if (eff.contains("times"))
    for (const auto& v : eff["times"]) c.times.push_back(as_real(v));
  if (eff.contains("replicas")) {
    long long r = as_integer(eff["replicas"]);
    c.replicas = r > 0 ? static_cast<std::size_t>(r) : 0;
  }
  c.effective = eff;

  if (errors.empty()) semantic_checks(c, errors);
  if (!errors.empty()) throw ConfigError(errors);
  c.hash = fnv1a_hex(canonical_text(c.effective));
  return c;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config: not valid JSON: ") + e.what()});
  }
  return parse_config(user, overrides);
}

void prepare_output_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError({"output_dir: cannot create '" + dir + "': " + ec.message()});
  const fs::path probe = fs::path(dir) / ".write-probe";
  {
    std::ofstream out(probe, std::ios::binary);
    if (!out || !(out << "x") || !out.flush())
      throw ConfigError({"output_dir: '" + dir + "' is not writable"});
  }
  fs::remove(probe, ec);
}

}  // namespace rtp
