// One PASS/FAIL line per acceptance criterion. Each criterion runs the
// shipped config of its experiment with the sizes and tolerances below laid
// over it, so editing configs/ cannot loosen an acceptance check.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtp/experiments.hpp"

namespace {

using rtp::json;

struct Run {
  std::string experiment;
  json pinned;  // laid over configs/<experiment>.json
};

struct Criterion {
  int id;
  std::string title;
  std::vector<Run> runs;
  double budget_seconds;  // 0: no runtime bound
};

json rtp_model(int n) {
  return {{"family", "rtp"}, {"kappa", "1.0"}, {"lambda", "1.0"}, {"gamma", "1.0"}, {"rho", "1.0"}, {"scaling_n", n}};
}

std::vector<Criterion> criteria() {
  const json bumps{{"bump_width", "1.0"}, {"centres", {"3.75", "4.25"}}};
  json cov_params = bumps;
  json sep_model{{"family", "sep"}, {"alpha", 1}, {"rho", "0.5"}, {"kappa_layers", {"1.0", "1.0"}},
                 {"gamma", "1.0"}, {"scaling_n", 64}};
  json three_routes = bumps;
  three_routes["parts"] = {"three-routes"};
  three_routes["ou_seeds"] = 10000;
  json td_cov = bumps;
  td_cov["parts"] = {"covariance"};

  return {
      {1,
       "duality identity, 1- and 2-particle dual sectors, max error <= 1e-8",
       {{"duality-check",
         {{"model", rtp_model(1)},
          {"thresholds", {{"max_error", "1e-8"}}},
          {"params", {{"sites", 4}, {"dual_particles", {1, 2}}}}}}},
       10.0},
      {2,
       "stationarity from the product measure, 2^14 sites, t in {0.1, 1}, |z| <= 3",
       {{"stationarity",
         {{"model", rtp_model(16)},
          {"lattice", {{"macro_length", 1024}}},
          {"times", {"0.1", "1.0"}},
          {"thresholds", {{"z_max", "3.0"}}}}}},
       120.0},
      {3,
       "covariance vs chi <<e^{tA} phi, psi>>, N=64, 10^4 replicas, |z| <= 3 and relative <= 5%, RTP and SEP",
       {{"covariance",
         {{"model", rtp_model(64)},
          {"lattice", {{"macro_length", 8}}},
          {"times", {"0.0", "0.1", "0.5"}},
          {"replicas", 10000},
          {"thresholds", {{"z_max", "3.0"}, {"relative_max", "0.05"}}},
          {"params", cov_params}}},
        {"sep-covariance",
         {{"model", sep_model},
          {"lattice", {{"macro_length", 8}}},
          {"times", {"0.0", "0.1", "0.5"}},
          {"replicas", 10000},
          {"thresholds", {{"z_max", "3.0"}, {"relative_max", "0.05"}}},
          {"params", cov_params}}}},
       1200.0},
      {4,
       "martingale variance rate within 5% in the generic, Sigma phi = 0 and kappa = lambda = 0 regimes",
       {{"martingale", {{"thresholds", {{"relative_max", "0.05"}}}}}},
       600.0},
      {5,
       "per-mode Lyapunov balance to 1e-12 over 256 modes",
       {{"spde-consistency",
         {{"thresholds", {{"lyapunov_max", "1e-12"}}}, {"params", {{"parts", {"lyapunov"}}, {"modes", 256}}}}}},
       0.0},
      {6,
       "hydrodynamic limit: L1 error decreasing over N in {32, 64, 128}, constant profile within 3 SE",
       {{"hydro",
         {{"times", {"0.5"}},
          {"replicas", 200},
          {"thresholds", {{"z_max", "3.0"}}},
          {"params", {{"scaling_ns", {32, 64, 128}}}}}}},
       900.0},
      {7,
       "total density: closed-equation residual <= 1e-6 relative and kappa=0 second-order whiteness",
       {{"total-density", {{"thresholds", {{"residual_max", "1e-6"}}}, {"params", {{"parts", {"residual"}}}}}},
        {"spde-consistency",
         {{"thresholds", {{"variance_relative", "0.1"}, {"lag1_relative", "0.2"}, {"z_max", "3.0"}}},
          {"params", {{"parts", {"whiteness"}}}}}}},
       0.0},
      {8,
       "total-density covariance vs rho <<e^{tA} phibar, psibar>>, t in {0, 0.5}, |z| <= 3",
       {{"total-density",
         {{"times", {"0.0", "0.5"}}, {"thresholds", {{"z_max", "3.0"}}}, {"params", td_cov}}}},
       0.0},
      {9,
       "rate functional: zero cost on flows, quadrature 1e-8, bridge minimal over 100 competitors, Gaussian ratio 20%",
       {{"ldp",
         {{"thresholds",
           {{"flow_relative_max", "1e-10"},
            {"quadrature_relative_max", "1e-8"},
            {"bridge_relative_max", "1e-6"},
            {"ratio_relative_max", "0.2"}}},
          {"params",
           {{"parts", {"zero-cost", "quadrature", "bridge", "gaussian-ratio"}},
            {"competitors", 100},
            {"eps", {"0.3", "0.2", "0.1"}}}}}}},
       0.0},
      {10,
       "three-route covariance: Monte Carlo, spectral and OU Galerkin pairwise within |z| <= 3",
       {{"spde-consistency", {{"thresholds", {{"z_max", "3.0"}}}, {"params", three_routes}}}},
       0.0},
  };
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

struct Outcome {
  bool pass = true;
  std::string detail;
  double seconds = 0.0;
};

Outcome evaluate(const Criterion& c, const std::string& config_dir, const std::string& out_root, int workers) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < c.runs.size(); ++i) {
    const Run& r = c.runs[i];
    json cfg = read_json(std::filesystem::path(config_dir) / (r.experiment + ".json"));
    cfg.merge_patch(r.pinned);
    rtp::Overrides ov;
    ov.output_dir = out_root + "/AC" + std::to_string(c.id) + "-" + std::to_string(i) + "-" + r.experiment;
    if (workers > 0) ov.workers = workers;
    rtp::ExperimentConfig config = rtp::parse_config(cfg, ov);
    rtp::prepare_output_dir(config.output_dir);
    rtp::ResultRecord rec = rtp::run_experiment(config);
    rtp::write_outputs(rec, config);

    std::size_t judged = 0, passed = 0;
    for (const auto& t : rec.tables)
      for (const auto& row : t.rows)
        if (row.counts) {
          ++judged;
          passed += row.pass ? 1 : 0;
        }
    std::size_t checks_ok = 0;
    for (const auto& ch : rec.checks) checks_ok += ch.pass ? 1 : 0;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s%s %zu/%zu rows", o.detail.empty() ? "" : "; ", r.experiment.c_str(), passed,
                  judged);
    o.detail += buf;
    if (!rec.checks.empty()) o.detail += ", " + std::to_string(checks_ok) + "/" + std::to_string(rec.checks.size()) + " checks";
    if (judged == 0 || !rec.passed()) o.pass = false;
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[80];
  if (c.budget_seconds > 0) {
    std::snprintf(buf, sizeof buf, "; %.1f s (limit %.0f s)", o.seconds, c.budget_seconds);
    if (o.seconds >= c.budget_seconds) o.pass = false;
  } else {
    std::snprintf(buf, sizeof buf, "; %.1f s", o.seconds);
  }
  o.detail += buf;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria for rtp-fluct"};
  std::vector<int> only;
  std::string config_dir = RTP_CONFIG_DIR;
  std::string out_root = "acceptance-out";
  int workers = 0;
  app.add_option("--only", only, "criterion numbers to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--configs", config_dir, "directory holding <experiment>.json");
  app.add_option("--out", out_root, "where each run writes its results");
  app.add_option("--workers", workers, "worker threads (default: RTP_FLUCT_WORKERS or all cores)");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  bool all = true;
  for (const auto& c : criteria()) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = evaluate(c, config_dir, out_root, workers);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    std::printf("AC%-2d %s  %s  [%s]\n", c.id, o.pass ? "PASS" : "FAIL", c.title.c_str(), o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
