#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "rtp/experiments.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInvalid = 2;

int report_invalid(const rtp::ConfigError& e) {
  std::cerr << "invalid config (" << e.problems().size() << " problem" << (e.problems().size() == 1 ? "" : "s")
            << "):\n";
  for (const auto& p : e.problems()) std::cerr << "  - " << p << "\n";
  return kInvalid;
}

void print_summary(const rtp::ResultRecord& rec) {
  std::size_t judged = 0, passed = 0;
  for (const auto& t : rec.tables)
    for (const auto& r : t.rows)
      if (r.counts) {
        ++judged;
        passed += r.pass ? 1 : 0;
      }
  std::printf("%s: %zu/%zu rows within threshold", rec.experiment.c_str(), passed, judged);
  for (const auto& c : rec.checks) std::printf("; %s: %s", c.name.c_str(), c.pass ? "ok" : "FAILED");
  std::printf(" (%.1f s)\n", rec.wall_seconds);
  for (const auto& t : rec.tables)
    for (const auto& r : t.rows)
      if (r.counts && !r.pass) {
        std::printf("  failed %s:", t.name.c_str());
        for (const auto& in : r.inputs) std::printf(" %s", in.c_str());
        std::printf(" predicted %s estimated %s se %s\n", rtp::format_number(r.predicted).c_str(),
                    rtp::format_number(r.estimated).c_str(), rtp::format_number(r.std_error).c_str());
      }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rtp-fluct: fluctuation experiments for run-and-tumble and multi-layer exclusion systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "run an experiment and write results.json, CSV tables and MANIFEST");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
  auto* workers_opt = run->add_option("--workers", workers, "worker threads (default: RTP_FLUCT_WORKERS or all cores)")
                          ->check(CLI::PositiveNumber);
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output_dir)");

  auto* validate = app.add_subcommand("validate", "check a config and print its hash");
  validate->add_option("--config", config_path, "experiment config (JSON)")->required();

  app.add_subcommand("list-experiments", "list experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kInvalid;
  }

  if (app.got_subcommand("list-experiments")) {
    for (const auto& name : rtp::experiment_names())
      std::printf("%-18s %s\n", name.c_str(), rtp::experiment_summary(name).c_str());
    return kPass;
  }

  rtp::Overrides ov;
  if (*seed_opt) ov.seed = seed;
  if (*workers_opt) ov.workers = workers;
  if (*out_opt) ov.output_dir = out_dir;

  if (app.got_subcommand("validate")) {
    try {
      rtp::ExperimentConfig cfg = rtp::load_config(config_path, ov);
      std::printf("valid %s config, hash %s\n", cfg.experiment.c_str(), cfg.hash.c_str());
      return kPass;
    } catch (const rtp::ConfigError& e) {
      return report_invalid(e);
    }
  }

  rtp::ExperimentConfig cfg;
  try {
    cfg = rtp::load_config(config_path, ov);
    rtp::prepare_output_dir(cfg.output_dir);
  } catch (const rtp::ConfigError& e) {
    return report_invalid(e);
  }
  try {
    std::printf("running %s (hash %s, seed %llu, %d worker%s)\n", cfg.experiment.c_str(), cfg.hash.c_str(),
                static_cast<unsigned long long>(cfg.seed), cfg.workers, cfg.workers == 1 ? "" : "s");
    std::fflush(stdout);
    rtp::ResultRecord rec = rtp::run_experiment(cfg);
    rtp::write_outputs(rec, cfg);
    print_summary(rec);
    std::printf("%s -> %s\n", rec.passed() ? "PASS" : "FAIL", cfg.output_dir.c_str());
    return rec.passed() ? kPass : kFail;
  } catch (const std::exception& e) {
    // Runtime failure: nothing was written, and the run did not pass.
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}
