#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtp/model.hpp"

namespace rtp {

using json = nlohmann::json;

const char* library_version();

/// Names accepted in the "experiment" field, in listing order.
const std::vector<std::string>& experiment_names();
/// One-line description for list-experiments.
std::string experiment_summary(const std::string& name);
/// Full default config of an experiment (everything except the seed).
json experiment_defaults(const std::string& name);

/// Every violated precondition of a config, one message each.
class ConfigError : public std::domain_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  Convention convention = Convention::Microscopic;
  ModelParams model;
  int macro_length = 8;
  std::vector<double> times;
  std::size_t replicas = 0;
  int workers = 1;
  std::string output_dir;

  json effective;  // defaults merged with the user file, numbers as written
  std::string hash;  // 16 hex digits over the canonical effective config

  double threshold(const std::string& key) const;
  double param(const std::string& key) const;
  long param_int(const std::string& key) const;
  std::vector<double> param_list(const std::string& key) const;
  std::vector<std::string> param_strings(const std::string& key) const;
  bool has_part(const std::string& part) const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> output_dir;
};

/// Merges `user` over the experiment defaults, checks types and every module
/// precondition and throws ConfigError listing all problems. The output
/// directory is not touched here.
ExperimentConfig parse_config(const json& user, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

/// Creates the output directory and proves it writable; ConfigError otherwise.
void prepare_output_dir(const std::string& dir);

/// 64-bit FNV-1a, printed as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);
/// Canonical text of a config: sorted keys, numbers as written, no
/// output_dir or workers.
std::string canonical_text(const json& effective);

struct Row {
  std::vector<std::string> inputs;
  double predicted = 0.0;
  double estimated = 0.0;
  double std_error = 0.0;  // 0 for deterministic comparisons
  double tolerance = 0.0;
  std::string metric;      // how pass was decided
  bool pass = false;
  bool counts = true;      // reference rows are reported but not judged
  double z() const;
};

struct Table {
  std::string name;
  std::vector<std::string> input_columns;
  std::vector<Row> rows;
};

/// Aggregate criteria that are not a single row (monotone sequences, counts).
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct ResultRecord {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<Table> tables;
  std::vector<Check> checks;
  double wall_seconds = 0.0;
  bool passed() const;
};

ResultRecord run_experiment(const ExperimentConfig& config);

/// Fixed-format number for CSV and MANIFEST output.
std::string format_number(double v);
std::string table_csv(const Table& table);
json record_json(const ResultRecord& record, const ExperimentConfig& config);
/// results.json, one CSV per table and MANIFEST; returns the written paths.
std::vector<std::string> write_outputs(const ResultRecord& record, const ExperimentConfig& config);

}  // namespace rtp
