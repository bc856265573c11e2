#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rtp/experiments.hpp"

namespace rtp {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string table_csv(const Table& table) {
  std::string out;
  for (const auto& c : table.input_columns) out += c + ",";
  out += "predicted,estimated,std_error,z\n";
  for (const auto& r : table.rows) {
    for (const auto& in : r.inputs) {
      if (in.find_first_of(",\n\"") != std::string::npos)
        throw std::logic_error("CSV input field needs quoting: '" + in + "'");
      out += in + ",";
    }
    out += format_number(r.predicted) + "," + format_number(r.estimated) + "," + format_number(r.std_error) + "," +
           format_number(r.z()) + "\n";
  }
  return out;
}

namespace {

// NaN and infinities are not JSON numbers; they go out as strings.
json number_or_text(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("could not write " + path.string());
}

}  // namespace

json record_json(const ResultRecord& record, const ExperimentConfig& config) {
  json j;
  j["experiment"] = record.experiment;
  j["config_hash"] = record.config_hash;
  j["seed"] = std::to_string(record.seed);
  j["library_version"] = library_version();
  j["wall_seconds"] = record.wall_seconds;
  j["workers"] = config.workers;
  j["passed"] = record.passed();
  j["config"] = config.effective;
  j["tables"] = json::array();
  for (const auto& t : record.tables) {
    json jt;
    jt["name"] = t.name;
    jt["csv"] = t.name + ".csv";
    jt["input_columns"] = t.input_columns;
    jt["rows"] = json::array();
    for (const auto& r : t.rows) {
      json jr;
      json inputs = json::object();
      for (std::size_t i = 0; i < r.inputs.size() && i < t.input_columns.size(); ++i)
        inputs[t.input_columns[i]] = r.inputs[i];
      jr["inputs"] = inputs;
      jr["predicted"] = number_or_text(r.predicted);
      jr["estimated"] = number_or_text(r.estimated);
      jr["std_error"] = number_or_text(r.std_error);
      jr["z"] = number_or_text(r.z());
      jr["metric"] = r.metric;
      jr["tolerance"] = r.tolerance;
      jr["pass"] = r.pass;
      jr["judged"] = r.counts;
      jt["rows"].push_back(jr);
    }
    j["tables"].push_back(jt);
  }
  j["checks"] = json::array();
  for (const auto& c : record.checks)
    j["checks"].push_back({{"name", c.name}, {"value", number_or_text(c.value)},
                           {"threshold", number_or_text(c.threshold)}, {"pass", c.pass}});
  return j;
}

std::vector<std::string> write_outputs(const ResultRecord& record, const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  std::vector<std::string> written;
  std::string manifest = "experiment " + record.experiment + "\nconfig_hash " + record.config_hash + "\nseed " +
                         std::to_string(record.seed) + "\nlibrary_version " + library_version() + "\n";
  for (const auto& t : record.tables) {
    const std::string text = table_csv(t);
    write_file(dir / (t.name + ".csv"), text);
    written.push_back((dir / (t.name + ".csv")).string());
    manifest += "file " + t.name + ".csv fnv1a " + fnv1a_hex(text) + "\n";
  }
  write_file(dir / "results.json", record_json(record, config).dump(2) + "\n");
  written.push_back((dir / "results.json").string());
  manifest += "file results.json\n";
  write_file(dir / "MANIFEST", manifest);
  written.push_back((dir / "MANIFEST").string());
  return written;
}

}  // namespace rtp
