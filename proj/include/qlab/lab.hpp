// Experiment orchestration: configs, suites, reports and plot data.
#pragma once

#include "qlab/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qlab {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLabVersion = "1.0.0";

// Bad config, report or input file.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CheckRecord {
  std::string id;
  std::string anchor;        // the inequality or identity checked, or "plumbing"
  std::string inputs_digest; // FNV-1a of the canonical input JSON
  double measured = 0.0;
  double bound = 0.0;
  std::string relation = "<=";  // measured relation bound
  double slack = 0.0;           // positive when the relation holds
  bool asserted = true;
  bool pass = true;
  // Plot coordinates: the record contributes (x, measured) to metric under series.
  std::string metric, series;
  double x = 0.0;
  json to_json() const;
  static CheckRecord from_json(const json& j);
};

// Builds a record; slack and pass follow from the relation and tolerance.
CheckRecord make_record(std::string id, std::string anchor, const json& inputs, double measured, double bound,
                        const std::string& relation, double tol, bool asserted = true);

struct ExperimentConfig {
  std::string suite;
  std::uint64_t seed = 1;
  json instance, params, pair, options;  // resolved: file references are loaded
  std::string output;
  static ExperimentConfig from_json(const json& j, const std::string& base_dir = ".");
  json to_json() const;
};

struct ExperimentReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckRecord> records;  // ordered by id
  bool pass() const;                 // every asserted record passes
  json to_json() const;              // no timestamps
  static ExperimentReport from_json(const json& j);
};

std::string digest(const json& j);
json load_json_file(const std::string& path);

ExperimentReport run_suite(const ExperimentConfig& cfg);

// Writes <dir>/report.json, <dir>/report.csv and the <dir>/report.meta.json sidecar.
void write_report(const ExperimentReport& r, const std::string& dir, const std::string& started,
                  const std::string& finished);
std::string records_csv(const ExperimentReport& r);
// Tidy (x, y, series) CSV of one metric. Throws SchemaError for a metric absent from a
// non-empty report; an empty report gives the header alone.
std::string emit_plot_data(const ExperimentReport& r, const std::string& metric);
std::string utc_timestamp();
// Writes j to path and a <path>.meta.json sidecar with the timestamps.
void write_json_with_sidecar(const json& j, const std::string& path, const std::string& started);

// Tool exit codes.
inline constexpr int kExitOk = 0, kExitFail = 1, kExitSchema = 2, kExitDimCap = 3, kExitNonConvergence = 4;
// Runs a tool body, mapping schema errors to 2, the dimension cap to 3 and
// non-convergence to 4 with a message on stderr.
int guarded_main(const std::function<int()>& body);

}  // namespace qlab
