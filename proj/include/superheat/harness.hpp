#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "superheat/blowup_analysis.hpp"
#include "superheat/radial_pde.hpp"

namespace superheat {

struct ExperimentConfig {
  std::string nonlinearity = "exp";
  int N = 3;
  double R = 1.0;
  std::optional<double> k;  // absent: taken from the initial data at r = R
  std::string initial = "flat:a=0";
  int M = 400;
  SolverConfig solver;

  bool classify = true;
  bool rescaling = false;
  bool intersection_trace = false;
  ClassifyOptions classify_options;

  std::string output = "run";

  bool operator==(const ExperimentConfig&) const = default;
};

// INI-style sections [problem] [grid] [solver] [analysis] [output] with
// key = value lines; '#' and ';' start comments.
ExperimentConfig parse_config_ini(const std::string& text);
std::string render_config_ini(const ExperimentConfig& c);
// Same keys nested one level under the section names.
ExperimentConfig parse_config_json(const std::string& text);
// Dispatches on the first non-blank character ('{' means JSON).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets "section.key" to a value, as in a config file.
void set_config_value(ExperimentConfig& c, const std::string& dotted_key, const std::string& value);

// Relative paths resolve against $SUPERHEAT_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& p);

struct RunOutcome {
  std::filesystem::path directory;
  RunRecord run;
  std::optional<BlowupReport> report;
};

// Simulates and writes the run directory: config.ini, snapshots.csv,
// series.csv, summary.json, and with classification report.json, ratio.csv,
// delta.csv. A PARTIAL marker exists until every file is in place.
RunOutcome run_experiment(const ExperimentConfig& c);

inline constexpr const char* kPartialMarker = "PARTIAL";

void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& c,
                         const RunRecord& run, const BlowupReport* report);
// Rebuilds the run record (snapshots, grid, termination, markers) from disk.
RunRecord read_run_directory(const std::filesystem::path& dir, ExperimentConfig* config = nullptr);

std::string render_summary_json(const RunRecord& run, const std::optional<BlowupTimeFit>& fit);

struct SweepAxis {
  std::string key;  // "section.key"
  std::vector<std::string> values;
};

// "section.key=v1|v2|v3"
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepEntry {
  std::size_t index = 0;
  std::map<std::string, std::string> params;
  std::filesystem::path directory;
  std::string status;  // "ok" or the error code name
  std::string termination, verdict;
  std::optional<double> T_est;
  long steps = 0;
};

// Cartesian product of the axes over the template; runs go to
// <output>/run_<index>, at most `jobs` at a time. Writes index.csv and
// aggregate.csv once all runs have finished.
std::vector<SweepEntry> run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                  int jobs);

}  // namespace superheat
