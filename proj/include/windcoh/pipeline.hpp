#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windcoh/coherency.hpp"
#include "windcoh/dynsim.hpp"
#include "windcoh/linearize.hpp"
#include "windcoh/netmodel.hpp"
#include "windcoh/pca.hpp"
#include "windcoh/perturbation.hpp"

namespace windcoh::pipeline {

struct FarmOverride {
  int bus = 0;
  int gamma = 0;
  double wind_speed = 12.0;
  std::string model = "wt1760";
  double q_setpoint = 0.0;
};

struct Scenario {
  std::string case_path;
  std::string registry_path;
  std::vector<FarmOverride> farms;  // replaces the case file's farm list
  int r = 5;
  bool run_coherency = true;
  bool run_perturb = true;
  bool run_modal = true;
  bool run_simulate = true;
  bool run_pca = true;
  int disturb_machine = 1;  // 1-based
  double disturb_magnitude = 1.0;
  double horizon_s = 100.0;
  double dt_s = 0.01;
  bool pca_center = true;
  std::string out_dir;  // empty: no artifacts written
  unsigned seed = 0;    // reserved; clustering is deterministic regardless
  std::string label;
};

Scenario scenario_from_json_file(const std::string& path);

struct RunResult {
  bool wind = false;
  CoherencyResult nominal;
  std::optional<CoherencyResult> perturbed;
  std::optional<PartitionDelta> moved;
  double epsilon = 1.0;
  double two_path_rel_error = 0.0;
  std::vector<Mode> modes;
  std::vector<int> pca_labels;
  std::optional<ClusterComparison> pca_vs_model;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> stage_seconds;
};

// Runs the requested stages in dependency order and, with out_dir set,
// writes the artifact bundle (partition.json, modes.csv, ledger/, traj.csv,
// pca.csv, vl_*.csv, manifest.json) plus timing.log (diagnostic, not part of
// the deterministic bundle).
RunResult run_pipeline(const Scenario& sc);

struct SweepPoint {
  std::string name;
  std::vector<FarmOverride> farms;
};

struct SweepRow {
  std::string name;
  bool ok = false;
  std::string error;
  std::vector<int> moved;  // machines (1-based) vs nominal partition
  std::vector<int> reference_machines;
  Vec slow_freqs_hz;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  int failures = 0;
};

// One pipeline run per point; failures stay isolated to their row.
SweepSummary sweep(const Scenario& base, const std::vector<SweepPoint>& points,
                   int jobs = 1);

// Attach farms (registry models) to a case, refreshing bus kinds.
NetworkCase attach_farms(const NetworkCase& base,
                         const std::vector<FarmOverride>& farms,
                         const std::string& registry_path);

// Same case with every farm forced to gamma = 0 (keeps ordering).
NetworkCase zero_wind(const NetworkCase& c);

std::string fnv1a64_file(const std::string& path);
std::string fnv1a64_bytes(const std::string& bytes);

inline constexpr const char* kToolVersion = "windcoh 0.1.0";

}  // namespace windcoh::pipeline
