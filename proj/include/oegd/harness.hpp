#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oegd/dual.hpp"
#include "oegd/primal.hpp"

namespace oegd {

enum class Algorithm { Fem, SepFem, DualQuery, Dqrs };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // ConfigError on unknown

// Where the records come from: an existing CSV, or a seeded generator whose
// output is materialized next to the report so the run is self-contained.
struct DataSpec {
  std::string schema_path;
  std::string csv_path;  // file mode iff nonempty
  bool generate = false;
  uint64_t generate_n = 0;
  uint64_t generate_seed = 0;
};

struct WorkloadSpec {
  std::string file;  // load mode iff nonempty; otherwise enumerated below
  uint32_t k = 3;
  uint64_t num_marginals = 0;  // 0 = all size-k feature subsets
  uint64_t seed = 0;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::Fem;
  // Primal engines need exactly one of epsilon/rho (the budget they spend).
  // Dual engines take either as an optional hard cap on the privacy filter.
  std::optional<double> epsilon;
  std::optional<double> rho;
  std::optional<double> delta;  // default 1/n^2
  std::optional<uint32_t> rounds;
  std::optional<double> eta;
  std::optional<uint32_t> samples;
  double alpha = 0.25;
  double beta = 0.1;
  OracleOptions oracle;
  uint64_t seed = 1;
  uint32_t repetitions = 1;
  DataSpec data;
  WorkloadSpec workload;
  std::string out_dir;  // empty: keep everything in memory, write no files
};

// Parses the flat JSON config; relative paths resolve against base_dir.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& base_dir);

struct RepetitionResult {
  uint32_t repetition = 0;
  uint64_t seed = 0;
  uint32_t rounds = 0;
  double max_error = 0.0;
  double rho_total = 0.0;        // recomputed from the ledger spends
  double epsilon_at_delta = 0.0;
  std::string ledger_json;
  std::vector<RoundTrace> traces;
  double wall_ms = 0.0;    // timing sidecar only; never part of report bytes
  double oracle_ms = 0.0;  // summed over rounds
};

struct RunReport {
  std::string report_text;   // report.json bytes (deterministic)
  std::string timings_text;  // timings.json bytes (wall-clock, not deterministic)
  std::vector<RepetitionResult> repetitions;
  double total_ms = 0.0;
};

// Runs cfg.repetitions repetitions with seeds derived from the master seed,
// computes workload errors, and (when out_dir is set) writes report.json,
// per-repetition trace CSVs, and the timings sidecar.  Reported privacy
// totals are recomputed from the ledgers, never echoed from the config.
RunReport run_experiment(const ExperimentConfig& cfg);

// Hyperparameter grids used for non-private benchmarking.  Each point fixes
// the per-round selection budget eps0 (rho0 = eps0^2/2, T = floor(rho/rho0))
// and the perturbation scale eta.
struct TuningPoint {
  double eps0 = 0.0;
  double eta = 0.0;
};

// Named presets: "fem-sweep-1" (privacy sweep grid), "fem-sweep-2"
// (workload-growth grid).  ConfigError on unknown names.
const std::vector<TuningPoint>& preset_grid(const std::string& name);

// Grid search over a preset.  The aggregate of grid runs is *not* covered by
// a single privacy budget, so the report carries tuning_mode=true; use only
// for benchmarking, never for a real release.
RunReport run_tuning_sweep(const ExperimentConfig& cfg, const std::string& preset);

// Pivots reports that share a workload into a CSV: one row per epsilon,
// one column per algorithm, cells are median max_error.  Errors:
// ConfigError (empty list / duplicate cell), MismatchedWorkloads.
std::string compare_reports(const std::vector<std::string>& report_texts);

// The per-round trace table for one repetition (header depends on engine).
std::string trace_csv(Algorithm a, std::span<const RoundTrace> traces);

}  // namespace oegd
