#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flexsense/channel.hpp"
#include "flexsense/search.hpp"
#include "flexsense/signals.hpp"

namespace flexsense {

enum class EstimatorKind {
  SocMusic,
  SocNewton,
  FocMusic,
  FocNewton,
  ConventionalLs,
  SensingSocMusic,
  SensingSocNewton,
  SensingFocMusic,
  SensingFocNewton,
  SensingOracle,  // calibration with the true DOAs
};

std::string_view to_string(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_string(std::string_view tag);

struct GeometrySpec {
  int n_ports = 40;
  std::vector<int> omega{1, 2, 3, 4};
  double spacing = 1.0;
};

struct RandomDoaSpec {
  double min_deg = -60.0;
  double max_deg = 60.0;
  double min_separation_deg = 20.0;
};

struct SourceSpec {
  int n_sources = 2;
  std::vector<double> doas_deg{-20.0, -25.0};
  std::optional<RandomDoaSpec> random;
  double perturbation_deg = 0.5;  // half-width of the per-trial uniform offset
  std::vector<Coherence> coherence;
  Modulation modulation = Modulation::Qpsk;
  double gain_ratio_max = 10.0;
};

struct BenchConfig {
  std::string scenario = "los_ula";
  GeometrySpec geometry;
  SourceSpec sources;
  std::vector<double> snr_db{-10, -5, 0, 5, 10, 15, 20, 25, 30};
  int snapshots = 2000;
  int trials = 100;
  std::vector<EstimatorKind> estimators;
  int pilots = 40;
  double noise_power = 1.0;
  SearchConfig search;
  std::uint64_t seed = 1;
  std::string output;
  int threads = 1;
  bool timing = false;  // wall-clock runtimes make the CSV non-reproducible
  double miss_penalty_deg = 180.0;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

const std::vector<ScenarioInfo>& builtin_scenarios();

/// Preset for a built-in scenario. Throws Error(Parse) for unknown names.
BenchConfig scenario_preset(std::string_view name);

/// JSON document: `scenario` picks a preset, every other key overrides it.
/// Schema problems throw Error(Parse) naming the field path; broken
/// invariants throw Error(Validation) naming the rule.
BenchConfig parse_config(std::string_view text);
BenchConfig load_config(const std::filesystem::path& path);

void validate_config(const BenchConfig& config);

struct ResultRow {
  std::string scenario;
  std::string estimator;
  double snr_db = 0.0;
  double rmse_deg = 0.0;
  double nmse = 0.0;
  double miss_rate = 0.0;
  double iterations = 0.0;
  double runtime_ms = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

struct RunReport {
  std::vector<ResultRow> rows;
  std::vector<std::string> diagnostics;  // estimator failures, one line each
};

/// Everything one trial draws, shared by all estimators.
struct TrialRealization {
  std::vector<double> doas;  // radians, generation order
  CVector gains;
  CMatrix symbols;
  SnapshotMatrix snapshots;
  CMatrix pilots;
  CMatrix pilot_block;
  CMatrix conv_pilots;
  std::vector<CMatrix> conv_blocks;
  std::vector<std::vector<int>> conv_subsets;
  CMatrix channel;  // N x K
};

TrialRealization draw_realization(const BenchConfig& config, const ArrayGeometry& geometry, double snr_db,
                                  Rng& rng);

/// Per-estimator metrics of one trial; NaN where a metric does not apply.
std::vector<MetricRecord> run_trial(const BenchConfig& config, const ArrayGeometry& geometry,
                                    const TrialRealization& trial, double snr_db, long trial_id,
                                    std::vector<std::string>* diagnostics);

RunReport run_scenario(const BenchConfig& config);

/// Rows sorted by (estimator, snr); numbers at 10 significant digits.
std::string format_csv(std::vector<ResultRow> rows);
void write_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// snr_db,e_conv,e_prop,eta for every SNR of the sweep.
std::string theory_csv(const BenchConfig& config);

}  // namespace flexsense
