#pragma once

// Experiment runner behind the `dfm` command line tool: configuration,
// presets, and the on-disk output schemas.
//
//   zmap.csv     t,site,z
//   scalars.csv  t,name,value,stderr
//   meta.json    effective config, code version, seed derivation
//   manifest.json (sweeps) per-point directories and trajectory seeds
//   fragment.json subspace report
//
// Floating point values are printed with 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfm/evolve.hpp"
#include "dfm/fragmentation.hpp"
#include "dfm/models.hpp"

namespace dfm {

struct ExperimentConfig {
  ModelSpec model = make_model(ModelKind::dfm, 8);
  /// all-down, neel-L, neel-R, single-up@i, double-up@i (sites i, i+1),
  /// bell, ghz, bits:<0/1 string, site 1 first>
  std::string initial_state = "all-down";
  EvolutionParams evolution;
  NoiseSchedule noise;  // period inf disables kicks
  /// z-profile, concurrence[:i,j], fidelity[:<initial-state kind>],
  /// renyi2[:even|odd|i,j,...]
  std::vector<std::string> observables{"z-profile"};
  std::filesystem::path output_dir = "out";
  /// Sweep points (periods); empty for a single run.
  std::vector<double> sweep_periods;
  /// Inclusive size range for fragment scaling tables.
  std::optional<std::pair<int, int>> size_range;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

std::string format_period(double period);
double parse_period(const std::string& text);

StateVector make_initial_state(const std::string& kind, int num_sites);
ObservableSet make_observables(const ExperimentConfig& config, const StateVector& initial);

/// Named figure presets. size 0 keeps the full-scale default; otherwise the
/// chain is resized and site-anchored initial states move to the new centre.
ExperimentConfig preset(const std::string& name, int size = 0);
std::vector<std::string> preset_names();

/// Single run (ensemble if noise is active). Writes zmap.csv, scalars.csv,
/// meta.json into config.output_dir.
EnsembleResult run_evolve(const ExperimentConfig& config, std::uint64_t first_index = 0);

/// One subdirectory per sweep period plus manifest.json. Trajectory indices
/// continue across points, so every (point, sample) has its own seed.
std::vector<EnsembleResult> run_sweep(const ExperimentConfig& config);

/// Writes fragment.json; returns the document.
nlohmann::json run_fragment(const ExperimentConfig& config);

/// Number formatting used by every CSV/JSON writer.
std::string format_double(double v);

}  // namespace dfm
