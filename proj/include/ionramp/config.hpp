#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ionramp/ramps.hpp"
#include "ionramp/spin_model.hpp"
#include "ionramp/trap_couplings.hpp"

namespace ionramp {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything a CLI run needs. Parsed from JSON with unit-suffixed keys.
struct RunConfig {
  int num_spins = 6;

  // Coupling source: trap synthesis (optionally calibrated) or an explicit matrix.
  TrapConfig trap;
  std::optional<CalibrationTarget> calibration = CalibrationTarget{};
  std::optional<CouplingMatrix> couplings;
  std::string couplings_csv;  // explicit matrix loaded from this file

  /// Absolute B_0; when unset B_0 = b0_over_jmax * max J.
  std::optional<double> b0_khz;
  double b0_over_jmax = 5.0;

  RampFamily family = RampFamily::LocalAdiabatic;
  double tf_ms = 2.4;
  std::vector<RampFamily> families{RampFamily::LocalAdiabatic, RampFamily::Exponential, RampFamily::Linear};
  std::vector<double> tf_grid_ms;  // empty -> 13 points on [0, tf_ms]

  int gap_grid = 200;
  int gap_states = 0;
  int dense_cap = kDefaultDenseCap;

  /// Piecewise gap model instead of diagonalizing at the working size.
  bool piecewise = false;
  std::optional<double> piecewise_bc_khz;
  std::optional<double> piecewise_delta_c_khz;
  /// Sizes whose critical points are extrapolated when B_c, Delta_c are not given.
  std::vector<int> extrapolate_from{3, 4, 5, 6, 7, 8, 9, 10};

  int snapshots = 101;
  double coherence_time_ms = 30.0;
  std::uint64_t repetitions = 4000;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int threads = 0;

  /// Throws ConfigError on any inconsistent field.
  void validate() const;
};

/// Parses and validates a config document. Keys absent from the document keep
/// their value from `base`. Errors name the offending line.
RunConfig parse_run_config(const std::string& text, const RunConfig& base = {});
RunConfig load_run_config(const std::string& path, const RunConfig& base = {});

/// Canonical JSON form; parse_run_config(to_json(c)) reproduces c.
nlohmann::ordered_json to_json(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

/// Couplings from the configured source at `num_spins` (trap voltages fixed by the calibration).
CouplingMatrix resolve_couplings(const RunConfig& config);
/// Same trap, different chain length.
CouplingMatrix resolve_couplings(const RunConfig& config, int num_spins);
/// Trap parameters in effect for the configured chain (after calibration).
std::optional<TrapConfig> resolve_trap(const RunConfig& config);

double resolve_b0(const RunConfig& config, const CouplingMatrix& couplings);

std::vector<double> resolve_tf_grid(const RunConfig& config);

}  // namespace ionramp
