#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ionramp/monotone_cubic.hpp"
#include "ionramp/spin_model.hpp"

namespace ionramp {

struct SpectrumOptions {
  int dense_cap = kDefaultDenseCap;
  /// Relative residual tolerance for the iterative path.
  double tolerance = 1e-11;
  std::uint64_t seed = 0x5eed;
};

/// Lowest eigenpairs of H at one field value.
struct LowSpectrum {
  double field_khz = 0.0;
  int num_spins = 0;
  std::vector<double> values;            // ascending, kHz
  std::vector<Eigen::VectorXd> vectors;  // real: H is real in the measurement basis
  bool iterative = false;
};

/// k lowest eigenpairs; dense for n <= dense_cap, Lanczos above.
LowSpectrum low_spectrum(const Hamiltonian& h, int k, const SpectrumOptions& opts = {});

struct CouplingCriteria {
  /// A level couples when |<e| sum_i Y_i |g>| > tolerance_per_sqrt_n * sqrt(n).
  double tolerance_per_sqrt_n = 1e-6;
  /// Adjacent levels closer than this (relative to ||H||) form one cluster.
  double degeneracy = 1e-5;
};

/// Ground state of the Z2 sector that contains the field-aligned initial state.
///
/// At small B the ground level is a near-degenerate pair, one member per Z2
/// sector. Projecting onto the sector reachable from the initial state removes
/// the arbitrary mixing an eigensolver returns inside such a pair.
Eigen::VectorXd sector_ground(const LowSpectrum& s, const CouplingCriteria& crit = {});

struct CoupledState {
  /// Full-spectrum index of the first coupled level. For a near-degenerate
  /// cluster this is the index of its top member, so a Z2 doublet at small B
  /// counts as occupying both of its slots.
  int index = -1;
  double gap_khz = 0.0;         // E_e - E_0
  double matrix_element = 0.0;  // |<e| dH/dB |g>|, summed in quadrature over the cluster
};

/// Lowest excited level with a non-vanishing dH/dB matrix element to `ground`.
/// Returns nullopt when none of the supplied levels couples (ask for more states).
std::optional<CoupledState> coupled_excited_index(const LowSpectrum& s,
                                                  const Eigen::VectorXd& ground,
                                                  const CouplingCriteria& crit = {});

/// Per-level matrix elements <e| sum_i Y_i |g> for every level in `s`.
std::vector<double> field_matrix_elements(const LowSpectrum& s, const Eigen::VectorXd& ground);

enum class GapSource { Computed, Piecewise };

struct GapPoint {
  double field_khz = 0.0;
  double gap_khz = 0.0;
  int coupled_index = -1;  // -1 when not computed from a spectrum
  double matrix_element = 0.0;
};

/// Sampled gap between the ground state and the first coupled excited state.
struct GapCurve {
  GapSource source = GapSource::Computed;
  double b0_khz = 0.0;
  std::vector<GapPoint> points;  // ascending in field
  /// max over the grid of |<e| dH/dB |g>|
  double epsilon = 0.0;
  /// Piecewise curves evaluate the closed form instead of interpolating.
  double piecewise_bc = 0.0;
  double piecewise_delta_c = 0.0;
  bool extrapolated = false;

  /// Delta(B); monotone-cubic interpolation for computed curves.
  double gap_at(double field_khz) const;
  std::vector<double> fields() const;
  std::vector<double> gaps() const;

  /// Rebuilds the cached interpolant; call after editing `points` directly.
  void rebuild_interpolant();

 private:
  std::shared_ptr<const MonotoneCubic> interp_;
};

struct GapCurveOptions {
  int grid = 200;
  /// Refine around the minimum until it is bracketed within this fraction of B_0.
  double bracket_fraction = 0.005;
  /// Bisect neighbours whose gaps differ by more than this fraction.
  double max_relative_jump = 0.25;
  /// Levels per field value; 0 -> 2n + 4.
  int states = 0;
  int threads = 0;
  SpectrumOptions spectrum;
  CouplingCriteria coupling;
};

GapPoint gap_point(const Hamiltonian& h, const GapCurveOptions& opts = {});

GapCurve gap_curve(const CouplingMatrix& couplings, double b0_khz, const GapCurveOptions& opts = {});

struct CriticalPoint {
  double field_khz = 0.0;  // B_c
  double gap_khz = 0.0;    // Delta_c
  /// Minimum sits on the first or last grid point (B_0 probably too small).
  bool at_endpoint = false;
};

/// Argmin of the sampled gap. Ties resolve to the largest field.
CriticalPoint critical_point(const GapCurve& curve);

/// Delta_c for B <= B_c, Delta_c + 4 (B - B_c) above.
double piecewise_gap_value(double field_khz, double bc_khz, double delta_c_khz);

/// Piecewise approximation sampled on a uniform grid over [0, B_0] that also contains B_c.
GapCurve piecewise_gap(double bc_khz, double delta_c_khz, double b0_khz, int grid = 200);

struct CriticalSample {
  int num_spins = 0;
  double field_khz = 0.0;
  double gap_khz = 0.0;
};

/// Delta_c = a N^p fitted in log-log space, B_c = c + d N fitted linearly.
struct CriticalExtrapolation {
  int num_spins = 0;
  double field_khz = 0.0;
  double gap_khz = 0.0;
  double gap_prefactor = 0.0;
  double gap_exponent = 0.0;
  double field_intercept = 0.0;
  double field_slope = 0.0;
  std::string model = "Delta_c = a*N^p (log-log least squares); B_c = c + d*N (least squares)";
};

CriticalExtrapolation extrapolate_critical(std::span<const CriticalSample> samples, int target_spins);

}  // namespace ionramp
