#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ionramp/spin_model.hpp"

namespace ionramp {

/// Linear Paul trap and Raman drive parameters that determine the Ising couplings.
///
/// Frequencies follow the lab convention: trap frequencies in MHz, everything
/// else in kHz. The beatnote sits at mu = (highest transverse mode) + detuning.
struct TrapConfig {
  int num_spins = 6;
  double axial_mhz = 0.7;
  double transverse_mhz = 4.8;
  double rabi_khz = 1000.0;
  double detuning_khz = 80.0;
  /// hbar (dk)^2 / 2M for 171Yb+ with orthogonal 355 nm Raman beams.
  double recoil_khz = 18.4;
  /// mu closer than this to any mode is rejected.
  double guard_band_khz = 3.0;

  /// Throws DomainError if any invariant is violated.
  void validate() const;
};

struct NormalModes {
  /// Mode frequencies in kHz, descending. Entry 0 is the center-of-mass mode.
  std::vector<double> frequencies_khz;
  /// Column m is the participation vector b_{i,m} of mode m.
  Eigen::MatrixXd vectors;
};

struct PowerLawFit {
  double j_max_khz = 0.0;
  double alpha = 0.0;
  /// RMS misfit of log J over all pairs.
  double residual = 0.0;

  double predict(int separation) const;
};

struct EquilibriumOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-12;
};

/// Equilibrium ion positions in units of the axial length scale
/// (e^2 / 4 pi eps0 M w_z^2)^(1/3), sorted ascending.
std::vector<double> equilibrium_positions(int num_spins, const EquilibriumOptions& opts = {});

/// Gradient of the dimensionless harmonic + Coulomb potential.
std::vector<double> equilibrium_gradient(const std::vector<double>& positions);

NormalModes transverse_modes(const TrapConfig& cfg);

/// Ising couplings from the transverse modes, uniform illumination.
CouplingMatrix ising_couplings(const TrapConfig& cfg);

/// Least-squares fit of log J_ij against log |i-j| over all pairs.
PowerLawFit fit_alpha(const CouplingMatrix& couplings);

struct CalibrationTarget {
  int num_spins = 6;
  double max_coupling_khz = 0.77;
  double alpha = 1.0;
};

/// Chooses detuning and Rabi frequency so that max J and the fitted alpha hit
/// the targets. Trap frequencies and recoil are taken from `base`.
TrapConfig calibrate_trap(const CalibrationTarget& target, const TrapConfig& base = {});

}  // namespace ionramp
