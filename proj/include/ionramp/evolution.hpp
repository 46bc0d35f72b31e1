#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ionramp/ramps.hpp"
#include "ionramp/spectrum.hpp"
#include "ionramp/spin_model.hpp"

namespace ionramp {

struct EvolutionOptions {
  /// Upper bound on 2*pi*E_bound*dt per RK4 step, E_bound = n*B_0 + sum|J|.
  double max_phase_per_step = 0.03;
  /// Largest |norm - 1| tolerated over the run; exceeding it halves dt.
  double norm_tolerance = 1e-9;
  /// Also run at 2 dt and compare final states.
  bool halving_check = true;
  /// Allowed 1 - |<psi_dt|psi_dt/2>|^2.
  double fidelity_tolerance = 1e-6;
  /// Halvings attempted before giving up.
  int max_halvings = 4;
  /// Coherence time for the exp(-t/t_d) multiplier.
  double coherence_time_ms = 30.0;
  /// Keep full state vectors at each snapshot.
  bool keep_states = true;
};

/// Both AFM measures of a state: coherent overlap and summed Neel population.
struct AfmProbability {
  double overlap = 0.0;
  double population = 0.0;
};

/// Overlap uses (|0101..> + p|1010..>)/sqrt(2) with p the Z2 parity of the
/// field-aligned state, i.e. the Neel superposition reachable from it.
AfmProbability afm_ground_probability(const StateVector& state);

/// p * exp(-t / t_d).
double apply_decoherence(double probability, double t_ms, double coherence_time_ms);

struct OutcomeDistribution {
  int num_spins = 0;
  std::vector<double> probabilities;  // indexed by bitstring, sigma_x basis
};

OutcomeDistribution outcome_distribution(const StateVector& state);

struct EvolutionResult {
  double duration_ms = 0.0;
  double coherence_time_ms = 0.0;
  double dt_ms = 0.0;
  long steps = 0;
  double norm_drift = 0.0;   // max |norm - 1| over all steps
  int halvings = 0;          // halvings needed to pass the convergence check
  double halving_infidelity = 0.0;

  std::vector<double> times_ms;  // actual step times nearest the requested snapshots
  std::vector<StateVector> states;
  std::vector<double> overlap;
  std::vector<double> population;
  std::vector<double> decohered_overlap;
  std::vector<double> decohered_population;

  StateVector final_state;
};

/// Integrates i d(psi)/dt = 2*pi*H(B(t)) psi from the field-aligned state with fixed-step RK4.
/// `snapshots` must lie in [0, t_f]; the final state is always returned. States carry an
/// arbitrary global phase.
EvolutionResult evolve(const CouplingMatrix& couplings, const RampProfile& profile,
                       std::span<const double> snapshots = {}, const EvolutionOptions& opts = {});

/// Step size used for this schedule.
double rk4_step(const CouplingMatrix& couplings, const RampProfile& profile, const EvolutionOptions& opts);

/// <psi|H(0)|psi> - E_ground(H(0)) in kHz.
double mean_energy_imparted(const CouplingMatrix& couplings, const StateVector& state);

struct SweepRow {
  RampFamily family = RampFamily::Linear;
  double tf_ms = 0.0;
  double overlap = 0.0;
  double population = 0.0;
  double decohered = 0.0;  // overlap * exp(-t_f/t_d)
};

/// One evolve run per (family, t_f), ordered family-major. t_f = 0 returns
/// the initial state for every family.
std::vector<SweepRow> sweep_ramp_families(const CouplingMatrix& couplings, const GapCurve& gap,
                                          std::span<const double> tf_grid,
                                          std::span<const RampFamily> families,
                                          const EvolutionOptions& opts = {}, int threads = 0);

/// Final ideal overlap for one family and duration.
double final_overlap(const CouplingMatrix& couplings, const GapCurve& gap, RampFamily family,
                     double tf_ms, const EvolutionOptions& opts = {});

/// Shortest t_f at which the family's ideal overlap first reaches `target`.
/// Scans outward from `start_ms` in steps of `start_ms`, then bisects to `tolerance_ms`.
/// Returns nullopt if the target is not reached by `max_ms`.
std::optional<double> time_to_match(const CouplingMatrix& couplings, const GapCurve& gap,
                                    RampFamily family, double target, double start_ms,
                                    double max_ms, double tolerance_ms = 1e-3,
                                    const EvolutionOptions& opts = {});

}  // namespace ionramp
