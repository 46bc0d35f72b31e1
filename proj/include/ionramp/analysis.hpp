#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ionramp/evolution.hpp"

namespace ionramp {

/// Histogram of simulated measurement outcomes.
struct SampledCounts {
  int num_spins = 0;
  std::vector<std::uint64_t> counts;  // indexed by bitstring
  std::uint64_t repetitions = 0;
  std::uint64_t seed = 0;
};

/// Multinomial draw of `repetitions` outcomes, reproducible for a given seed.
SampledCounts sample_counts(const OutcomeDistribution& dist, std::uint64_t repetitions, std::uint64_t seed);

struct RankedOutcome {
  std::uint64_t index = 0;
  double probability = 0.0;
};

struct PrevalenceReport {
  /// Every outcome, most probable first; ties by ascending index.
  std::vector<RankedOutcome> ranked;
  /// The k leading indices, sorted ascending.
  std::vector<std::uint64_t> top;
  double p_ground = 0.0;   // k-th ranked probability
  double p_excited = 0.0;  // (k+1)-th ranked probability
  double margin = 0.0;     // p_ground - p_excited
  /// nullopt when the top set is not separated (p_ground == p_excited).
  std::optional<std::uint64_t> repetitions_needed;
};

PrevalenceReport most_prevalent(const SampledCounts& counts, int k);
PrevalenceReport most_prevalent(const OutcomeDistribution& dist, int k);

/// Smallest integer n with n > (P_g^2 + P_e^2) / (P_g - P_e)^2.
/// nullopt when P_g <= P_e (the ground state cannot be identified).
std::optional<std::uint64_t> required_repetitions(double p_ground, double p_excited);

/// Fraction of `trials` seeded samplings whose top-k set equals the exact top-k set.
double ranking_stability(const OutcomeDistribution& dist, int k, std::uint64_t repetitions, int trials,
                         std::uint64_t seed, int threads = 0);

struct HalfLandauZenerOptions {
  /// Sweep starts at B_0 = start_ratio * max(Delta, sqrt(rate)).
  double start_ratio = 40.0;
  /// Largest 2*pi*|H|*dt per step.
  double max_phase_per_step = 0.05;
};

/// Two-level sweep H = B(t) sigma_z + (Delta/2) sigma_x with B falling linearly at
/// `rate_khz_per_ms` from B_0 to 0, starting in the ground state. Returns the
/// population left in the excited state of H(0).
double half_landau_zener(double gap_khz, double rate_khz_per_ms, const HalfLandauZenerOptions& opts = {});

}  // namespace ionramp
