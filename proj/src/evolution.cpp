#include "ionramp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "ionramp/errors.hpp"
#include "ionramp/parallel.hpp"

namespace ionramp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// out = -i 2pi (D - shift + B sum_i flip_i) in
void derivative(std::span<const double> diag, int n, double field, double shift, const Amplitude* in,
                Amplitude* out) {
  const std::size_t dim = diag.size();
  for (std::size_t b = 0; b < dim; ++b) out[b] = (diag[b] - shift) * in[b];
  // Bit-major sweep: contiguous runs of pairs (b, b | mask).
  for (int i = 0; i < n; ++i) {
    const std::size_t mask = std::size_t{1} << i;
    for (std::size_t hi = 0; hi < dim; hi += 2 * mask) {
      for (std::size_t b = hi; b < hi + mask; ++b) {
        out[b] += field * in[b | mask];
        out[b | mask] += field * in[b];
      }
    }
  }
  for (std::size_t b = 0; b < dim; ++b) out[b] = Amplitude(kTwoPi * out[b].imag(), -kTwoPi * out[b].real());
}

double norm_sq(const std::vector<Amplitude>& v) {
  double s = 0.0;
  for (const auto& a : v) s += std::norm(a);
  return s;
}

struct Run {
  double dt = 0.0;
  double norm_drift = 0.0;
  std::vector<double> times;
  std::vector<StateVector> states;  // one per snapshot
  StateVector final_state;
};

Run integrate(const CouplingMatrix& couplings, const RampProfile& profile, std::span<const double> snapshots,
              long steps) {
  const int n = couplings.size();
  const std::vector<double> diag = ising_diagonal(couplings);
  const std::size_t dim = diag.size();
  const double tf = profile.duration();
  const double dt = tf / static_cast<double>(steps);

  // Snapshot k is taken after step_of[k] steps.
  std::vector<long> step_of(snapshots.size());
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    step_of[k] = std::clamp(std::lround(snapshots[k] / dt), 0L, steps);
  }

  Run run;
  run.dt = dt;
  run.times.resize(snapshots.size());
  run.states.resize(snapshots.size());
  std::vector<Amplitude> psi = field_aligned_state(SpinCount(n)).amplitudes;
  std::vector<Amplitude> k(dim), tmp(dim), acc(dim);

  auto record = [&](long step) {
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
      if (step_of[s] != step) continue;
      run.times[s] = step * dt;
      run.states[s] = StateVector(n, psi);
    }
  };
  record(0);

  for (long j = 0; j < steps; ++j) {
    const double t = j * dt;
    const double b_start = profile.field_at(t);
    const double b_mid = profile.field_at(t + 0.5 * dt);
    // Sample the end of the last step just inside t_f so a clamp at t_f does not leak in.
    const double b_end = profile.field_at(j + 1 == steps ? std::nextafter(tf, 0.0) : t + dt);

    // Measuring energies from <H> only changes the global phase, but it keeps
    // the RK4 amplification factor close to 1 for the occupied levels.
    derivative(diag, n, b_start, 0.0, psi.data(), k.data());
    Amplitude pk = 0.0;
    for (std::size_t b = 0; b < dim; ++b) pk += std::conj(psi[b]) * k[b];
    const double shift = -pk.imag() / kTwoPi;
    for (std::size_t b = 0; b < dim; ++b) k[b] += Amplitude(0.0, kTwoPi * shift) * psi[b];

    acc = psi;
    for (std::size_t b = 0; b < dim; ++b) {
      acc[b] += (dt / 6.0) * k[b];
      tmp[b] = psi[b] + (0.5 * dt) * k[b];
    }
    derivative(diag, n, b_mid, shift, tmp.data(), k.data());
    for (std::size_t b = 0; b < dim; ++b) {
      acc[b] += (dt / 3.0) * k[b];
      tmp[b] = psi[b] + (0.5 * dt) * k[b];
    }
    derivative(diag, n, b_mid, shift, tmp.data(), k.data());
    for (std::size_t b = 0; b < dim; ++b) {
      acc[b] += (dt / 3.0) * k[b];
      tmp[b] = psi[b] + dt * k[b];
    }
    derivative(diag, n, b_end, shift, tmp.data(), k.data());
    for (std::size_t b = 0; b < dim; ++b) psi[b] = acc[b] + (dt / 6.0) * k[b];

    const double nrm = norm_sq(psi);
    if (!std::isfinite(nrm)) throw NumericalError("integrator diverged at t = " + std::to_string(t) + " ms");
    run.norm_drift = std::max(run.norm_drift, std::abs(std::sqrt(nrm) - 1.0));
    record(j + 1);
  }
  run.final_state = StateVector(n, std::move(psi));
  return run;
}

}  // namespace

AfmProbability afm_ground_probability(const StateVector& state) {
  const auto [a, b] = neel_indices(state.num_spins);
  const double parity = field_aligned_parity(state.num_spins);
  const Amplitude ca = state.amplitudes.at(a), cb = state.amplitudes.at(b);
  AfmProbability p;
  p.overlap = 0.5 * std::norm(ca + parity * cb);
  p.population = std::norm(ca) + std::norm(cb);
  return p;
}

double apply_decoherence(double probability, double t_ms, double coherence_time_ms) {
  if (t_ms < 0.0 || !(coherence_time_ms > 0.0)) throw DomainError("decoherence needs t >= 0 and t_d > 0");
  return probability * std::exp(-t_ms / coherence_time_ms);
}

OutcomeDistribution outcome_distribution(const StateVector& state) {
  OutcomeDistribution d;
  d.num_spins = state.num_spins;
  d.probabilities.reserve(state.dimension());
  for (const auto& a : state.amplitudes) d.probabilities.push_back(std::norm(a));
  return d;
}

double rk4_step(const CouplingMatrix& couplings, const RampProfile& profile, const EvolutionOptions& opts) {
  if (!(opts.max_phase_per_step > 0.0)) throw DomainError("max_phase_per_step must be positive");
  const double bound = couplings.size() * profile.b0() + couplings.sum_abs();
  return opts.max_phase_per_step / (kTwoPi * std::max(bound, 1e-12));
}

EvolutionResult evolve(const CouplingMatrix& couplings, const RampProfile& profile,
                       std::span<const double> snapshots, const EvolutionOptions& opts) {
  const double tf = profile.duration();
  if (!(tf > 0.0)) throw DomainError("evolution needs t_f > 0");
  for (double s : snapshots) {
    if (s < 0.0 || s > tf) throw DomainError("snapshot " + std::to_string(s) + " ms outside [0, t_f]");
  }
  if (!(opts.coherence_time_ms > 0.0)) throw DomainError("coherence time must be positive");

  long steps = std::max(1L, static_cast<long>(std::ceil(tf / rk4_step(couplings, profile, opts))));
  if (opts.halving_check && steps % 2 != 0) ++steps;
  Run run = integrate(couplings, profile, snapshots, steps);
  int halvings = 0;
  double infidelity = 0.0;
  std::optional<Run> coarse;
  if (opts.halving_check) coarse = integrate(couplings, profile, {}, steps / 2);
  for (;;) {
    // Compare against the run at twice the step; halve until both checks pass.
    if (coarse) {
      const double scale = coarse->final_state.norm() * run.final_state.norm();
      infidelity = std::max(0.0, 1.0 - std::norm(coarse->final_state.inner(run.final_state)) / (scale * scale));
    }
    const bool converged = !coarse || infidelity <= opts.fidelity_tolerance;
    if (converged && run.norm_drift <= opts.norm_tolerance) break;
    if (++halvings > opts.max_halvings) {
      char detail[96];
      std::snprintf(detail, sizeof detail, " halvings (infidelity %.3e, norm drift %.3e)", infidelity, run.norm_drift);
      throw NumericalError("RK4 step not converged after " + std::to_string(opts.max_halvings) + detail);
    }
    steps *= 2;
    if (coarse) coarse = std::move(run);
    run = integrate(couplings, profile, snapshots, steps);
  }

  EvolutionResult r;
  r.duration_ms = tf;
  r.coherence_time_ms = opts.coherence_time_ms;
  r.dt_ms = run.dt;
  r.steps = steps;
  r.norm_drift = run.norm_drift;
  r.halvings = halvings;
  r.halving_infidelity = infidelity;
  r.times_ms = run.times;
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    const auto p = afm_ground_probability(run.states[k]);
    r.overlap.push_back(p.overlap);
    r.population.push_back(p.population);
    r.decohered_overlap.push_back(apply_decoherence(p.overlap, r.times_ms[k], opts.coherence_time_ms));
    r.decohered_population.push_back(apply_decoherence(p.population, r.times_ms[k], opts.coherence_time_ms));
  }
  if (opts.keep_states) r.states = std::move(run.states);
  r.final_state = std::move(run.final_state);
  return r;
}

double mean_energy_imparted(const CouplingMatrix& couplings, const StateVector& state) {
  const std::vector<double> diag = ising_diagonal(couplings);
  if (diag.size() != state.dimension()) throw DimensionError("state and couplings differ in spin count");
  double e = 0.0;
  for (std::size_t b = 0; b < diag.size(); ++b) e += diag[b] * std::norm(state.amplitudes[b]);
  return e - *std::min_element(diag.begin(), diag.end());
}

namespace {

StateVector final_state_for(const CouplingMatrix& couplings, const GapCurve& gap, RampFamily family, double tf,
                            const EvolutionOptions& opts) {
  if (tf == 0.0) return field_aligned_state(couplings.spins());
  EvolutionOptions o = opts;
  o.keep_states = false;
  return evolve(couplings, make_ramp(family, gap, tf), {}, o).final_state;
}

}  // namespace

std::vector<SweepRow> sweep_ramp_families(const CouplingMatrix& couplings, const GapCurve& gap,
                                          std::span<const double> tf_grid,
                                          std::span<const RampFamily> families,
                                          const EvolutionOptions& opts, int threads) {
  if (tf_grid.empty()) throw DomainError("t_f grid is empty");
  for (double tf : tf_grid) {
    if (tf < 0.0) throw DomainError("t_f must be >= 0");
  }
  std::vector<SweepRow> rows(tf_grid.size() * families.size());
  parallel_for(
      rows.size(),
      [&](std::size_t idx) {
        const RampFamily f = families[idx / tf_grid.size()];
        const double tf = tf_grid[idx % tf_grid.size()];
        const auto p = afm_ground_probability(final_state_for(couplings, gap, f, tf, opts));
        rows[idx] = {f, tf, p.overlap, p.population, apply_decoherence(p.overlap, tf, opts.coherence_time_ms)};
      },
      threads);
  return rows;
}

double final_overlap(const CouplingMatrix& couplings, const GapCurve& gap, RampFamily family, double tf_ms,
                     const EvolutionOptions& opts) {
  if (tf_ms < 0.0) throw DomainError("t_f must be >= 0");
  return afm_ground_probability(final_state_for(couplings, gap, family, tf_ms, opts)).overlap;
}

std::optional<double> time_to_match(const CouplingMatrix& couplings, const GapCurve& gap, RampFamily family,
                                    double target, double start_ms, double max_ms, double tolerance_ms,
                                    const EvolutionOptions& opts) {
  if (!(start_ms > 0.0) || !(max_ms >= start_ms) || !(tolerance_ms > 0.0)) {
    throw DomainError("time_to_match needs 0 < start <= max and a positive tolerance");
  }
  double lo = 0.0, hi = 0.0;
  for (double t = start_ms;; t += start_ms) {
    if (t > max_ms) return std::nullopt;
    if (final_overlap(couplings, gap, family, t, opts) >= target) {
      hi = t;
      break;
    }
    lo = t;
  }
  while (hi - lo > tolerance_ms) {
    const double mid = 0.5 * (lo + hi);
    (final_overlap(couplings, gap, family, mid, opts) >= target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace ionramp
