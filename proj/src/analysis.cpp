#include "ionramp/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "ionramp/errors.hpp"
#include "ionramp/parallel.hpp"

namespace ionramp {

SampledCounts sample_counts(const OutcomeDistribution& dist, std::uint64_t repetitions, std::uint64_t seed) {
  if (repetitions == 0) throw DomainError("repetitions must be positive");
  const auto& p = dist.probabilities;
  double mass = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw DomainError("outcome probabilities must be non-negative");
    mass += x;
  }
  if (!(mass > 0.0)) throw DomainError("outcome distribution is empty");

  SampledCounts s;
  s.num_spins = dist.num_spins;
  s.counts.assign(p.size(), 0);
  s.repetitions = repetitions;
  s.seed = seed;

  // Conditional binomials: outcome i takes Bin(remaining, p_i / remaining mass).
  std::mt19937_64 rng(seed);
  std::uint64_t left = repetitions;
  double mass_left = mass;
  for (std::size_t i = 0; i < p.size() && left > 0; ++i) {
    if (p[i] <= 0.0) continue;
    const double q = std::clamp(p[i] / mass_left, 0.0, 1.0);
    std::uint64_t c = left;
    if (q < 1.0) {
      std::binomial_distribution<std::uint64_t> bin(left, q);
      c = bin(rng);
    }
    s.counts[i] = c;
    left -= c;
    mass_left -= p[i];
    if (mass_left <= 0.0) mass_left = 0.0;
  }
  // Rounding in the running mass can strand a few draws; give them to the last supported outcome.
  if (left > 0) {
    for (std::size_t i = p.size(); i-- > 0;) {
      if (p[i] > 0.0) {
        s.counts[i] += left;
        break;
      }
    }
  }
  return s;
}

namespace {

PrevalenceReport rank(const std::vector<double>& prob, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > prob.size()) throw DomainError("k must be in [1, number of outcomes]");
  std::vector<std::uint64_t> order(prob.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint64_t a, std::uint64_t b) { return prob[a] > prob[b]; });

  PrevalenceReport r;
  r.ranked.reserve(order.size());
  for (auto i : order) r.ranked.push_back({i, prob[i]});
  r.top.assign(order.begin(), order.begin() + k);
  std::sort(r.top.begin(), r.top.end());
  r.p_ground = prob[order[k - 1]];
  r.p_excited = static_cast<std::size_t>(k) < order.size() ? prob[order[k]] : 0.0;
  r.margin = r.p_ground - r.p_excited;
  r.repetitions_needed = required_repetitions(r.p_ground, r.p_excited);
  return r;
}

}  // namespace

PrevalenceReport most_prevalent(const SampledCounts& counts, int k) {
  if (counts.repetitions == 0) throw DomainError("counts are empty");
  std::vector<double> prob(counts.counts.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    prob[i] = static_cast<double>(counts.counts[i]) / static_cast<double>(counts.repetitions);
  }
  return rank(prob, k);
}

PrevalenceReport most_prevalent(const OutcomeDistribution& dist, int k) { return rank(dist.probabilities, k); }

std::optional<std::uint64_t> required_repetitions(double p_ground, double p_excited) {
  if (!(p_ground >= 0.0 && p_ground <= 1.0) || !(p_excited >= 0.0 && p_excited <= 1.0)) {
    throw DomainError("probabilities must lie in [0, 1]");
  }
  if (!(p_ground > p_excited)) return std::nullopt;
  const double diff = p_ground - p_excited;
  const double bound = (p_ground * p_ground + p_excited * p_excited) / (diff * diff);
  // An integer bound computed with rounding noise still needs one more repetition.
  const double nearest = std::round(bound);
  const double base = std::abs(bound - nearest) <= 1e-9 * std::max(1.0, bound) ? nearest : std::floor(bound);
  return static_cast<std::uint64_t>(base) + 1;
}

double ranking_stability(const OutcomeDistribution& dist, int k, std::uint64_t repetitions, int trials,
                         std::uint64_t seed, int threads) {
  if (trials < 1) throw DomainError("trials must be positive");
  const auto exact = most_prevalent(dist, k).top;
  std::vector<char> hit(trials, 0);
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t t) {
        const auto counts = sample_counts(dist, repetitions, seed + t);
        hit[t] = most_prevalent(counts, k).top == exact;
      },
      threads);
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / trials;
}

namespace {

using Spinor = std::array<std::complex<double>, 2>;

// exp(-i phi (nx sigma_x + nz sigma_z)) applied to v, for the real field (hx, hz) over dt.
void rotate(double hx, double hz, double dt, Spinor& v) {
  const double mag = std::hypot(hx, hz);
  if (mag == 0.0) return;
  const double phi = 2.0 * std::numbers::pi * mag * dt;
  const double c = std::cos(phi), s = std::sin(phi);
  const double nx = hx / mag, nz = hz / mag;
  const std::complex<double> mi(0.0, -s);
  const Spinor in = v;
  v[0] = c * in[0] + mi * (nz * in[0] + nx * in[1]);
  v[1] = c * in[1] + mi * (nx * in[0] - nz * in[1]);
}

}  // namespace

double half_landau_zener(double gap_khz, double rate_khz_per_ms, const HalfLandauZenerOptions& opts) {
  if (!(gap_khz > 0.0) || !(rate_khz_per_ms > 0.0) || !std::isfinite(rate_khz_per_ms)) {
    throw DomainError("half Landau-Zener needs a positive gap and a finite positive rate");
  }
  const double hx = 0.5 * gap_khz;
  const double b0 = opts.start_ratio * std::max(gap_khz, std::sqrt(rate_khz_per_ms));
  const double total = b0 / rate_khz_per_ms;

  const double theta = std::atan2(hx, b0);
  Spinor psi{std::complex<double>(-std::sin(0.5 * theta)), std::complex<double>(std::cos(0.5 * theta))};

  // Fourth-order commutator-free Magnus: two exponentials of Gauss-node combinations.
  const double r3 = std::sqrt(3.0);
  const double c1 = 0.5 - r3 / 6.0, c2 = 0.5 + r3 / 6.0;
  const double a1 = 0.25 + r3 / 6.0, a2 = 0.25 - r3 / 6.0;
  auto field = [&](double t) { return b0 - rate_khz_per_ms * t; };

  double t = 0.0;
  while (t < total) {
    const double b = field(t);
    double dt = opts.max_phase_per_step / (2.0 * std::numbers::pi * std::hypot(b, hx));
    dt = std::min(dt, total - t);
    const double b1 = field(t + c1 * dt), b2 = field(t + c2 * dt);
    rotate(0.5 * hx, a1 * b1 + a2 * b2, dt, psi);
    rotate(0.5 * hx, a2 * b1 + a1 * b2, dt, psi);
    t += dt;
  }
  // Excited state of (Delta/2) sigma_x is (1, 1)/sqrt(2).
  return 0.5 * std::norm(psi[0] + psi[1]);
}

}  // namespace ionramp
