#include "ionramp/trap_couplings.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ionramp/errors.hpp"

namespace ionramp {

void TrapConfig::validate() const {
  if (num_spins < 2 || num_spins > kMaxSpins) throw DomainError("trap needs 2..20 ions");
  if (!(axial_mhz > 0.0)) throw DomainError("axial frequency must be positive");
  if (!(transverse_mhz > axial_mhz)) {
    throw DomainError("transverse frequency must exceed the axial frequency");
  }
  if (!(detuning_khz > 0.0)) throw DomainError("detuning must be positive (beatnote above all modes)");
  if (!(rabi_khz > 0.0)) throw DomainError("Rabi frequency must be positive");
  if (!(recoil_khz > 0.0)) throw DomainError("recoil frequency must be positive");
  if (!(guard_band_khz >= 0.0)) throw DomainError("guard band must be non-negative");
}

double PowerLawFit::predict(int separation) const {
  return j_max_khz / std::pow(static_cast<double>(separation), alpha);
}

std::vector<double> equilibrium_gradient(const std::vector<double>& u) {
  const std::size_t n = u.size();
  std::vector<double> g(u);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = u[i] - u[j];
      g[i] -= std::copysign(1.0, d) / (d * d);
    }
  }
  return g;
}

namespace {

double potential(const std::vector<double>& u) {
  double v = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    v += 0.5 * u[i] * u[i];
    for (std::size_t j = i + 1; j < u.size(); ++j) v += 1.0 / std::abs(u[i] - u[j]);
  }
  return v;
}

double inf_norm(const std::vector<double>& g) {
  double m = 0.0;
  for (double x : g) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<double> equilibrium_positions(int num_spins, const EquilibriumOptions& opts) {
  if (num_spins < 2) throw DomainError("equilibrium positions need at least 2 ions");
  const int n = num_spins;
  // Start from a uniform chain with roughly the right extent.
  std::vector<double> u(n);
  const double half = 0.5 * std::pow(3.0 * n, 1.0 / 3.0) * std::sqrt(static_cast<double>(n)) / 1.2;
  for (int i = 0; i < n; ++i) u[i] = n == 1 ? 0.0 : -half + 2.0 * half * i / (n - 1);

  // Damped Newton: one Hessian solve per step, backtracking on the potential.
  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto g = equilibrium_gradient(u);
    if (inf_norm(g) < opts.gradient_tolerance) {
      std::sort(u.begin(), u.end());
      return u;
    }
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      hess(i, i) = 1.0;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double c = 2.0 / std::pow(std::abs(u[i] - u[j]), 3);
        hess(i, i) += c;
        hess(i, j) = -c;
      }
    }
    Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), n);
    Eigen::VectorXd step = hess.ldlt().solve(-gv);
    double extent = 0.0;
    for (double x : u) extent = std::max(extent, std::abs(x));
    // Newton step at rounding level: the gradient cannot get any smaller.
    if (step.lpNorm<Eigen::Infinity>() < 1e-14 * extent) break;
    const double v0 = potential(u);
    const double g0 = inf_norm(g);
    double scale = 1.0;
    std::vector<double> trial(n);
    for (int ls = 0; ls < 60; ++ls) {
      for (int i = 0; i < n; ++i) trial[i] = u[i] + scale * step(i);
      bool ordered = true;
      for (int i = 1; i < n; ++i) ordered = ordered && trial[i] > trial[i - 1];
      // Near the minimum the potential change drowns in rounding; fall back to the gradient.
      if (ordered && (potential(trial) < v0 || inf_norm(equilibrium_gradient(trial)) < g0)) break;
      scale *= 0.5;
    }
    u = trial;
  }
  const auto g = equilibrium_gradient(u);
  if (inf_norm(g) < std::max(opts.gradient_tolerance, 1e-10)) {
    std::sort(u.begin(), u.end());
    return u;
  }
  throw NumericalError("equilibrium solver did not converge for " + std::to_string(n) +
                       " ions (gradient " + std::to_string(inf_norm(g)) + ")");
}

NormalModes transverse_modes(const TrapConfig& cfg) {
  cfg.validate();
  const int n = cfg.num_spins;
  const auto u = equilibrium_positions(n);
  const double ratio2 = std::pow(cfg.transverse_mhz / cfg.axial_mhz, 2);

  // Stiffness in units of w_z^2. Rows sum to (w_x/w_z)^2, so the uniform
  // vector is an exact eigenvector (center-of-mass mode).
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = ratio2;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = 1.0 / std::pow(std::abs(u[i] - u[j]), 3);
      k(i, i) -= c;
      k(i, j) = c;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  if (es.info() != Eigen::Success) throw NumericalError("normal mode eigensolver failed");

  NormalModes modes;
  modes.vectors.resize(n, n);
  const double fz_khz = cfg.axial_mhz * 1000.0;
  for (int m = 0; m < n; ++m) {
    const int src = n - 1 - m;  // descending
    const double lambda = es.eigenvalues()(src);
    if (lambda <= 0.0) {
      throw NumericalError("transverse mode " + std::to_string(m) +
                           " has imaginary frequency (zigzag instability) for " +
                           std::to_string(n) + " ions");
    }
    modes.frequencies_khz.push_back(fz_khz * std::sqrt(lambda));
    Eigen::VectorXd v = es.eigenvectors().col(src);
    // Deterministic sign: first component with non-negligible weight is positive.
    for (int i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-8) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    modes.vectors.col(m) = v;
  }
  // Pin the COM frequency to f_x exactly; the eigensolver value differs by roundoff.
  modes.frequencies_khz[0] = cfg.transverse_mhz * 1000.0;
  return modes;
}

CouplingMatrix ising_couplings(const TrapConfig& cfg) {
  const auto modes = transverse_modes(cfg);
  const int n = cfg.num_spins;
  const double mu = modes.frequencies_khz.front() + cfg.detuning_khz;
  for (std::size_t m = 0; m < modes.frequencies_khz.size(); ++m) {
    if (std::abs(mu - modes.frequencies_khz[m]) < cfg.guard_band_khz) {
      throw DomainError("beatnote within " + std::to_string(cfg.guard_band_khz) +
                        " kHz of mode " + std::to_string(m));
    }
  }
  // 2 pi J_ij = Omega^2 R sum_m b_im b_jm / (mu^2 - w_m^2)
  const double prefactor = cfg.rabi_khz * cfg.rabi_khz * cfg.recoil_khz / (2.0 * std::numbers::pi);
  CouplingMatrix out{SpinCount(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) {
        const double w = modes.frequencies_khz[m];
        s += modes.vectors(i, m) * modes.vectors(j, m) / (mu * mu - w * w);
      }
      out.set(i, j, prefactor * s);
    }
  }
  return out;
}

PowerLawFit fit_alpha(const CouplingMatrix& couplings) {
  const int n = couplings.size();
  if (n < 3) throw DomainError("power-law fit needs at least 3 spins (two distinct separations)");
  if (!couplings.all_positive()) throw DomainError("power-law fit needs all couplings > 0");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double x = std::log(static_cast<double>(j - i));
      const double y = std::log(couplings(i, j));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++count;
    }
  }
  const double denom = count * sxx - sx * sx;
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;
  PowerLawFit fit;
  fit.alpha = -slope;
  fit.j_max_khz = std::exp(intercept);
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = std::log(couplings(i, j)) - (intercept + slope * std::log(double(j - i)));
      ss += r * r;
    }
  }
  fit.residual = std::sqrt(ss / count);
  return fit;
}

TrapConfig calibrate_trap(const CalibrationTarget& target, const TrapConfig& base) {
  if (!(target.max_coupling_khz > 0.0) || !(target.alpha > 0.0)) {
    throw DomainError("calibration targets must be positive");
  }
  TrapConfig cfg = base;
  cfg.num_spins = target.num_spins;
  cfg.validate();

  // alpha depends only on the detuning and grows with it (from ~0 at the COM
  // mode towards the dipolar limit 3), so a bracketed bisection suffices.
  auto alpha_at = [&](double detuning) {
    TrapConfig c = cfg;
    c.detuning_khz = detuning;
    return fit_alpha(ising_couplings(c)).alpha;
  };
  double lo = std::max(cfg.guard_band_khz * 1.01, 1e-3);
  double hi = 1000.0;
  while (alpha_at(hi) < target.alpha) {
    hi *= 2.0;
    if (hi > 1e7) throw NumericalError("calibration: target alpha not reachable");
  }
  if (alpha_at(lo) > target.alpha) throw NumericalError("calibration: target alpha too small");
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (alpha_at(mid) < target.alpha ? lo : hi) = mid;
  }
  cfg.detuning_khz = 0.5 * (lo + hi);

  // J scales as Omega^2.
  const double jmax = ising_couplings(cfg).max();
  cfg.rabi_khz *= std::sqrt(target.max_coupling_khz / jmax);
  return cfg;
}

}  // namespace ionramp
