#include "ionramp/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <lapacke.h>

#include "ionramp/errors.hpp"
#include "ionramp/lanczos.hpp"
#include "ionramp/parallel.hpp"

namespace ionramp {

LowSpectrum low_spectrum(const Hamiltonian& h, int k, const SpectrumOptions& opts) {
  const std::size_t dim = h.dimension();
  if (k < 1 || static_cast<std::size_t>(k) > dim) {
    throw DomainError("asked for " + std::to_string(k) + " levels of a " + std::to_string(dim) +
                      "-level system");
  }
  LowSpectrum s;
  s.field_khz = h.field();
  s.num_spins = h.num_spins();
  if (h.num_spins() <= opts.dense_cap) {
    // Only the k lowest pairs: LAPACK's MRRR driver with an index range.
    Eigen::MatrixXd a = h.dense_matrix(opts.dense_cap);
    const auto nd = static_cast<lapack_int>(dim);
    std::vector<double> w(dim);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(dim), k);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', nd, a.data(), nd, 0.0, 0.0, 1, k, 0.0,
                                           &found, w.data(), z.data(), nd, support.data());
    if (info != 0 || found != k) throw NumericalError("dense eigensolver failed (info " + std::to_string(info) + ")");
    for (int i = 0; i < k; ++i) {
      s.values.push_back(w[i]);
      s.vectors.emplace_back(z.col(i));
    }
    return s;
  }
  LanczosOptions lo;
  lo.tolerance = opts.tolerance;
  lo.seed = opts.seed;
  auto op = [&h, dim](const double* x, double* y) {
    h.apply(std::span<const double>(x, dim), std::span<double>(y, dim));
  };
  auto pairs = lanczos_lowest(op, dim, k, h.norm_bound(), lo);
  s.values = std::move(pairs.values);
  s.vectors = std::move(pairs.vectors);
  s.iterative = true;
  return s;
}

namespace {

double cluster_tolerance(const LowSpectrum& s, const CouplingCriteria& crit) {
  double scale = 1.0;
  for (double v : s.values) scale = std::max(scale, std::abs(v));
  return std::max(1e-9, crit.degeneracy * scale);
}

// Index ranges [first, last] of near-degenerate runs of levels.
std::vector<std::pair<int, int>> clusters(const LowSpectrum& s, double tol) {
  std::vector<std::pair<int, int>> out;
  const int k = static_cast<int>(s.values.size());
  int first = 0;
  for (int i = 1; i <= k; ++i) {
    if (i == k || s.values[i] - s.values[i - 1] > tol) {
      out.emplace_back(first, i - 1);
      first = i;
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd sector_ground(const LowSpectrum& s, const CouplingCriteria& crit) {
  if (s.values.empty()) throw DomainError("empty spectrum");
  const int n = s.num_spins;
  const double parity = field_aligned_parity(n);
  const auto groups = clusters(s, cluster_tolerance(s, crit));
  const int last = groups.front().second;

  Eigen::VectorXd best;
  double best_norm = -1.0;
  Eigen::VectorXd flipped(s.vectors[0].size());
  for (int i = 0; i <= last; ++i) {
    const auto& v = s.vectors[i];
    apply_global_flip(n, std::span<const double>(v.data(), v.size()),
                      std::span<double>(flipped.data(), flipped.size()));
    Eigen::VectorXd p = 0.5 * (v + parity * flipped);
    const double nrm = p.norm();
    if (nrm > best_norm) {
      best_norm = nrm;
      best = p;
    }
  }
  if (best_norm < 1e-6) throw NumericalError("ground level has no weight in the initial-state sector");
  return best / best_norm;
}

std::vector<double> field_matrix_elements(const LowSpectrum& s, const Eigen::VectorXd& ground) {
  Eigen::VectorXd yg(ground.size());
  apply_field_operator(s.num_spins, std::span<const double>(ground.data(), ground.size()),
                       std::span<double>(yg.data(), yg.size()));
  std::vector<double> out;
  out.reserve(s.vectors.size());
  for (const auto& v : s.vectors) out.push_back(v.dot(yg));
  return out;
}

std::optional<CoupledState> coupled_excited_index(const LowSpectrum& s,
                                                  const Eigen::VectorXd& ground,
                                                  const CouplingCriteria& crit) {
  const auto elements = field_matrix_elements(s, ground);
  const double threshold = crit.tolerance_per_sqrt_n * std::sqrt(static_cast<double>(s.num_spins));
  const auto groups = clusters(s, cluster_tolerance(s, crit));
  const int k = static_cast<int>(s.values.size());
  const std::size_t dim = std::size_t{1} << s.num_spins;

  for (std::size_t c = 1; c < groups.size(); ++c) {
    const auto [first, last] = groups[c];
    double sum2 = 0.0;
    int strongest = first;
    for (int i = first; i <= last; ++i) {
      sum2 += elements[i] * elements[i];
      if (std::abs(elements[i]) > std::abs(elements[strongest])) strongest = i;
    }
    const double element = std::sqrt(sum2);
    if (element <= threshold) continue;
    // A cluster cut off by the end of the supplied levels may have more members.
    if (last == k - 1 && static_cast<std::size_t>(k) < dim) return std::nullopt;
    CoupledState out;
    out.index = last;
    out.gap_khz = s.values[strongest] - s.values[0];
    out.matrix_element = element;
    return out;
  }
  return std::nullopt;
}

double GapCurve::gap_at(double field_khz) const {
  if (source == GapSource::Piecewise) return piecewise_gap_value(field_khz, piecewise_bc, piecewise_delta_c);
  if (interp_) return (*interp_)(field_khz);
  return MonotoneCubic(fields(), gaps())(field_khz);
}

std::vector<double> GapCurve::fields() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.field_khz);
  return out;
}

std::vector<double> GapCurve::gaps() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.gap_khz);
  return out;
}

void GapCurve::rebuild_interpolant() {
  interp_ = points.size() >= 2 ? std::make_shared<const MonotoneCubic>(fields(), gaps()) : nullptr;
}

GapPoint gap_point(const Hamiltonian& h, const GapCurveOptions& opts) {
  const std::size_t dim = h.dimension();
  const int n = h.num_spins();
  int k = opts.states > 0 ? opts.states : 2 * n + 4;
  k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), dim));
  for (;;) {
    const auto s = low_spectrum(h, k, opts.spectrum);
    const auto ground = sector_ground(s, opts.coupling);
    if (auto c = coupled_excited_index(s, ground, opts.coupling)) {
      return GapPoint{h.field(), c->gap_khz, c->index, c->matrix_element};
    }
    if (static_cast<std::size_t>(k) == dim) {
      throw NumericalError("no coupled excited state at B = " + std::to_string(h.field()) + " kHz");
    }
    k = static_cast<int>(std::min<std::size_t>(2 * static_cast<std::size_t>(k), dim));
  }
}

GapCurve gap_curve(const CouplingMatrix& couplings, double b0_khz, const GapCurveOptions& opts) {
  if (opts.grid < 50) throw DomainError("gap curve grid needs at least 50 points");
  if (!(b0_khz > 0.0)) throw DomainError("B_0 must be positive");
  const Hamiltonian base(couplings, TransverseField(0.0));

  GapCurve curve;
  curve.b0_khz = b0_khz;

  // At B = 0 the classical spectrum is degenerate and the coupled level jumps;
  // that sample stands for the B -> 0+ limit, taken at the first positive grid field.
  const double zero_probe = b0_khz / (opts.grid - 1);
  auto evaluate = [&](const std::vector<double>& fields) {
    std::vector<GapPoint> fresh(fields.size());
    parallel_for(
        fields.size(),
        [&](std::size_t i) {
          const double b = fields[i] == 0.0 ? zero_probe : fields[i];
          fresh[i] = gap_point(base.with_field(TransverseField(b)), opts);
          fresh[i].field_khz = fields[i];
        },
        opts.threads);
    curve.points.insert(curve.points.end(), fresh.begin(), fresh.end());
    std::sort(curve.points.begin(), curve.points.end(),
              [](const GapPoint& a, const GapPoint& b) { return a.field_khz < b.field_khz; });
  };

  std::vector<double> grid(opts.grid);
  for (int i = 0; i < opts.grid; ++i) grid[i] = b0_khz * i / (opts.grid - 1);
  grid.back() = b0_khz;
  evaluate(grid);

  const double min_spacing = 1e-7 * b0_khz;
  for (int round = 0; round < 8; ++round) {
    std::vector<double> extra;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
      const auto& a = curve.points[i];
      const auto& b = curve.points[i + 1];
      const double jump = std::abs(a.gap_khz - b.gap_khz) / std::min(a.gap_khz, b.gap_khz);
      if (jump > opts.max_relative_jump && b.field_khz - a.field_khz > min_spacing)
        extra.push_back(0.5 * (a.field_khz + b.field_khz));
    }
    if (extra.empty()) break;
    evaluate(extra);
  }

  for (int round = 0; round < 40; ++round) {
    std::size_t imin = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
      if (curve.points[i].gap_khz <= curve.points[imin].gap_khz) imin = i;
    const std::size_t lo = imin == 0 ? 0 : imin - 1;
    const std::size_t hi = std::min(imin + 1, curve.points.size() - 1);
    const double left = curve.points[lo].field_khz;
    const double mid = curve.points[imin].field_khz;
    const double right = curve.points[hi].field_khz;
    if (right - left <= opts.bracket_fraction * b0_khz) break;
    std::vector<double> extra;
    if (mid - left > min_spacing) extra.push_back(0.5 * (left + mid));
    if (right - mid > min_spacing) extra.push_back(0.5 * (mid + right));
    if (extra.empty()) break;
    evaluate(extra);
  }

  for (const auto& p : curve.points) curve.epsilon = std::max(curve.epsilon, p.matrix_element);
  curve.rebuild_interpolant();
  return curve;
}

CriticalPoint critical_point(const GapCurve& curve) {
  if (curve.points.empty()) throw DomainError("empty gap curve");
  std::size_t imin = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    if (curve.points[i].gap_khz <= curve.points[imin].gap_khz) imin = i;
  CriticalPoint cp;
  cp.field_khz = curve.points[imin].field_khz;
  cp.gap_khz = curve.points[imin].gap_khz;
  cp.at_endpoint = imin == 0 || imin + 1 == curve.points.size();
  return cp;
}

double piecewise_gap_value(double field_khz, double bc_khz, double delta_c_khz) {
  return field_khz <= bc_khz ? delta_c_khz : delta_c_khz + 4.0 * (field_khz - bc_khz);
}

GapCurve piecewise_gap(double bc_khz, double delta_c_khz, double b0_khz, int grid) {
  if (!(bc_khz > 0.0) || !(delta_c_khz > 0.0)) throw DomainError("B_c and Delta_c must be positive");
  if (!(b0_khz > 0.0)) throw DomainError("B_0 must be positive");
  if (grid < 2) throw DomainError("grid needs at least 2 points");
  GapCurve curve;
  curve.source = GapSource::Piecewise;
  curve.b0_khz = b0_khz;
  curve.piecewise_bc = bc_khz;
  curve.piecewise_delta_c = delta_c_khz;
  std::vector<double> fields;
  for (int i = 0; i < grid; ++i) fields.push_back(b0_khz * i / (grid - 1));
  fields.back() = b0_khz;
  if (bc_khz < b0_khz) fields.push_back(bc_khz);
  std::sort(fields.begin(), fields.end());
  fields.erase(std::unique(fields.begin(), fields.end()), fields.end());
  for (double b : fields) curve.points.push_back({b, piecewise_gap_value(b, bc_khz, delta_c_khz), -1, 0.0});
  curve.rebuild_interpolant();
  return curve;
}

CriticalExtrapolation extrapolate_critical(std::span<const CriticalSample> samples, int target_spins) {
  if (samples.size() < 4) throw DomainError("extrapolation needs at least 4 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;  // log-log for the gap
  double tx = 0, ty = 0, txx = 0, txy = 0;  // linear for the field
  for (const auto& p : samples) {
    if (!(p.gap_khz > 0.0) || p.num_spins < 1) throw DomainError("extrapolation samples need Delta_c > 0");
    const double x = std::log(static_cast<double>(p.num_spins));
    const double y = std::log(p.gap_khz);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    const double nn = p.num_spins;
    tx += nn, ty += p.field_khz, txx += nn * nn, txy += nn * p.field_khz;
  }
  const double m = static_cast<double>(samples.size());
  const double d1 = m * sxx - sx * sx;
  const double d2 = m * txx - tx * tx;
  if (std::abs(d1) < 1e-300 || std::abs(d2) < 1e-300) throw DomainError("extrapolation needs distinct N values");

  CriticalExtrapolation out;
  out.num_spins = target_spins;
  out.gap_exponent = (m * sxy - sx * sy) / d1;
  out.gap_prefactor = std::exp((sy - out.gap_exponent * sx) / m);
  out.field_slope = (m * txy - tx * ty) / d2;
  out.field_intercept = (ty - out.field_slope * tx) / m;
  out.gap_khz = out.gap_prefactor * std::pow(static_cast<double>(target_spins), out.gap_exponent);
  out.field_khz = out.field_intercept + out.field_slope * target_spins;
  if (!(out.gap_khz > 0.0) || !(out.field_khz > 0.0)) {
    throw NumericalError("extrapolated critical point is not positive (B_c = " +
                         std::to_string(out.field_khz) + ", Delta_c = " + std::to_string(out.gap_khz) + ")");
  }
  return out;
}

}  // namespace ionramp
