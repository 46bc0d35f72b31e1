#include "ionramp/ramps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ionramp/errors.hpp"

namespace ionramp {

std::string_view to_string(RampFamily family) {
  switch (family) {
    case RampFamily::Linear: return "linear";
    case RampFamily::Exponential: return "exponential";
    case RampFamily::LocalAdiabatic: return "local-adiabatic";
    case RampFamily::PiecewiseApproximate: return "piecewise-approximate";
    case RampFamily::Tabulated: return "tabulated";
  }
  return "unknown";
}

RampFamily parse_ramp_family(std::string_view name) {
  for (auto f : {RampFamily::Linear, RampFamily::Exponential, RampFamily::LocalAdiabatic,
                 RampFamily::PiecewiseApproximate, RampFamily::Tabulated}) {
    if (to_string(f) == name) return f;
  }
  throw DomainError("unknown ramp family '" + std::string(name) + "'");
}

namespace {

std::vector<double> build_nodes(const GapCurve& gap, int subdivisions) {
  if (gap.points.size() < 2) throw DomainError("gap curve needs at least two points");
  if (subdivisions < 1) throw DomainError("quadrature needs at least one panel per interval");
  std::vector<double> nodes;
  const auto& pts = gap.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i].field_khz, b = pts[i + 1].field_khz;
    for (int s = 0; s < subdivisions; ++s) nodes.push_back(a + (b - a) * s / subdivisions);
  }
  nodes.push_back(pts.back().field_khz);
  return nodes;
}

std::vector<double> running_integral(const GapCurve& gap, const std::vector<double>& nodes) {
  std::vector<double> f(nodes.size(), 0.0);
  double prev = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = gap.gap_at(nodes[i]);
    if (!(d > 0.0)) {
      throw DomainError("gap is not positive at B = " + std::to_string(nodes[i]) + " kHz");
    }
    const double w = 1.0 / (d * d);
    if (i > 0) f[i] = f[i - 1] + 0.5 * (w + prev) * (nodes[i] - nodes[i - 1]);
    prev = w;
  }
  return f;
}

}  // namespace

InverseGapIntegral::InverseGapIntegral(const GapCurve& gap, const QuadratureOptions& opts)
    : nodes_(build_nodes(gap, opts.subdivisions)),
      cumulative_(running_integral(gap, nodes_)),
      forward_(nodes_, cumulative_),
      inverse_(cumulative_, nodes_) {
  if (nodes_.front() != 0.0) throw DomainError("gap curve must start at B = 0");
}

double InverseGapIntegral::at(double field_khz) const { return forward_(field_khz); }

double InverseGapIntegral::field_for(double value) const { return inverse_(value); }

double RampProfile::field_at(double t) const {
  if (t <= 0.0) return b0_;
  if (t >= tf_) return family_ == RampFamily::Tabulated ? (*knots_)(tf_) : 0.0;
  switch (family_) {
    case RampFamily::Linear: return b0_ * (1.0 - t / tf_);
    case RampFamily::Exponential: return b0_ * std::exp(-t / tau_);
    case RampFamily::LocalAdiabatic:
    case RampFamily::PiecewiseApproximate:
      return std::clamp(integral_->field_for(integral_->total() - t / gamma_), 0.0, b0_);
    case RampFamily::Tabulated: return (*knots_)(t);
  }
  return 0.0;
}

double RampProfile::slope_at(double t) const {
  t = std::clamp(t, 0.0, tf_);
  switch (family_) {
    case RampFamily::Linear: return -b0_ / tf_;
    case RampFamily::Exponential: return -b0_ * std::exp(-t / tau_) / tau_;
    case RampFamily::LocalAdiabatic:
    case RampFamily::PiecewiseApproximate: {
      const double d = gap_->gap_at(field_at(t));
      return -d * d / gamma_;
    }
    case RampFamily::Tabulated: return knots_->derivative(t);
  }
  return 0.0;
}

std::vector<std::pair<double, double>> RampProfile::table(int samples) const {
  if (samples < 2) throw DomainError("ramp table needs at least 2 samples");
  std::vector<std::pair<double, double>> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = (i + 1 == samples) ? tf_ : tf_ * i / (samples - 1);
    out.emplace_back(t, field_at(t));
  }
  return out;
}

RampProfile RampProfile::tabulated(std::vector<double> t_ms, std::vector<double> field_khz) {
  if (t_ms.size() < 2 || t_ms.size() != field_khz.size()) {
    throw DomainError("tabulated ramp needs at least two (t, B) pairs");
  }
  if (t_ms.front() != 0.0) throw DomainError("tabulated ramp must start at t = 0");
  for (std::size_t i = 0; i < field_khz.size(); ++i) {
    if (!(field_khz[i] >= 0.0)) throw DomainError("tabulated field must be >= 0");
    if (i > 0 && field_khz[i] > field_khz[i - 1]) throw DomainError("tabulated field must be non-increasing");
  }
  RampProfile p;
  p.family_ = RampFamily::Tabulated;
  p.b0_ = field_khz.front();
  p.tf_ = t_ms.back();
  p.knots_ = std::make_shared<const MonotoneCubic>(std::move(t_ms), std::move(field_khz));
  return p;
}

RampProfile linear_ramp(double b0_khz, double tf_ms) {
  if (!(b0_khz > 0.0) || !(tf_ms > 0.0)) throw DomainError("linear ramp needs B_0 > 0 and t_f > 0");
  RampProfile p;
  p.family_ = RampFamily::Linear;
  p.b0_ = b0_khz;
  p.tf_ = tf_ms;
  return p;
}

RampProfile exponential_ramp(double b0_khz, double tf_ms) {
  if (!(b0_khz > 0.0) || !(tf_ms > 0.0)) throw DomainError("exponential ramp needs B_0 > 0 and t_f > 0");
  RampProfile p;
  p.family_ = RampFamily::Exponential;
  p.b0_ = b0_khz;
  p.tf_ = tf_ms;
  p.tau_ = tf_ms / 6.0;
  p.end_residual_ = b0_khz * std::exp(-6.0);
  return p;
}

RampProfile local_adiabatic_ramp(const GapCurve& gap, double tf_ms, const QuadratureOptions& opts) {
  if (!(tf_ms > 0.0)) throw DomainError("local adiabatic ramp needs t_f > 0");
  RampProfile p;
  p.family_ = gap.source == GapSource::Piecewise ? RampFamily::PiecewiseApproximate
                                                 : RampFamily::LocalAdiabatic;
  p.gap_ = std::make_shared<const GapCurve>(gap);
  p.integral_ = std::make_shared<const InverseGapIntegral>(gap, opts);
  p.b0_ = gap.points.back().field_khz;
  p.tf_ = tf_ms;
  // t_f = gamma * int_0^{B_0} dB / Delta^2
  p.gamma_ = tf_ms / p.integral_->total();
  return p;
}

RampProfile make_ramp(RampFamily family, const GapCurve& gap, double tf_ms) {
  switch (family) {
    case RampFamily::Linear: return linear_ramp(gap.b0_khz, tf_ms);
    case RampFamily::Exponential: return exponential_ramp(gap.b0_khz, tf_ms);
    case RampFamily::LocalAdiabatic:
    case RampFamily::PiecewiseApproximate: return local_adiabatic_ramp(gap, tf_ms);
    case RampFamily::Tabulated: break;
  }
  throw DomainError("cannot build a tabulated ramp from a gap curve");
}

double critical_time(const RampProfile& profile, const GapCurve& gap, const QuadratureOptions& opts) {
  const double b0 = profile.b0();
  if (std::abs(gap.b0_khz - b0) > 1e-9 * std::max(1.0, b0)) {
    throw DomainError("profile and gap curve use different B_0");
  }
  const double bc = critical_point(gap).field_khz;
  if (!(bc > 0.0) || !(bc < b0)) throw DomainError("critical field outside the schedule range");
  switch (profile.family()) {
    case RampFamily::Linear: return profile.duration() * (1.0 - bc / b0);
    case RampFamily::Exponential:
      return std::min(profile.duration(), profile.tau() * std::log(b0 / bc));
    case RampFamily::LocalAdiabatic:
    case RampFamily::PiecewiseApproximate: {
      const InverseGapIntegral integral(gap, opts);
      return profile.gamma() * integral.between(bc, b0);
    }
    case RampFamily::Tabulated: break;
  }
  double lo = 0.0, hi = profile.duration();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (profile.field_at(mid) > bc ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double total_time_for_gamma(const GapCurve& gap, double gamma, const QuadratureOptions& opts) {
  return gamma * InverseGapIntegral(gap, opts).total();
}

std::vector<AdiabaticitySample> adiabaticity_trace(const RampProfile& profile, const GapCurve& gap,
                                                   int grid) {
  if (grid < 2) throw DomainError("adiabaticity trace needs at least 2 samples");
  std::vector<AdiabaticitySample> out;
  out.reserve(grid);
  for (int i = 0; i < grid; ++i) {
    const double t = profile.duration() * i / (grid - 1);
    const double slope = profile.slope_at(t);
    const double d = gap.gap_at(profile.field_at(t));
    out.push_back({t, std::abs(slope) / (d * d), slope});
  }
  return out;
}

double adiabatic_threshold(RampFamily family, const GapCurve& gap, GapConvention convention) {
  // Slopes scale as 1/t_f, so evaluate a unit-duration profile.
  const RampProfile unit = make_ramp(family, gap, 1.0);
  if (convention == GapConvention::Critical) {
    const auto cp = critical_point(gap);
    const double tc = critical_time(unit, gap);
    return std::abs(unit.slope_at(tc)) / (cp.gap_khz * cp.gap_khz);
  }
  double worst = 0.0;
  for (const auto& s : adiabaticity_trace(unit, gap, 4001)) worst = std::max(worst, s.inv_gamma);
  return worst;
}

}  // namespace ionramp
