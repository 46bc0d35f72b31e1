#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ionramp/monotone_cubic.hpp"
#include "ionramp/spectrum.hpp"

namespace ionramp {

enum class RampFamily { Linear, Exponential, LocalAdiabatic, PiecewiseApproximate, Tabulated };

std::string_view to_string(RampFamily family);
/// Accepts "linear", "exponential", "local-adiabatic", "piecewise-approximate", "tabulated".
RampFamily parse_ramp_family(std::string_view name);

/// Quadrature of 1/Delta^2 over a gap curve.
struct QuadratureOptions {
  /// Trapezoid panels per gap-grid interval.
  int subdivisions = 16;
};

/// Running integral F(B) = int_0^B dB' / Delta^2(B') on a fine grid.
class InverseGapIntegral {
 public:
  InverseGapIntegral(const GapCurve& gap, const QuadratureOptions& opts = {});

  double total() const { return cumulative_.back(); }
  /// F(B), interpolated between quadrature nodes.
  double at(double field_khz) const;
  /// Inverse of F: the field at which the running integral equals `value`.
  double field_for(double value) const;
  double between(double lo_khz, double hi_khz) const { return at(hi_khz) - at(lo_khz); }

 private:
  std::vector<double> nodes_, cumulative_;
  MonotoneCubic forward_, inverse_;
};

/// Monotone field schedule t -> B(t) on [0, t_f], B(0) = B_0, B(t_f) = 0.
class RampProfile {
 public:
  RampFamily family() const { return family_; }
  double b0() const { return b0_; }
  double duration() const { return tf_; }
  /// Exponential decay constant t_f / 6 (0 for other families).
  double tau() const { return tau_; }
  /// Adiabaticity parameter held fixed by local-adiabatic profiles (0 otherwise).
  double gamma() const { return gamma_; }
  /// Field left over by the exponential at t_f before the clamp to 0.
  double end_residual() const { return end_residual_; }

  double field_at(double t_ms) const;
  double slope_at(double t_ms) const;

  /// Export table: `samples` uniform times and the corresponding fields.
  std::vector<std::pair<double, double>> table(int samples = 1000) const;

  /// Arbitrary non-increasing schedule through the given knots (t starts at 0).
  static RampProfile tabulated(std::vector<double> t_ms, std::vector<double> field_khz);

  friend RampProfile linear_ramp(double b0_khz, double tf_ms);
  friend RampProfile exponential_ramp(double b0_khz, double tf_ms);
  friend RampProfile local_adiabatic_ramp(const GapCurve& gap, double tf_ms, const QuadratureOptions& opts);

 private:
  RampProfile() = default;

  RampFamily family_ = RampFamily::Linear;
  double b0_ = 0.0;
  double tf_ = 0.0;
  double tau_ = 0.0;
  double gamma_ = 0.0;
  double end_residual_ = 0.0;
  // Local-adiabatic profiles: the gap and its running inverse-square integral.
  std::shared_ptr<const GapCurve> gap_;
  std::shared_ptr<const InverseGapIntegral> integral_;
  std::shared_ptr<const MonotoneCubic> knots_;  // tabulated profiles
};

RampProfile linear_ramp(double b0_khz, double tf_ms);
RampProfile exponential_ramp(double b0_khz, double tf_ms);

/// Schedule with |dB/dt| = Delta^2(B) / gamma, gamma fixed so that B(t_f) = 0.
/// A piecewise gap curve yields the piecewise-approximate family.
RampProfile local_adiabatic_ramp(const GapCurve& gap, double tf_ms, const QuadratureOptions& opts = {});

/// Time at which the schedule reaches the critical field of `gap`.
double critical_time(const RampProfile& profile, const GapCurve& gap, const QuadratureOptions& opts = {});

/// gamma * int_0^{B_0} dB / Delta^2.
double total_time_for_gamma(const GapCurve& gap, double gamma, const QuadratureOptions& opts = {});

struct AdiabaticitySample {
  double t_ms = 0.0;
  double inv_gamma = 0.0;  // |dB/dt| / Delta^2(B(t))
  double slope_khz_per_ms = 0.0;
};

std::vector<AdiabaticitySample> adiabaticity_trace(const RampProfile& profile, const GapCurve& gap,
                                                   int grid = 1000);

/// Which gap enters the gamma = 1 threshold.
enum class GapConvention {
  Critical,  // |dB/dt| at the critical point over Delta_c^2
  Local,     // worst pointwise |dB/dt| / Delta^2(B(t)) along the ramp
};

/// Ramp duration at which the family's adiabaticity reaches gamma = 1.
double adiabatic_threshold(RampFamily family, const GapCurve& gap,
                           GapConvention convention = GapConvention::Critical);

/// Builds the family's profile for this gap and duration.
RampProfile make_ramp(RampFamily family, const GapCurve& gap, double tf_ms);

}  // namespace ionramp
