#pragma once

#include <vector>

namespace ionramp {

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slope limiting.
///
/// Between any two adjacent knots the curve stays inside the rectangle
/// spanned by them, so monotone data gives a monotone interpolant and
/// positive data is never driven through zero.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  /// `x` must be strictly increasing and have at least two entries.
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;
  /// Exact integral of the interpolant over [a, b] (clamped to the knot range).
  double integrate(double a, double b) const;

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::size_t segment(double x) const;
  double primitive_in_segment(std::size_t k, double x) const;

  std::vector<double> x_, y_, m_;
  std::vector<double> cumulative_;  // integral from x_[0] to x_[k]
};

}  // namespace ionramp
