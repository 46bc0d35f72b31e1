#include "ionramp/monotone_cubic.hpp"

#include <algorithm>
#include <cmath>

#include "ionramp/errors.hpp"

namespace ionramp {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw DomainError("monotone interpolation needs >= 2 matching points");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(x_[k] > x_[k - 1])) throw DomainError("interpolation knots must be strictly increasing");
  }
  std::vector<double> secant(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) secant[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);

  m_.assign(n, 0.0);
  m_[0] = secant[0];
  m_[n - 1] = secant[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    m_[k] = (secant[k - 1] * secant[k] <= 0.0) ? 0.0 : 0.5 * (secant[k - 1] + secant[k]);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (secant[k] == 0.0) {
      m_[k] = m_[k + 1] = 0.0;
      continue;
    }
    const double a = m_[k] / secant[k];
    const double b = m_[k + 1] / secant[k];
    if (a < 0.0) m_[k] = 0.0;
    if (b < 0.0) m_[k + 1] = 0.0;
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double t = 3.0 / std::sqrt(r);
      m_[k] = t * a * secant[k];
      m_[k + 1] = t * b * secant[k];
    }
  }

  cumulative_.assign(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    cumulative_[k + 1] = cumulative_[k] + primitive_in_segment(k, x_[k + 1]);
  }
}

std::size_t MonotoneCubic::segment(double x) const {
  if (x <= x_.front()) return 0;
  if (x >= x_.back()) return x_.size() - 2;
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double MonotoneCubic::operator()(double x) const {
  x = std::clamp(x, x_.front(), x_.back());
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * m_[k] +
         (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * m_[k + 1];
}

double MonotoneCubic::derivative(double x) const {
  x = std::clamp(x, x_.front(), x_.back());
  const std::size_t k = segment(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[k] + (-6 * t2 + 6 * t) * y_[k + 1]) / h +
         (3 * t2 - 4 * t + 1) * m_[k] + (3 * t2 - 2 * t) * m_[k + 1];
}

// Integral of the Hermite cubic on segment k from x_[k] to x.
double MonotoneCubic::primitive_in_segment(std::size_t k, double x) const {
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  const double h00 = 0.5 * t4 - t3 + t;
  const double h10 = 0.25 * t4 - (2.0 / 3.0) * t3 + 0.5 * t2;
  const double h01 = -0.5 * t4 + t3;
  const double h11 = 0.25 * t4 - t3 / 3.0;
  return h * (h00 * y_[k] + h10 * h * m_[k] + h01 * y_[k + 1] + h11 * h * m_[k + 1]);
}

double MonotoneCubic::integrate(double a, double b) const {
  auto from_start = [&](double x) {
    x = std::clamp(x, x_.front(), x_.back());
    const std::size_t k = segment(x);
    return cumulative_[k] + primitive_in_segment(k, x);
  };
  return from_start(b) - from_start(a);
}

}  // namespace ionramp
