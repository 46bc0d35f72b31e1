#include "ionramp/spin_model.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "ionramp/errors.hpp"

namespace ionramp {

SpinCount::SpinCount(int n) : n_(n) {
  if (n < 1 || n > kMaxSpins) {
    throw DomainError("spin count " + std::to_string(n) + " outside [1, " +
                      std::to_string(kMaxSpins) + "]");
  }
}

CouplingMatrix::CouplingMatrix(SpinCount n)
    : n_(n), upper_(static_cast<std::size_t>(n.value()) * (n.value() - 1) / 2, 0.0) {}

std::size_t CouplingMatrix::slot(int i, int j) const {
  const int n = n_.value();
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
    throw DomainError("invalid coupling index (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") for " + std::to_string(n) + " spins");
  }
  if (i > j) std::swap(i, j);
  // Row-major packing of the strict upper triangle.
  return static_cast<std::size_t>(i) * (2 * n - i - 1) / 2 + (j - i - 1);
}

double CouplingMatrix::operator()(int i, int j) const { return upper_[slot(i, j)]; }

void CouplingMatrix::set(int i, int j, double value_khz) {
  if (!std::isfinite(value_khz)) throw DomainError("coupling must be finite");
  upper_[slot(i, j)] = value_khz;
}

CouplingMatrix CouplingMatrix::from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("coupling matrix must be square");
  CouplingMatrix out(SpinCount(static_cast<int>(m.rows())));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) out.set(i, j, m(i, j));
  return out;
}

CouplingMatrix CouplingMatrix::power_law(SpinCount n, double strength_khz, double alpha) {
  CouplingMatrix out(n);
  for (int i = 0; i < n.value(); ++i)
    for (int j = i + 1; j < n.value(); ++j)
      out.set(i, j, strength_khz / std::pow(static_cast<double>(j - i), alpha));
  return out;
}

double CouplingMatrix::max() const {
  double m = 0.0;
  bool first = true;
  for (double v : upper_) {
    if (first || v > m) m = v;
    first = false;
  }
  return m;
}

double CouplingMatrix::sum_abs() const {
  double s = 0.0;
  for (double v : upper_) s += std::abs(v);
  return s;
}

bool CouplingMatrix::all_positive() const {
  for (double v : upper_)
    if (!(v > 0.0)) return false;
  return true;
}

Eigen::MatrixXd CouplingMatrix::to_dense() const {
  const int n = n_.value();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

TransverseField::TransverseField(double khz) : b_(khz) {
  if (!(khz >= 0.0) || !std::isfinite(khz)) {
    throw DomainError("transverse field must be finite and >= 0, got " + std::to_string(khz));
  }
}

StateVector::StateVector(int n, std::vector<Amplitude> amps)
    : num_spins(n), amplitudes(std::move(amps)) {
  if (amplitudes.size() != (std::size_t{1} << n)) {
    throw DimensionError("state vector length does not match 2^" + std::to_string(n));
  }
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  return std::sqrt(s);
}

Amplitude StateVector::inner(const StateVector& other) const {
  if (other.dimension() != dimension()) throw DimensionError("inner product of mismatched states");
  Amplitude s{0.0, 0.0};
  for (std::size_t k = 0; k < amplitudes.size(); ++k) s += std::conj(amplitudes[k]) * other.amplitudes[k];
  return s;
}

std::vector<double> ising_diagonal(const CouplingMatrix& couplings) {
  const int n = couplings.size();
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> diag(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double jij = couplings(i, j);
      if (jij == 0.0) continue;
      const std::size_t mask =
          (std::size_t{1} << site_bit(i, n)) | (std::size_t{1} << site_bit(j, n));
      for (std::size_t b = 0; b < dim; ++b) {
        // s_i s_j = +1 when both bits agree.
        diag[b] += (std::popcount(b & mask) == 1) ? -jij : jij;
      }
    }
  }
  return diag;
}

Hamiltonian::Hamiltonian(const CouplingMatrix& couplings, TransverseField field)
    : n_(couplings.size()),
      b_(field.khz()),
      couplings_(std::make_shared<const CouplingMatrix>(couplings)),
      diag_(std::make_shared<const std::vector<double>>(ising_diagonal(couplings))) {}

Hamiltonian Hamiltonian::with_field(TransverseField field) const {
  Hamiltonian h = *this;
  h.b_ = field.khz();
  return h;
}

double Hamiltonian::norm_bound() const {
  double dmax = 0.0;
  for (double d : *diag_) dmax = std::max(dmax, std::abs(d));
  return dmax + n_ * std::abs(b_);
}

namespace {

template <typename T>
void apply_impl(int n, double b, const std::vector<double>& diag, std::span<const T> in,
                std::span<T> out) {
  const std::size_t dim = diag.size();
  if (in.size() != dim || out.size() != dim) {
    throw DimensionError("Hamiltonian applied to vector of length " + std::to_string(in.size()) +
                         ", expected " + std::to_string(dim));
  }
  for (std::size_t s = 0; s < dim; ++s) {
    T flips{};
    for (int k = 0; k < n; ++k) flips += in[s ^ (std::size_t{1} << k)];
    out[s] = diag[s] * in[s] + b * flips;
  }
}

}  // namespace

void Hamiltonian::apply(std::span<const double> in, std::span<double> out) const {
  apply_impl<double>(n_, b_, *diag_, in, out);
}

void Hamiltonian::apply(std::span<const Amplitude> in, std::span<Amplitude> out) const {
  apply_impl<Amplitude>(n_, b_, *diag_, in, out);
}

StateVector Hamiltonian::apply(const StateVector& v) const {
  if (v.num_spins != n_) throw DimensionError("state and Hamiltonian spin counts differ");
  std::vector<Amplitude> out(v.dimension());
  apply(std::span<const Amplitude>(v.amplitudes), std::span<Amplitude>(out));
  return StateVector(n_, std::move(out));
}

Eigen::MatrixXd Hamiltonian::dense_matrix(int dense_cap) const {
  if (n_ > dense_cap) {
    throw DomainError("dense matrix requested for " + std::to_string(n_) +
                      " spins, above the dense cap of " + std::to_string(dense_cap));
  }
  const auto dim = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    m(s, s) = (*diag_)[s];
    for (int k = 0; k < n_; ++k) m(s ^ (Eigen::Index{1} << k), s) += b_;
  }
  return m;
}

Hamiltonian build_hamiltonian(const CouplingMatrix& couplings, TransverseField field,
                              int expected_spins) {
  if (expected_spins >= 0 && expected_spins != couplings.size()) {
    throw DimensionError("coupling matrix has " + std::to_string(couplings.size()) +
                         " spins, expected " + std::to_string(expected_spins));
  }
  return Hamiltonian(couplings, field);
}

void apply_field_operator(int num_spins, std::span<const double> in, std::span<double> out) {
  const std::size_t dim = std::size_t{1} << num_spins;
  if (in.size() != dim || out.size() != dim) throw DimensionError("field operator size mismatch");
  for (std::size_t s = 0; s < dim; ++s) {
    double acc = 0.0;
    for (int k = 0; k < num_spins; ++k) acc += in[s ^ (std::size_t{1} << k)];
    out[s] = acc;
  }
}

void apply_global_flip(int num_spins, std::span<const double> in, std::span<double> out) {
  const std::size_t dim = std::size_t{1} << num_spins;
  if (in.size() != dim || out.size() != dim) throw DimensionError("flip operator size mismatch");
  const std::size_t all = dim - 1;
  for (std::size_t s = 0; s < dim; ++s) out[s] = in[s ^ all];
}

StateVector field_aligned_state(SpinCount n) {
  const std::size_t dim = n.dimension();
  const double amp = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<Amplitude> v(dim);
  for (std::size_t b = 0; b < dim; ++b) v[b] = (std::popcount(b) % 2 == 0) ? amp : -amp;
  return StateVector(n.value(), std::move(v));
}

int field_aligned_parity(int num_spins) { return (num_spins % 2 == 0) ? 1 : -1; }

std::pair<std::uint64_t, std::uint64_t> neel_indices(int num_spins) {
  // 0101... read from the left: spin k is 1 when k is odd.
  std::uint64_t a = 0;
  for (int k = 1; k < num_spins; k += 2) a |= std::uint64_t{1} << site_bit(k, num_spins);
  const std::uint64_t all = (std::uint64_t{1} << num_spins) - 1;
  return {a, a ^ all};
}

}  // namespace ionramp
