#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ionramp {

/// Hard upper bound on the number of spins; 2^20 amplitudes is ~16 MB.
inline constexpr int kMaxSpins = 20;
/// Largest spin count for which dense 2^n x 2^n matrices are built by default.
inline constexpr int kDefaultDenseCap = 12;

using Amplitude = std::complex<double>;

/// Number of spins in the chain, 1 <= n <= kMaxSpins.
class SpinCount {
 public:
  explicit SpinCount(int n);

  int value() const { return n_; }
  std::size_t dimension() const { return std::size_t{1} << n_; }

  friend bool operator==(SpinCount, SpinCount) = default;

 private:
  int n_;
};

/// Bit position in a basis index that holds spin `site` (0-based from the left).
///
/// Basis index b encodes the bitstring read left to right as a binary number,
/// so |010101> is index 21 and spin 0 is the most significant bit.
inline int site_bit(int site, int num_spins) { return num_spins - 1 - site; }

/// Symmetric table of Ising couplings J_ij in kHz. Only i < j is stored.
class CouplingMatrix {
 public:
  explicit CouplingMatrix(SpinCount n);

  /// Builds from a full square matrix; only the strict upper triangle is read.
  static CouplingMatrix from_dense(const Eigen::MatrixXd& m);

  /// J_ij = strength / |i-j|^alpha.
  static CouplingMatrix power_law(SpinCount n, double strength_khz, double alpha);

  SpinCount spins() const { return n_; }
  int size() const { return n_.value(); }

  double operator()(int i, int j) const;
  void set(int i, int j, double value_khz);

  double max() const;
  double sum_abs() const;
  bool all_positive() const;

  Eigen::MatrixXd to_dense() const;

  friend bool operator==(const CouplingMatrix&, const CouplingMatrix&) = default;

 private:
  std::size_t slot(int i, int j) const;

  SpinCount n_;
  std::vector<double> upper_;
};

/// Transverse field magnitude B in kHz, B >= 0.
class TransverseField {
 public:
  explicit TransverseField(double khz);
  double khz() const { return b_; }

 private:
  double b_;
};

/// Amplitudes over the 2^n measurement-basis (sigma_x) product states.
struct StateVector {
  int num_spins = 0;
  std::vector<Amplitude> amplitudes;

  StateVector() = default;
  StateVector(int n, std::vector<Amplitude> amps);

  std::size_t dimension() const { return amplitudes.size(); }
  double norm() const;
  Amplitude inner(const StateVector& other) const;  // <this|other>
};

/// Classical Ising energies sum_{i<j} J_ij s_i s_j for every basis index.
std::vector<double> ising_diagonal(const CouplingMatrix& couplings);

/// H = sum_{i<j} J_ij X_i X_j + B sum_i Y_i in the sigma_x eigenbasis.
///
/// Basis phases are chosen so that Y_i acts as a plain bit flip, which makes
/// the matrix real symmetric: X_i|b> = (1 - 2 b_i)|b>, Y_i|b> = |b ^ bit_i>.
/// The diagonal is shared between copies, so changing the field is cheap.
class Hamiltonian {
 public:
  Hamiltonian(const CouplingMatrix& couplings, TransverseField field);

  /// Same couplings, different field. Shares the cached diagonal.
  Hamiltonian with_field(TransverseField field) const;

  int num_spins() const { return n_; }
  std::size_t dimension() const { return std::size_t{1} << n_; }
  double field() const { return b_; }
  const CouplingMatrix& couplings() const { return *couplings_; }
  std::span<const double> diagonal() const { return *diag_; }

  /// Gershgorin bound on the spectral radius.
  double norm_bound() const;

  void apply(std::span<const double> in, std::span<double> out) const;
  void apply(std::span<const Amplitude> in, std::span<Amplitude> out) const;
  StateVector apply(const StateVector& v) const;

  /// Dense real symmetric matrix. Throws DomainError above `dense_cap` spins.
  Eigen::MatrixXd dense_matrix(int dense_cap = kDefaultDenseCap) const;

 private:
  int n_;
  double b_;
  std::shared_ptr<const CouplingMatrix> couplings_;
  std::shared_ptr<const std::vector<double>> diag_;
};

Hamiltonian build_hamiltonian(const CouplingMatrix& couplings, TransverseField field,
                              int expected_spins = -1);

/// out = sum_i Y_i in, i.e. dH/dB.
void apply_field_operator(int num_spins, std::span<const double> in, std::span<double> out);

/// Global spin flip prod_i Y_i (the Z2 symmetry), |b> -> |~b>.
void apply_global_flip(int num_spins, std::span<const double> in, std::span<double> out);

/// Product state with every spin in the -1 eigenstate of its Y_i, which is the
/// ground state of the field term. Amplitudes are (-1)^popcount(b) / 2^(n/2).
StateVector field_aligned_state(SpinCount n);

/// Z2 eigenvalue of field_aligned_state(n): (-1)^n.
int field_aligned_parity(int num_spins);

/// The two alternating bitstrings 0101... and 1010..., as basis indices.
std::pair<std::uint64_t, std::uint64_t> neel_indices(int num_spins);

}  // namespace ionramp
