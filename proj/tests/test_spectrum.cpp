#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ionramp/errors.hpp"
#include "ionramp/lanczos.hpp"
#include "ionramp/spectrum.hpp"
#include "ionramp/trap_couplings.hpp"
#include "oracles.hpp"

using namespace ionramp;

namespace {

CouplingMatrix six_ion_couplings() { return ising_couplings(calibrate_trap({6, 0.77, 1.0})); }

}  // namespace

TEST(LowSpectrum, DensePathMatchesFullDiagonalization) {
  const auto c = six_ion_couplings();
  for (double b : {0.0, 0.2, 1.0, 3.85}) {
    const Hamiltonian h(c, TransverseField(b));
    const auto s = low_spectrum(h, 12);
    EXPECT_FALSE(s.iterative);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(oracle::measurement_basis_hamiltonian(c.to_dense(), b));
    for (int i = 0; i < 12; ++i) EXPECT_NEAR(s.values[i], ref.eigenvalues()(i), 1e-12);
    for (int i = 0; i < 12; ++i) {
      const Eigen::VectorXd& v = s.vectors[i];
      EXPECT_NEAR(v.norm(), 1.0, 1e-12);
      EXPECT_LT((h.dense_matrix() * v - s.values[i] * v).norm(), 1e-11);
    }
  }
}

TEST(LowSpectrum, IterativeMatchesDenseAtEightSpins) {
  const auto c = ising_couplings([] {
    auto cfg = calibrate_trap({6, 0.77, 1.0});
    cfg.num_spins = 8;
    return cfg;
  }());
  SpectrumOptions iterative;
  iterative.dense_cap = 0;
  for (double b : {0.0, 0.05, 0.3, 1.5, 4.0}) {
    const Hamiltonian h(c, TransverseField(b));
    const auto s = low_spectrum(h, 20, iterative);
    EXPECT_TRUE(s.iterative);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(oracle::measurement_basis_hamiltonian(c.to_dense(), b));
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(s.values[i], ref.eigenvalues()(i), 1e-9) << "B=" << b << " i=" << i;
  }
}

TEST(Lanczos, FindsDegenerateCopies) {
  // diag(0, 0, 0, 1, 1, 2, ...) in a random orthogonal frame.
  const int dim = 200;
  Eigen::VectorXd d(dim);
  for (int i = 0; i < dim; ++i) d(i) = i < 3 ? 0.0 : (i < 5 ? 1.0 : 2.0 + i * 0.01);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd r(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) r(i, j) = g(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
  const Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();
  auto op = [&](const double* x, double* y) {
    Eigen::Map<Eigen::VectorXd>(y, dim) = a * Eigen::Map<const Eigen::VectorXd>(x, dim);
  };
  const auto pairs = lanczos_lowest(op, dim, 6, 5.0);
  const double expected[] = {0.0, 0.0, 0.0, 1.0, 1.0, 2.05};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(pairs.values[i], expected[i], 1e-9);
}

TEST(Lanczos, RejectsBadRequests) {
  auto op = [](const double* x, double* y) { y[0] = x[0]; };
  EXPECT_THROW(lanczos_lowest(op, 1, 2, 1.0), DomainError);
  EXPECT_THROW(lanczos_lowest(op, 1, 0, 1.0), DomainError);
}

TEST(CoupledState, TwoSpinClosedForm) {
  // Levels -r, -J, J, r with r = sqrt(J^2 + 4 B^2); only +r couples to the ground state.
  const double j = 0.7;
  CouplingMatrix c{SpinCount(2)};
  c.set(0, 1, j);
  for (double b : {0.01, 0.3, 2.0}) {
    const double r = std::sqrt(j * j + 4.0 * b * b);
    const auto p = gap_point(Hamiltonian(c, TransverseField(b)));
    EXPECT_NEAR(p.gap_khz, 2.0 * r, 1e-12);
    EXPECT_EQ(p.coupled_index, 3);
  }
}

TEST(CoupledState, SectorGroundHasInitialParity) {
  const auto c = six_ion_couplings();
  const Hamiltonian h(c, TransverseField(0.05));
  const auto s = low_spectrum(h, 16);
  const Eigen::VectorXd g = sector_ground(s);
  Eigen::VectorXd f(g.size());
  apply_global_flip(6, std::span<const double>(g.data(), g.size()), std::span<double>(f.data(), f.size()));
  EXPECT_LT((f - field_aligned_parity(6) * g).norm(), 1e-10);
  EXPECT_NEAR(g.norm(), 1.0, 1e-12);
}

TEST(CoupledState, MatchesDenseOracleAcrossField) {
  const auto c = six_ion_couplings();
  for (double b : {0.02, 0.1, 0.19, 0.5, 1.0, 2.0, 3.85}) {
    const auto p = gap_point(Hamiltonian(c, TransverseField(b)));
    const auto ref = oracle::coupled_gap(c.to_dense(), b);
    EXPECT_NEAR(p.gap_khz, ref.gap, 1e-9) << "B=" << b;
    EXPECT_EQ(p.coupled_index, ref.index) << "B=" << b;
  }
}

TEST(CoupledState, SymmetryDecoupledLevelsHaveZeroElement) {
  const auto c = six_ion_couplings();
  const auto s = low_spectrum(Hamiltonian(c, TransverseField(1.0)), 10);
  const auto elements = field_matrix_elements(s, sector_ground(s));
  int zero = 0;
  for (std::size_t i = 1; i < elements.size(); ++i) zero += std::abs(elements[i]) < 1e-9;
  EXPECT_GT(zero, 0);
}

TEST(GapCurve, CriticalPointMatchesGoldenSectionOracle) {
  const auto c = six_ion_couplings();
  const double b0 = 5.0 * c.max();
  const auto curve = gap_curve(c, b0);
  const auto cp = critical_point(curve);
  EXPECT_FALSE(cp.at_endpoint);
  const auto [b_ref, gap_ref] = oracle::minimize_gap(c.to_dense(), 0.5 * cp.field_khz, 2.0 * cp.field_khz);
  EXPECT_NEAR(cp.gap_khz, gap_ref, 1e-4);
  EXPECT_NEAR(cp.field_khz, b_ref, 0.005 * b0);
  // Interpolant reproduces samples and stays positive.
  for (const auto& p : curve.points) EXPECT_NEAR(curve.gap_at(p.field_khz), p.gap_khz, 1e-12);
  for (int i = 0; i <= 400; ++i) EXPECT_GT(curve.gap_at(b0 * i / 400), 0.0);
  EXPECT_GT(curve.epsilon, 0.0);
}

TEST(GapCurve, ZeroFieldSampleIsTheSmallFieldLimit) {
  const auto c = six_ion_couplings();
  GapCurveOptions opts;
  opts.grid = 50;
  const auto curve = gap_curve(c, 3.85, opts);
  EXPECT_EQ(curve.points.front().field_khz, 0.0);
  const auto probe = gap_point(Hamiltonian(c, TransverseField(3.85 / 49)), opts);
  EXPECT_EQ(curve.points.front().gap_khz, probe.gap_khz);
}

TEST(GapCurve, RejectsBadInputs) {
  const auto c = six_ion_couplings();
  EXPECT_THROW(gap_curve(c, 0.0), DomainError);
  GapCurveOptions opts;
  opts.grid = 10;
  EXPECT_THROW(gap_curve(c, 1.0, opts), DomainError);
}

TEST(PiecewiseGap, ClosedForm) {
  EXPECT_DOUBLE_EQ(piecewise_gap_value(0.1, 0.2, 0.05), 0.05);
  EXPECT_DOUBLE_EQ(piecewise_gap_value(0.2, 0.2, 0.05), 0.05);
  EXPECT_DOUBLE_EQ(piecewise_gap_value(1.2, 0.2, 0.05), 4.05);
  const auto g = piecewise_gap(0.2, 0.05, 3.0, 31);
  EXPECT_EQ(g.source, GapSource::Piecewise);
  EXPECT_DOUBLE_EQ(critical_point(g).gap_khz, 0.05);
  EXPECT_DOUBLE_EQ(g.gap_at(2.0), 0.05 + 4.0 * 1.8);
  EXPECT_THROW(piecewise_gap(0.0, 0.05, 3.0), DomainError);
}

TEST(Extrapolation, RecoversExactModels) {
  std::vector<CriticalSample> samples;
  for (int n = 3; n <= 10; ++n) samples.push_back({n, 0.1 + 0.01 * n, 3.9 * std::pow(n, -1.5)});
  const auto e = extrapolate_critical(samples, 14);
  EXPECT_NEAR(e.gap_exponent, -1.5, 1e-12);
  EXPECT_NEAR(e.gap_prefactor, 3.9, 1e-11);
  EXPECT_NEAR(e.field_slope, 0.01, 1e-12);
  EXPECT_NEAR(e.field_intercept, 0.1, 1e-12);
  EXPECT_NEAR(e.gap_khz, 3.9 * std::pow(14.0, -1.5), 1e-12);
  EXPECT_NEAR(e.field_khz, 0.24, 1e-12);
  EXPECT_THROW(extrapolate_critical(std::span(samples).first(3), 14), DomainError);
}
