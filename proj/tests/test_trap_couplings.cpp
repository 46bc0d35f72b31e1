#include <gtest/gtest.h>

#include <cmath>

#include "ionramp/errors.hpp"
#include "ionramp/trap_couplings.hpp"
#include "oracles.hpp"

using namespace ionramp;

TEST(Equilibrium, TwoAndThreeIonsClosedForm) {
  const auto two = equilibrium_positions(2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[1], std::cbrt(0.25), 1e-12);
  EXPECT_NEAR(two[0], -std::cbrt(0.25), 1e-12);

  const auto three = equilibrium_positions(3);
  EXPECT_NEAR(three[0], -std::cbrt(1.25), 1e-12);
  EXPECT_NEAR(three[1], 0.0, 1e-12);
  EXPECT_NEAR(three[2], std::cbrt(1.25), 1e-12);
}

TEST(Equilibrium, MatchesGradientDescent) {
  for (int n = 4; n <= 10; ++n) {
    const auto x = equilibrium_positions(n);
    const auto ref = oracle::descend_equilibrium(n);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref[i], 1e-9) << "n=" << n << " i=" << i;
    for (double g : equilibrium_gradient(x)) EXPECT_LT(std::abs(g), 1e-10);
    // Mirror symmetric about the trap center.
    for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], -x[n - 1 - i], 1e-10);
  }
}

TEST(Equilibrium, LongChainConverges) {
  const auto x = equilibrium_positions(14);
  ASSERT_EQ(x.size(), 14u);
  for (double g : equilibrium_gradient(x)) EXPECT_LT(std::abs(g), 1e-9);
}

TEST(NormalModes, CenterOfMassAndTiltForTwoIons) {
  TrapConfig cfg;
  cfg.num_spins = 2;
  const auto modes = transverse_modes(cfg);
  ASSERT_EQ(modes.frequencies_khz.size(), 2u);
  const double fx = 1000.0 * cfg.transverse_mhz, fz = 1000.0 * cfg.axial_mhz;
  EXPECT_NEAR(modes.frequencies_khz[0], fx, 1e-8);
  EXPECT_NEAR(modes.frequencies_khz[1], std::sqrt(fx * fx - fz * fz), 1e-8);
  EXPECT_NEAR(std::abs(modes.vectors(0, 0)), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(modes.vectors(0, 1), -modes.vectors(1, 1), 1e-12);
}

TEST(NormalModes, OrthonormalAndDescending) {
  TrapConfig cfg;
  cfg.num_spins = 8;
  const auto modes = transverse_modes(cfg);
  const Eigen::MatrixXd gram = modes.vectors.transpose() * modes.vectors;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(modes.frequencies_khz.front(), 1000.0 * cfg.transverse_mhz, 1e-8);
  for (std::size_t m = 1; m < modes.frequencies_khz.size(); ++m) {
    EXPECT_LT(modes.frequencies_khz[m], modes.frequencies_khz[m - 1]);
  }
}

TEST(IsingCouplings, TwoIonClosedForm) {
  TrapConfig cfg;
  cfg.num_spins = 2;
  const double fx = 1000.0 * cfg.transverse_mhz, fz = 1000.0 * cfg.axial_mhz;
  const double ft2 = fx * fx - fz * fz;
  const double mu = fx + cfg.detuning_khz;
  const double pref = cfg.rabi_khz * cfg.rabi_khz * cfg.recoil_khz / oracle::kTwoPi;
  const double expected = pref * 0.5 * (1.0 / (mu * mu - fx * fx) - 1.0 / (mu * mu - ft2));
  const auto j = ising_couplings(cfg);
  EXPECT_NEAR(j(0, 1), expected, 1e-12 * std::abs(expected));
  EXPECT_GT(j(0, 1), 0.0);
}

TEST(IsingCouplings, AntiferromagneticAndDecaying) {
  TrapConfig cfg;
  cfg.num_spins = 6;
  const auto j = ising_couplings(cfg);
  EXPECT_TRUE(j.all_positive());
  // Decays with distance from the first ion.
  for (int k = 2; k < 6; ++k) EXPECT_LT(j(0, k), j(0, k - 1));
}

TEST(TrapConfig, GuardBandAndValidation) {
  TrapConfig cfg;
  cfg.detuning_khz = 1.0;
  EXPECT_THROW(ising_couplings(cfg), DomainError);
  TrapConfig bad;
  bad.rabi_khz = -1.0;
  EXPECT_THROW(bad.validate(), DomainError);
  TrapConfig one;
  one.num_spins = 0;
  EXPECT_THROW(one.validate(), DomainError);
}

TEST(PowerLawFit, RecoversExactPowerLaw) {
  const auto c = CouplingMatrix::power_law(SpinCount(7), 0.6, 1.23);
  const auto fit = fit_alpha(c);
  EXPECT_NEAR(fit.alpha, 1.23, 1e-12);
  EXPECT_NEAR(fit.j_max_khz, 0.6, 1e-12);
  EXPECT_NEAR(fit.residual, 0.0, 1e-12);
  EXPECT_NEAR(fit.predict(3), 0.6 / std::pow(3.0, 1.23), 1e-12);
}

TEST(Calibration, HitsSixIonTargets) {
  // J_ij ~ 0.77 kHz / |i-j| at N = 6.
  const auto cfg = calibrate_trap({6, 0.77, 1.0});
  const auto j = ising_couplings(cfg);
  EXPECT_NEAR(j.max(), 0.77, 1e-9);
  EXPECT_NEAR(fit_alpha(j).alpha, 1.0, 1e-6);
  EXPECT_GT(cfg.detuning_khz, 0.0);
  // Trap frequencies are untouched.
  EXPECT_DOUBLE_EQ(cfg.axial_mhz, 0.7);
  EXPECT_DOUBLE_EQ(cfg.transverse_mhz, 4.8);
}

TEST(Calibration, RangeShrinksWithChainLengthAtFixedVoltages) {
  auto cfg = calibrate_trap({6, 0.77, 1.0});
  double previous = 1e9;
  for (int n = 3; n <= 10; ++n) {
    cfg.num_spins = n;
    const double alpha = fit_alpha(ising_couplings(cfg)).alpha;
    EXPECT_LT(alpha, previous) << "n=" << n;
    // Experimental range 0.9 - 1.3.
    EXPECT_GT(alpha, 0.85);
    EXPECT_LT(alpha, 1.3);
    previous = alpha;
  }
}
