#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ionramp {

/// y = A x for a real symmetric operator of fixed dimension.
using SymmetricOperator = std::function<void(const double* x, double* y)>;

struct LanczosOptions {
  /// Basis size per round; 0 picks max(3k + 30, 90) capped at the dimension.
  int basis_size = 0;
  /// Ritz pairs are accepted when ||A x - theta x|| <= tolerance * scale.
  double tolerance = 1e-11;
  int max_rounds = 0;  // 0 -> 6k + 60
  std::uint64_t seed = 0x5eed;
};

struct EigenPairs {
  std::vector<double> values;            // ascending
  std::vector<Eigen::VectorXd> vectors;  // unit norm
};

/// Lowest `k` eigenpairs of a real symmetric operator.
///
/// Thick-restart Lanczos with full reorthogonalization: each round extends the
/// basis along a residual, does Rayleigh-Ritz and keeps the lowest Ritz
/// vectors. Once the k lowest pairs converge, one more round seeded with a
/// random vector must reproduce them, which recovers degenerate copies.
/// `scale` should bound the spectral radius.
EigenPairs lanczos_lowest(const SymmetricOperator& op, std::size_t dim, int k, double scale,
                          const LanczosOptions& opts = {});

}  // namespace ionramp
