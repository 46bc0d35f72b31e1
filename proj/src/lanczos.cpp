#include "ionramp/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ionramp/errors.hpp"

namespace ionramp {

namespace {

// Two passes of classical Gram-Schmidt against the first `count` columns.
void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index count) {
  if (count == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd c = basis.leftCols(count).transpose() * v;
    v -= basis.leftCols(count) * c;
  }
}

}  // namespace

EigenPairs lanczos_lowest(const SymmetricOperator& op, std::size_t dim, int k, double scale,
                          const LanczosOptions& opts) {
  if (k < 1 || static_cast<std::size_t>(k) > dim) {
    throw DomainError("requested " + std::to_string(k) + " eigenpairs of a " +
                      std::to_string(dim) + "-dimensional operator");
  }
  const auto n = static_cast<Eigen::Index>(dim);
  const double tol = opts.tolerance * std::max(scale, 1e-300);
  const int max_rounds = opts.max_rounds > 0 ? opts.max_rounds : 6 * k + 60;
  const Eigen::Index m =
      std::min<Eigen::Index>(opts.basis_size > 0 ? opts.basis_size : std::max(3 * k + 30, 90), n);
  // Ritz vectors carried into the next round.
  const Eigen::Index keep = std::min<Eigen::Index>(k + std::max(8, k / 2), std::max<Eigen::Index>(m - 10, k));

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
  };

  Eigen::MatrixXd v(n, m), av(n, m);
  Eigen::Index filled = 0;
  Eigen::VectorXd next = random_vector();
  Eigen::VectorXd previous_values;
  bool verifying = false;

  for (int round = 0; round < max_rounds; ++round) {
    // Extend the basis to m vectors, continuing the Krylov sequence from `next`.
    while (filled < m) {
      orthogonalize(next, v, filled);
      double norm = next.norm();
      if (norm < 1e-10 * std::max(1.0, scale)) {
        // Invariant subspace reached; continue with a fresh direction.
        next = random_vector();
        orthogonalize(next, v, filled);
        norm = next.norm();
        if (norm < 1e-10) break;
      }
      v.col(filled) = next / norm;
      op(v.col(filled).data(), av.col(filled).data());
      next = av.col(filled);
      ++filled;
    }

    // Rayleigh-Ritz on the current basis.
    Eigen::MatrixXd h = v.leftCols(filled).transpose() * av.leftCols(filled);
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolver failed");
    const Eigen::Index wanted = std::min<Eigen::Index>(k, filled);
    const Eigen::Index carry = std::min<Eigen::Index>(keep, filled);
    const Eigen::MatrixXd s = es.eigenvectors().leftCols(carry);
    Eigen::MatrixXd x = v.leftCols(filled) * s;
    Eigen::MatrixXd ax = av.leftCols(filled) * s;

    Eigen::Index worst = -1;
    double worst_residual = 0.0;
    for (Eigen::Index j = 0; j < wanted; ++j) {
      const double r = (ax.col(j) - es.eigenvalues()(j) * x.col(j)).norm();
      if (r > tol && r > worst_residual) {
        worst_residual = r;
        worst = j;
      }
    }

    if (worst < 0 && wanted == k) {
      const Eigen::VectorXd values = es.eigenvalues().head(k);
      // One extra round with a random direction catches degenerate copies a
      // single Krylov sequence cannot see.
      if (verifying && (values - previous_values).cwiseAbs().maxCoeff() <= tol) {
        EigenPairs out;
        for (int j = 0; j < k; ++j) {
          out.values.push_back(values(j));
          out.vectors.emplace_back(x.col(j).normalized());
        }
        return out;
      }
      verifying = true;
      previous_values = values;
      next = random_vector();
    } else {
      verifying = false;
      const Eigen::Index j = worst < 0 ? 0 : worst;
      next = ax.col(j) - es.eigenvalues()(j) * x.col(j);
      // A small random admixture keeps rounds from stalling in a subspace.
      next += 1e-3 * next.norm() * random_vector().normalized();
    }

    // Thick restart: keep the lowest Ritz pairs as the new basis.
    v.leftCols(carry) = x;
    av.leftCols(carry) = ax;
    filled = carry;
  }
  throw NumericalError("Lanczos did not converge to " + std::to_string(k) + " eigenpairs after " +
                       std::to_string(max_rounds) + " rounds");
}

}  // namespace ionramp
