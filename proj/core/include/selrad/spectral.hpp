#pragma once

#include "selrad/coupling.hpp"
#include "selrad/types.hpp"

namespace selrad {

/// Right-eigenvector decomposition of a (non-Hermitian) coupling matrix.
///
/// Eigenpairs are sorted by ascending Im(lambda); columns of `eigenvectors` have unit
/// Euclidean norm. The LU factor of the eigenvector matrix is kept for modal projection.
struct SpectralDecomposition {
  CVector eigenvalues;
  CMatrix eigenvectors;
  RVector decay_rates;  // 2 Im(lambda)
  double condition_estimate = 1.0;
  Eigen::PartialPivLU<CMatrix> lu;

  Eigen::Index size() const { return eigenvalues.size(); }
};

inline constexpr double kMaxEigenvectorCondition = 1e10;

/// Full eigendecomposition of m.m_total. Throws NumericalError (carrying the estimate)
/// when the eigenvector matrix is near-defective (condition > 1e10).
SpectralDecomposition eigendecompose(const CouplingMatrix& m);
SpectralDecomposition eigendecompose(const CMatrix& m);

}  // namespace selrad
