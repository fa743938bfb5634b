#include "selrad/spectral.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "selrad/errors.hpp"

namespace selrad {

SpectralDecomposition eigendecompose(const CouplingMatrix& m) { return eigendecompose(m.m_total); }

SpectralDecomposition eigendecompose(const CMatrix& m) {
  if (!m.allFinite()) {
    throw NumericalError("eigendecompose: matrix has non-finite entries");
  }
  const Eigen::Index n = m.rows();
  Eigen::ComplexEigenSolver<CMatrix> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecompose: QR iteration did not converge");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const CVector& lambda = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return lambda(a).imag() < lambda(b).imag();
  });

  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  out.decay_rates.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = lambda(src);
    out.eigenvectors.col(k) = solver.eigenvectors().col(src).normalized();
    out.decay_rates(k) = 2.0 * lambda(src).imag();
  }

  out.lu.compute(out.eigenvectors);
  const double rcond = out.lu.rcond();
  out.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(out.condition_estimate <= kMaxEigenvectorCondition)) {
    std::ostringstream os;
    os << "eigendecompose: near-defective coupling matrix (eigenvector condition "
       << out.condition_estimate << "); jitter the atom positions";
    throw NumericalError(os.str(), out.condition_estimate);
  }
  return out;
}

}  // namespace selrad
