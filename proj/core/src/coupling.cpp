#include "selrad/coupling.hpp"

#include <limits>
#include <sstream>

#include "selrad/cavity.hpp"
#include "selrad/errors.hpp"
#include "selrad/green.hpp"

namespace selrad {

double AtomEnsemble::min_pair_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      best = std::min(best, (positions[i] - positions[j]).norm());
    }
  }
  return best;
}

CouplingMatrix build_coupling_matrix(const AtomEnsemble& ensemble, const PhysicalParams& params) {
  const auto n = static_cast<Eigen::Index>(ensemble.n_atoms());
  if (n < 1) {
    throw ParameterError("build_coupling_matrix: ensemble has no atoms");
  }
  const auto& pos = ensemble.positions;

  CVector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i) = cavity_coupling(pos[i], params);
  }
  // g g^dagger / (delta_c + i kappa / 2) splits into J^c = Re(s) g g^dagger, Gamma^c = -2 Im(s) g g^dagger.
  const Complex s = 1.0 / Complex(params.delta_c, 0.5 * params.kappa);
  const CMatrix ggh = g * g.adjoint();

  CouplingMatrix out;
  out.gamma0 = params.gamma0;
  out.gamma_cav = (-2.0 * s.imag()) * ggh;
  out.j_total = s.real() * ggh;
  out.gamma_free = CMatrix::Zero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    out.gamma_free(i, i) = params.gamma0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (pos[i] == pos[j]) {
        std::ostringstream os;
        os << "build_coupling_matrix: atoms " << i << " and " << j << " share a position";
        throw ParameterError(os.str());
      }
      const Complex dd = dd_interaction(pos[i], pos[j], params);
      const double jdd = dd.real();
      const double gdd = -2.0 * dd.imag();
      out.gamma_free(i, j) = gdd;
      out.gamma_free(j, i) = gdd;
      out.j_total(i, j) += jdd;
      out.j_total(j, i) += jdd;
    }
  }

  out.m_total = -out.j_total + Complex(0.0, 0.5) * (out.gamma_cav + out.gamma_free);
  out.m_total.diagonal().array() += params.delta_a;
  out.drive = CVector::Zero(n);

  const double norm = 4.0 / (params.kappa * params.gamma0);
  double sum_c1 = 0.0;
  double sum_c1_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c1 = norm * std::norm(g(i));
    sum_c1 += c1;
    sum_c1_sq += c1 * c1;
  }
  out.c1_density_mean = sum_c1 / static_cast<double>(n);
  out.c1_mean = sum_c1 > 0.0 ? sum_c1_sq / sum_c1 : 0.0;
  return out;
}

CVector drive_vector(const AtomEnsemble& ensemble, const PhysicalParams& params, Complex amplitude) {
  if (params.g0 == 0.0 && amplitude != Complex(0.0)) {
    throw ParameterError("drive_vector: g0 = 0, atoms are not coupled to the guided drive");
  }
  return guided_drive_profile(ensemble, params, amplitude);
}

CVector guided_drive_profile(const AtomEnsemble& ensemble, const PhysicalParams& params, Complex amplitude) {
  const auto n = static_cast<Eigen::Index>(ensemble.n_atoms());
  CVector omega = CVector::Zero(n);
  if (amplitude == Complex(0.0)) return omega;
  for (Eigen::Index i = 0; i < n; ++i) {
    omega(i) = amplitude * mode_profile(ensemble.positions[i], params);
  }
  return omega;
}

}  // namespace selrad
