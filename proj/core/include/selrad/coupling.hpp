#pragma once

#include <cstddef>
#include <vector>

#include "selrad/params.hpp"
#include "selrad/types.hpp"

namespace selrad {

/// One realization of atom positions (lengths in the same units as 1/k0).
struct AtomEnsemble {
  std::vector<Vec3> positions;

  std::size_t n_atoms() const { return positions.size(); }
  /// Smallest pairwise distance; +inf for a single atom.
  double min_pair_distance() const;
};

/// Coupling matrix M of d(sigma)/dt = i M sigma + i Omega and its channel-resolved parts.
///
/// M = delta_a 1 - J + (i/2)(gamma_cav + gamma_free), with J, gamma_cav and gamma_free
/// Hermitian; the dissipators are recovered as i(M^dagger - M).
struct CouplingMatrix {
  CMatrix m_total;
  CMatrix gamma_cav;
  CMatrix gamma_free;
  CMatrix j_total;
  CVector drive;
  /// C1 averaged over atoms with weights |g(r_i)|^2.
  double c1_mean = 0.0;
  /// C1 averaged uniformly over atoms (average over the density distribution).
  double c1_density_mean = 0.0;
  double gamma0 = 1.0;

  Eigen::Index size() const { return m_total.rows(); }
};

/// Assembles M from the cavity and free-space interactions. The drive is left zero.
/// Throws ParameterError for empty ensembles or duplicate positions.
CouplingMatrix build_coupling_matrix(const AtomEnsemble& ensemble, const PhysicalParams& params);

/// Drive with the guided-mode field shape, Omega_i = amplitude * mode_profile(r_i). Defined
/// for any g0; it is the field the bus waveguide imprints on the atoms.
CVector guided_drive_profile(const AtomEnsemble& ensemble, const PhysicalParams& params, Complex amplitude);

/// Guided drive Omega_i = amplitude * g(r_i) / g0. Throws ParameterError if g0 = 0 and
/// amplitude != 0 (the atoms are not coupled to the drive channel).
CVector drive_vector(const AtomEnsemble& ensemble, const PhysicalParams& params, Complex amplitude);

}  // namespace selrad
