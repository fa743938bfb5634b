#pragma once

#include "selrad/params.hpp"
#include "selrad/types.hpp"

namespace selrad {

/// Dimensionless running-wave mode profile exp(-(z - z_ref)/zeta) exp(i k_wg y).
Complex mode_profile(const Vec3& r, const PhysicalParams& params);

/// Atom-cavity coupling g(r) = g0 * mode_profile(r).
Complex cavity_coupling(const Vec3& r, const PhysicalParams& params);

/// Cavity-mediated interaction (J^c - i Gamma^c/2)_ij = g(ri) g*(rj) / (delta_c + i kappa/2)
/// after adiabatic elimination of the cavity field.
Complex cavity_interaction(const Vec3& ri, const Vec3& rj, const PhysicalParams& params);

/// Single-atom cooperativity 4 |g(r)|^2 / (kappa gamma0) at delta_c = 0.
double single_atom_cooperativity(const Vec3& r, const PhysicalParams& params);

}  // namespace selrad
