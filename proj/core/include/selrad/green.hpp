#pragma once

#include "selrad/params.hpp"
#include "selrad/types.hpp"

namespace selrad {

/// Vacuum dyadic Green's tensor at displacement dr, including the 1/(4 pi r) factor:
///
///   G = e^{ikr}/(4 pi r) [ (1 + i/kr - 1/(kr)^2) 1 + (-1 - 3i/kr + 3/(kr)^2) rr ]
///
/// The imaginary part is evaluated through spherical Bessel functions so that it stays
/// accurate as kr -> 0, where Im G -> k/(6 pi) 1. Throws DomainError for dr = 0.
Tensor3 free_space_green(const Vec3& dr, double k0);

/// Free-space resonant dipole-dipole interaction J_dd - i Gamma_dd / 2 between atoms at
/// ri and rj, normalized so that Gamma_dd(r -> 0) = gamma0. Coincident positions return
/// the self term -i gamma0 / 2 (the divergent real part is absorbed in delta_a).
Complex dd_interaction(const Vec3& ri, const Vec3& rj, const PhysicalParams& params);

}  // namespace selrad
