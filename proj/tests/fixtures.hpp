#pragma once

#include <cstdint>

#include "oracles.hpp"
#include "selrad/coupling.hpp"

namespace fixture {

/// A random small cloud with both channels active and a guided drive.
inline selrad::CouplingMatrix system(int n, std::uint64_t seed, double g0 = 2.0) {
  selrad::PhysicalParams p;
  p.g0 = g0;
  p.z_ref = -2.5;
  const selrad::AtomEnsemble e = oracle::random_ensemble(n, 5.0, seed);
  selrad::CouplingMatrix m = selrad::build_coupling_matrix(e, p);
  m.drive = selrad::drive_vector(e, p, selrad::Complex(0.01, 0.0));
  return m;
}

}  // namespace fixture
