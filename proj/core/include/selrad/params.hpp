#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "selrad/types.hpp"

namespace selrad {

/// 1/e amplitude length of an evanescent field with propagation constant n_eff * k0.
double evanescent_decay_length(double k0, double n_eff);

/// Named dipole orientations: "x", "y", "z", "circular_xy", "circular_yz" and their
/// "-" suffixed opposite helicities (e.g. "circular_yz-").
CVec3 dipole_preset(std::string_view name);

/// System parameters in natural units (rates in gamma0, lengths in 1/k0).
///
/// The dipole-dipole prefactor mu0 w0^2 |d|^2 / hbar is absorbed into gamma0, so the
/// free-space channel is fully described by gamma0, k0 and the dipole orientation.
struct PhysicalParams {
  double gamma0 = 1.0;
  double k0 = 1.0;
  double n_eff = 1.7;
  double kappa = 327.0;
  double delta_a = 0.0;
  double delta_c = 0.0;
  CVec3 dipole = CVec3(1.0, 0.0, 0.0);
  double g0 = 0.0;
  double coupling_decay_length = evanescent_decay_length(1.0, 1.7);
  double z_ref = 0.0;

  double k_wg() const { return n_eff * k0; }
  double wavelength() const { return 2.0 * kPi / k0; }

  /// Throws ParameterError when an invariant is violated; returns soft warnings
  /// (bad-cavity condition) otherwise.
  std::vector<std::string> validate() const;
};

}  // namespace selrad
