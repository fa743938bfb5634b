#include "selrad/cavity.hpp"

#include <cmath>

namespace selrad {

Complex mode_profile(const Vec3& r, const PhysicalParams& params) {
  const double magnitude = std::exp(-(r.z() - params.z_ref) / params.coupling_decay_length);
  return std::polar(magnitude, params.k_wg() * r.y());
}

Complex cavity_coupling(const Vec3& r, const PhysicalParams& params) {
  return params.g0 * mode_profile(r, params);
}

Complex cavity_interaction(const Vec3& ri, const Vec3& rj, const PhysicalParams& params) {
  const Complex gi = cavity_coupling(ri, params);
  const Complex gj = cavity_coupling(rj, params);
  return gi * std::conj(gj) / Complex(params.delta_c, 0.5 * params.kappa);
}

double single_atom_cooperativity(const Vec3& r, const PhysicalParams& params) {
  return 4.0 * std::norm(cavity_coupling(r, params)) / (params.kappa * params.gamma0);
}

}  // namespace selrad
