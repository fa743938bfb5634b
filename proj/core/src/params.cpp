#include "selrad/params.hpp"

#include <cmath>
#include <sstream>

#include "selrad/errors.hpp"

namespace selrad {

double evanescent_decay_length(double k0, double n_eff) {
  if (!(n_eff > 1.0)) {
    throw ParameterError("evanescent decay length requires n_eff > 1");
  }
  return 1.0 / (k0 * std::sqrt(n_eff * n_eff - 1.0));
}

CVec3 dipole_preset(std::string_view name) {
  const double h = 1.0 / std::sqrt(2.0);
  if (name == "x") return {1.0, 0.0, 0.0};
  if (name == "y") return {0.0, 1.0, 0.0};
  if (name == "z") return {0.0, 0.0, 1.0};
  if (name == "circular_xy" || name == "circular_xy+") return {h, kI * h, 0.0};
  if (name == "circular_xy-") return {h, -kI * h, 0.0};
  if (name == "circular_yz" || name == "circular_yz+") return {0.0, h, kI * h};
  if (name == "circular_yz-") return {0.0, h, -kI * h};
  throw ParameterError("unknown dipole preset '" + std::string(name) + "'");
}

std::vector<std::string> PhysicalParams::validate() const {
  auto fail = [](const std::string& msg) { throw ParameterError(msg); };
  if (!(gamma0 > 0.0)) fail("gamma0 must be > 0");
  if (!(k0 > 0.0)) fail("k0 must be > 0");
  if (!(kappa > 0.0)) fail("kappa must be > 0");
  if (!(n_eff >= 1.0)) fail("n_eff must be >= 1");
  if (!(g0 >= 0.0)) fail("g0 must be >= 0");
  if (!(coupling_decay_length > 0.0)) fail("coupling_decay_length must be > 0");
  if (!std::isfinite(delta_a) || !std::isfinite(delta_c) || !std::isfinite(z_ref)) {
    fail("detunings and z_ref must be finite");
  }
  if (std::abs(dipole.norm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "dipole must be a unit vector (norm " << dipole.norm() << ")";
    fail(os.str());
  }

  std::vector<std::string> warnings;
  if (!(kappa >= 10.0 * gamma0 && kappa >= 10.0 * g0)) {
    std::ostringstream os;
    os << "bad-cavity condition not met: kappa = " << kappa
       << " should be >= 10*gamma0 and >= 10*g0 (g0 = " << g0 << ")";
    warnings.push_back(os.str());
  }
  return warnings;
}

}  // namespace selrad
