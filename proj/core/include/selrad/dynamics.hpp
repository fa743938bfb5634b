#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "selrad/coupling.hpp"
#include "selrad/spectral.hpp"
#include "selrad/types.hpp"

namespace selrad {

/// Dipole expectation values sigma^i = <sigma_ge^i>.
struct StateVector {
  CVector sigma;
};

/// Amplitudes w such that sigma0 = sum_xi w_xi v_xi.
struct ModalAmplitudes {
  CVector w;
};

struct EmissionRates {
  double cav = 0.0;
  double free = 0.0;
  double total = 0.0;
};

struct RateDerivatives {
  double cav = 0.0;
  double free = 0.0;
};

/// Channel-resolved emission rates and their analytic time derivatives on a time grid.
struct EmissionTrace {
  std::vector<double> times;
  std::vector<double> r_cav, r_free, r_total;
  std::vector<double> rdot_cav, rdot_free;
  /// Number of tiny negative rates (round-off) clamped to zero.
  std::size_t clamped = 0;

  std::size_t size() const { return times.size(); }
};

/// Real drive envelope f(t) multiplying Omega in d(sigma)/dt = i M sigma + i f(t) Omega.
using PulseEnvelope = std::function<double(double)>;

/// sigma0 = -M^{-1} Omega, the stationary state under continuous drive.
StateVector prepare_steady_state(const CouplingMatrix& m);

/// sigma0 = Omega / |Omega|, the timed-Dicke state imprinted by a short pulse.
StateVector prepare_timed_dicke(const CouplingMatrix& m);

/// Integrates the driven equations from sigma(0) = 0 to t_end with an adaptive
/// Dormand-Prince pair (rtol 1e-9, atol 1e-12). Throws NumericalError on step underflow.
StateVector drive_evolution(const CouplingMatrix& m, const PulseEnvelope& pulse, double t_end);

/// Solves V w = sigma0 against the right-eigenvector matrix.
ModalAmplitudes decompose_state(const SpectralDecomposition& decomp, const StateVector& sigma0);

/// sigma(t) = sum_xi w_xi exp(i lambda_xi t) v_xi.
StateVector evolve(const SpectralDecomposition& decomp, const ModalAmplitudes& w, double t);

/// R_c = sigma^dag Gamma^c sigma, R_f = sigma^dag Gamma^f sigma, R = sigma^dag i(M^dag - M) sigma.
EmissionRates emission_rates(const StateVector& sigma, const CouplingMatrix& m);

/// dR_x/dt = sigma^dag (i Gamma_x M - i M^dag Gamma_x) sigma under free evolution.
RateDerivatives emission_rate_derivatives(const StateVector& sigma, const CouplingMatrix& m);

/// Tabulates rates and derivatives along the free evolution on a grid starting at 0.
EmissionTrace emission_trace(const SpectralDecomposition& decomp, const ModalAmplitudes& w,
                             const CouplingMatrix& m, std::span<const double> time_grid);

/// Time-integrated emission P_x = int_0^inf R_x dt, evaluated in closed form from the
/// modal expansion: sum conj(w_a) w_b (v_a^dag Gamma_x v_b) i / (lambda_b - conj(lambda_a)).
struct IntegratedEmission {
  double p_cav = 0.0;
  double p_free = 0.0;
};
IntegratedEmission integrated_emission(const SpectralDecomposition& decomp, const ModalAmplitudes& w,
                                       const CouplingMatrix& m);

}  // namespace selrad
