#include "selrad/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "selrad/errors.hpp"

namespace selrad {
namespace {

double quadratic_form(const CVector& sigma, const CMatrix& a) {
  return (sigma.adjoint() * (a * sigma))(0).real();
}

void require_drive(const CouplingMatrix& m, const char* who) {
  if (m.drive.size() != m.size() || m.drive.squaredNorm() == 0.0) {
    throw ParameterError(std::string(who) + ": drive vector is zero");
  }
}

}  // namespace

StateVector prepare_steady_state(const CouplingMatrix& m) {
  require_drive(m, "prepare_steady_state");
  Eigen::PartialPivLU<CMatrix> lu(m.m_total);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericalError("prepare_steady_state: coupling matrix is singular", rcond);
  }
  StateVector out{lu.solve(-m.drive)};
  const double residual = (m.m_total * out.sigma + m.drive).norm();
  if (!(residual <= 1e-10 * m.drive.norm())) {
    std::ostringstream os;
    os << "prepare_steady_state: residual " << residual << " exceeds tolerance";
    throw NumericalError(os.str(), residual);
  }
  return out;
}

StateVector prepare_timed_dicke(const CouplingMatrix& m) {
  require_drive(m, "prepare_timed_dicke");
  return StateVector{m.drive / m.drive.norm()};
}

StateVector drive_evolution(const CouplingMatrix& m, const PulseEnvelope& pulse, double t_end) {
  namespace odeint = boost::numeric::odeint;
  if (!(t_end > 0.0)) {
    throw ParameterError("drive_evolution: t_end must be > 0");
  }
  using State = std::vector<Complex>;
  const Eigen::Index n = m.size();
  const CMatrix im = kI * m.m_total;
  const CVector iomega = kI * m.drive;

  auto rhs = [&](const State& x, State& dx, double t) {
    Eigen::Map<const CVector> xs(x.data(), n);
    Eigen::Map<CVector> dxs(dx.data(), n);
    dxs.noalias() = im * xs;
    const double f = pulse(t);
    if (f != 0.0) dxs += f * iomega;
  };

  State x(static_cast<std::size_t>(n), Complex(0.0));
  using Stepper = odeint::runge_kutta_dopri5<State>;
  const double max_dt = t_end / 100.0;
  auto stepper = odeint::make_dense_output(1e-12, 1e-9, max_dt, Stepper());
  try {
    odeint::integrate_adaptive(stepper, rhs, x, 0.0, t_end, std::min(1e-3, max_dt));
  } catch (const odeint::step_adjustment_error& e) {
    throw NumericalError(std::string("drive_evolution: step size underflow: ") + e.what());
  } catch (const odeint::no_progress_error& e) {
    throw NumericalError(std::string("drive_evolution: no progress: ") + e.what());
  }
  StateVector out{Eigen::Map<const CVector>(x.data(), n)};
  if (!out.sigma.allFinite()) {
    throw NumericalError("drive_evolution: non-finite state");
  }
  return out;
}

ModalAmplitudes decompose_state(const SpectralDecomposition& decomp, const StateVector& sigma0) {
  if (!(decomp.condition_estimate <= kMaxEigenvectorCondition)) {
    throw NumericalError("decompose_state: eigenvector matrix is ill-conditioned",
                         decomp.condition_estimate);
  }
  ModalAmplitudes out{decomp.lu.solve(sigma0.sigma)};
  const double scale = sigma0.sigma.norm();
  const double residual = (decomp.eigenvectors * out.w - sigma0.sigma).norm();
  if (scale > 0.0 && !(residual <= 1e-8 * scale)) {
    std::ostringstream os;
    os << "decompose_state: reconstruction residual " << residual / scale;
    throw NumericalError(os.str(), decomp.condition_estimate);
  }
  return out;
}

StateVector evolve(const SpectralDecomposition& decomp, const ModalAmplitudes& w, double t) {
  const CVector phase = (kI * t * decomp.eigenvalues.array()).exp().matrix();
  return StateVector{decomp.eigenvectors * w.w.cwiseProduct(phase)};
}

EmissionRates emission_rates(const StateVector& sigma, const CouplingMatrix& m) {
  EmissionRates out;
  out.cav = quadratic_form(sigma.sigma, m.gamma_cav);
  out.free = quadratic_form(sigma.sigma, m.gamma_free);
  const CVector ms = m.m_total * sigma.sigma;
  // sigma^dag i(M^dag - M) sigma = 2 Im(sigma^dag M sigma)
  out.total = 2.0 * sigma.sigma.dot(ms).imag();
  return out;
}

RateDerivatives emission_rate_derivatives(const StateVector& sigma, const CouplingMatrix& m) {
  // dR/dt = 2 Re(i sigma^dag Gamma M sigma) = -2 Im(sigma^dag Gamma M sigma) for Hermitian Gamma.
  const CVector ms = m.m_total * sigma.sigma;
  RateDerivatives out;
  out.cav = -2.0 * sigma.sigma.dot(m.gamma_cav * ms).imag();
  out.free = -2.0 * sigma.sigma.dot(m.gamma_free * ms).imag();
  return out;
}

EmissionTrace emission_trace(const SpectralDecomposition& decomp, const ModalAmplitudes& w,
                             const CouplingMatrix& m, std::span<const double> time_grid) {
  for (std::size_t k = 1; k < time_grid.size(); ++k) {
    if (!(time_grid[k] > time_grid[k - 1])) {
      throw ParameterError("emission_trace: time grid must be strictly increasing");
    }
  }
  if (!time_grid.empty() && time_grid.front() != 0.0) {
    throw ParameterError("emission_trace: time grid must start at 0");
  }

  const std::size_t n = time_grid.size();
  EmissionTrace out;
  out.times.assign(time_grid.begin(), time_grid.end());
  out.r_cav.resize(n);
  out.r_free.resize(n);
  out.r_total.resize(n);
  out.rdot_cav.resize(n);
  out.rdot_free.resize(n);

  const double population0 = w.w.size() > 0 ? evolve(decomp, w, 0.0).sigma.squaredNorm() : 0.0;
  const double floor = -1e-12 * std::max(1.0, m.gamma0 * population0);
  auto clamp = [&](double v) {
    if (v < 0.0 && v >= floor) {
      ++out.clamped;
      return 0.0;
    }
    return v;
  };

  if (n == 0) return out;
  // Batch all grid points: column k of S is sigma(t_k) = V (w o exp(i lambda t_k)).
  const Eigen::Index nt = static_cast<Eigen::Index>(n);
  const Eigen::Index na = decomp.size();
  CMatrix coeff(na, nt);
  for (Eigen::Index k = 0; k < nt; ++k) {
    coeff.col(k) = w.w.cwiseProduct((kI * time_grid[static_cast<std::size_t>(k)] * decomp.eigenvalues.array()).exp().matrix());
  }
  const CMatrix s = decomp.eigenvectors * coeff;
  const CMatrix ms = decomp.eigenvectors * (decomp.eigenvalues.asDiagonal() * coeff);
  const CMatrix gc_s = m.gamma_cav * s;
  const CMatrix gf_s = m.gamma_free * s;

  for (Eigen::Index k = 0; k < nt; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    out.r_cav[idx] = clamp(s.col(k).dot(gc_s.col(k)).real());
    out.r_free[idx] = clamp(s.col(k).dot(gf_s.col(k)).real());
    out.r_total[idx] = out.r_cav[idx] + out.r_free[idx];
    out.rdot_cav[idx] = -2.0 * gc_s.col(k).dot(ms.col(k)).imag();
    out.rdot_free[idx] = -2.0 * gf_s.col(k).dot(ms.col(k)).imag();
  }
  return out;
}

IntegratedEmission integrated_emission(const SpectralDecomposition& decomp, const ModalAmplitudes& w,
                                       const CouplingMatrix& m) {
  const CMatrix& v = decomp.eigenvectors;
  const CMatrix gc = v.adjoint() * m.gamma_cav * v;
  const CMatrix gf = v.adjoint() * m.gamma_free * v;
  const Eigen::Index n = decomp.size();
  Complex pc = 0.0;
  Complex pf = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const Complex kernel =
          std::conj(w.w(a)) * w.w(b) * kI / (decomp.eigenvalues(b) - std::conj(decomp.eigenvalues(a)));
      pc += kernel * gc(a, b);
      pf += kernel * gf(a, b);
    }
  }
  return IntegratedEmission{pc.real(), pf.real()};
}

}  // namespace selrad
