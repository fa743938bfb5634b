#include "selrad/green.hpp"

#include <cmath>

#include "selrad/errors.hpp"

namespace selrad {
namespace {

// j0(x) and j2(x); power series below x = 0.5 where the closed form of j2 cancels.
double bessel_j0(double x) {
  if (x < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double bessel_j2(double x) {
  if (x < 0.5) {
    // j2(x) = x^2 sum_n (-x^2/2)^n / (n! (2n+5)!!)
    const double y = -0.5 * x * x;
    double term = 1.0 / 15.0;
    double sum = term;
    for (int n = 1; n < 12; ++n) {
      term *= y / (n * (2.0 * n + 5.0));
      sum += term;
    }
    return x * x * sum;
  }
  const double s = std::sin(x);
  const double c = std::cos(x);
  return (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
}

}  // namespace

Tensor3 free_space_green(const Vec3& dr, double k0) {
  const double r = dr.norm();
  if (!(r > 0.0)) {
    throw DomainError("free_space_green: zero displacement");
  }
  const Vec3 n = dr / r;
  const double x = k0 * r;
  const double c = std::cos(x);
  const double s = std::sin(x);
  const double x2 = x * x;
  const double x3 = x2 * x;

  // G = k/(4 pi) [a(x) 1 + b(x) rr]
  const double re_a = c / x - s / x2 - c / x3;
  const double re_b = 3.0 * c / x3 - c / x + 3.0 * s / x2;
  const double j0 = bessel_j0(x);
  const double j2 = bessel_j2(x);
  const double im_a = (2.0 * j0 - j2) / 3.0;
  const double im_b = j2;

  const double pref = k0 / (4.0 * kPi);
  const Complex a = pref * Complex(re_a, im_a);
  const Complex b = pref * Complex(re_b, im_b);
  Tensor3 g = (n * n.transpose()).cast<Complex>() * b;
  g.diagonal().array() += a;
  return g;
}

Complex dd_interaction(const Vec3& ri, const Vec3& rj, const PhysicalParams& params) {
  if (ri == rj) {
    return Complex(0.0, -0.5 * params.gamma0);
  }
  const Tensor3 g = free_space_green(rj - ri, params.k0);
  const CVec3& d = params.dipole;
  // Real and imaginary parts of G are real symmetric, so both contractions are real.
  const double re = (d.adjoint() * g.real().cast<Complex>() * d)(0).real();
  const double im = (d.adjoint() * g.imag().cast<Complex>() * d)(0).real();
  const double scale = -3.0 * kPi * params.gamma0 / params.k0;
  return scale * Complex(re, im);
}

}  // namespace selrad
