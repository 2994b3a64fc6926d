// SPDX-License-Identifier: Apache-2.0
#include "agwire/bessel.hpp"

#include <algorithm>
#include <cmath>

#include "agwire/errors.hpp"

namespace agwire {
namespace {

using cplx = std::complex<double>;
constexpr double kPiValue = 3.14159265358979323846;

// Both integrands below are smooth and either periodic or double-exponentially decaying, so
// the trapezoid rule converges geometrically. The node count grows with |z| to resolve the
// peak near the origin and the oscillation of exp(-i Im z ...).
int nodes_for(double scale) { return std::clamp(int(std::ceil(64.0 + 12.0 * scale)), 64, 20000); }

}  // namespace

cplx scaled_i(int n, cplx z) {
  // (1/pi) int_0^pi exp(z (cos t - 1)) cos(n t) dt
  const int m = nodes_for(std::sqrt(std::abs(z)) + std::abs(z.imag()));
  const double h = kPiValue / m;
  cplx sum = 0.5 * (1.0 + std::exp(-2.0 * z) * std::cos(n * kPiValue));
  for (int j = 1; j < m; ++j) {
    const double t = j * h;
    sum += std::exp(z * (std::cos(t) - 1.0)) * std::cos(n * t);
  }
  return sum * h / kPiValue;
}

cplx scaled_k(int n, cplx z) {
  // int_0^inf exp(-z (cosh t - 1)) cosh(n t) dt
  if (!(z.real() > 0.0)) throw DomainError("scaled_k requires Re z > 0");
  const double re = z.real();
  const double upper = std::acosh(1.0 + (40.0 + n * 3.0) / re) + 1.0;
  const double rate = std::abs(z) * std::sinh(upper) + n;
  const int m = nodes_for(std::max(upper * rate / 6.0, upper * 8.0));
  const double h = upper / m;
  cplx sum = 0.5;
  for (int j = 1; j <= m; ++j) {
    const double t = j * h;
    sum += std::exp(-z * (std::cosh(t) - 1.0)) * std::cosh(n * t);
  }
  return sum * h;
}

}  // namespace agwire
