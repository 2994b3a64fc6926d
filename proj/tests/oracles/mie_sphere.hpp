// Decay rate of an oscillating dipole outside a homogeneous sphere in vacuum, normalized to
// free space, from the exact multipole series (exp(-i w t) convention). Evaluated in long
// double so the outgoing Hankel functions stay finite up to n ~ 200.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using cld = std::complex<long double>;

struct SphereDecay {
  double radial = 0.0;
  double tangential = 0.0;
};

inline SphereDecay sphere_decay(double radius_nm, std::complex<double> eps, double r0_nm,
                                double wavelength_nm, int n_max = 200) {
  const long double k = 2.0L * 3.14159265358979323846L / wavelength_nm;
  const long double x = k * radius_nm;
  const long double y = k * r0_nm;
  const cld m = std::sqrt(cld(eps.real(), eps.imag()));
  const cld mx = m * x;

  // Logarithmic derivative D_n(mx) by downward recurrence.
  const int n_start = n_max + 40;
  std::vector<cld> d(n_start + 2, cld(0));
  for (int n = n_start; n >= 1; --n) {
    const cld nz = cld(n) / mx;
    d[n - 1] = nz - 1.0L / (d[n] + nz);
  }

  // Riccati-Bessel psi_n(x), downward and normalized to psi_0 = sin x.
  std::vector<long double> psi(n_start + 2, 0.0L);
  psi[n_start] = 1e-300L;
  for (int n = n_start; n >= 1; --n) psi[n - 1] = (2 * n + 1) / x * psi[n] - psi[n + 1];
  const long double scale = std::sin(x) / psi[0];
  for (auto& p : psi) p *= scale;

  // Riccati-Hankel xi_n(z) = z h_n^(1)(z) up to a global phase shared by every use.
  auto xi_series = [](long double z, int count) {
    std::vector<cld> xi(count + 1);
    xi[0] = cld(std::sin(z), -std::cos(z));
    xi[1] = xi[0] / z - cld(std::cos(z), std::sin(z));
    for (int n = 1; n < count; ++n) xi[n + 1] = cld(2 * n + 1) / z * xi[n] - xi[n - 1];
    return xi;
  };
  const auto xi_x = xi_series(x, n_max + 1);
  const auto xi_y = xi_series(y, n_max + 1);

  cld sum_r = 0, sum_t = 0;
  for (int n = 1; n <= n_max; ++n) {
    const cld da = d[n] / m + cld(n) / x;
    const cld db = m * d[n] + cld(n) / x;
    const cld an = (da * psi[n] - psi[n - 1]) / (da * xi_x[n] - xi_x[n - 1]);
    const cld bn = (db * psi[n] - psi[n - 1]) / (db * xi_x[n] - xi_x[n - 1]);
    const cld hn = xi_y[n] / y;
    const cld xi_prime = xi_y[n - 1] - cld(n) / y * xi_y[n];
    sum_r += cld(n * (n + 1.0L) * (2 * n + 1)) * an * (hn / y) * (hn / y);
    sum_t += cld(2 * n + 1) * (bn * hn * hn + an * (xi_prime / y) * (xi_prime / y));
  }
  return {static_cast<double>(1.0L - 1.5L * sum_r.real()),
          static_cast<double>(1.0L - 0.75L * sum_t.real())};
}

}  // namespace oracle
