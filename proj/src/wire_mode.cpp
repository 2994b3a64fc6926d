// SPDX-License-Identifier: Apache-2.0
#include "agwire/wire_mode.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "agwire/bessel.hpp"
#include "agwire/errors.hpp"
#include "agwire/materials.hpp"

namespace agwire {
namespace {

double wavenumber(double wavelength_nm) { return 2.0 * kPi / wavelength_nm; }

cplx kappa(cplx kz, double k0, cplx eps) { return std::sqrt(kz * kz - k0 * k0 * eps); }

// Fields for E_z(radius) = 1 at radius r.
ModeField unit_field(const GuidedMode& m, double r) {
  const double a = m.radius_nm;
  const double w = m.k0();
  if (r < a) {
    const cplx k1 = m.kappa_metal;
    const cplx grow = std::exp(k1 * (r - a)) / scaled_i(0, k1 * a);
    const cplx i0 = scaled_i(0, k1 * r) * grow;
    const cplx i1 = scaled_i(1, k1 * r) * grow;
    return {-cplx(0, 1) * m.kz * i1 / k1, i0, -cplx(0, 1) * w * m.eps_metal * i1 / k1};
  }
  const cplx k2 = m.kappa_clad;
  const cplx decay = std::exp(-k2 * (r - a)) / scaled_k(0, k2 * a);
  const cplx k0v = scaled_k(0, k2 * r) * decay;
  const cplx k1v = scaled_k(1, k2 * r) * decay;
  return {cplx(0, 1) * m.kz * k1v / k2, k0v, cplx(0, 1) * w * m.eps_clad * k1v / k2};
}

double unit_power(const GuidedMode& m, double limit = std::numeric_limits<double>::infinity()) {
  auto density = [&](double r) {
    const ModeField f = unit_field(m, r);
    return 0.5 * (f.e_r * std::conj(f.h_phi)).real() * 2.0 * kPi * r;
  };
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  const double a = std::min(m.radius_nm, limit);
  const double inner = gauss_kronrod<double, 61>::integrate(density, 0.0, a, 15, 1e-14);
  if (limit <= m.radius_nm) return inner;
  if (std::isfinite(limit))
    return inner + gauss_kronrod<double, 61>::integrate(density, m.radius_nm, limit, 15, 1e-14);
  exp_sinh<double> outer_rule;
  return inner + outer_rule.integrate(density, m.radius_nm, limit, 1e-13);
}

}  // namespace

double GuidedMode::k0() const { return wavenumber(wavelength_nm); }
cplx GuidedMode::n_eff() const { return kz / k0(); }
double GuidedMode::propagation_length_nm() const { return 1.0 / (2.0 * kz.imag()); }

std::array<cplx, 2> dispersion_terms(double radius_nm, cplx eps_metal, cplx eps_clad,
                                     double wavelength_nm, cplx kz) {
  const double k0 = wavenumber(wavelength_nm);
  const cplx k1 = kappa(kz, k0, eps_metal);
  const cplx k2 = kappa(kz, k0, eps_clad);
  const cplx x1 = k1 * radius_nm, x2 = k2 * radius_nm;
  return {eps_metal / k1 * scaled_i(1, x1) / scaled_i(0, x1),
          eps_clad / k2 * scaled_k(1, x2) / scaled_k(0, x2)};
}

cplx dispersion(double radius_nm, cplx eps_metal, cplx eps_clad, double wavelength_nm, cplx kz) {
  const auto t = dispersion_terms(radius_nm, eps_metal, eps_clad, wavelength_nm, kz);
  return t[0] + t[1];
}

cplx flat_interface_kz(cplx eps_metal, cplx eps_clad, double wavelength_nm) {
  return wavenumber(wavelength_nm) * std::sqrt(eps_metal * eps_clad / (eps_metal + eps_clad));
}

GuidedMode solve_fundamental_mode(double radius_nm, cplx eps_metal, cplx eps_clad,
                                  double wavelength_nm, const ModeSolveOptions& options) {
  if (!(radius_nm > 0.0) || !(wavelength_nm > 0.0))
    throw DomainError("radius and wavelength must be positive");
  if (!(eps_metal.real() < -eps_clad.real()))
    throw DomainError("no surface plasmon: Re eps_metal must be below -Re eps_clad");
  const double k0 = wavenumber(wavelength_nm);
  const cplx guess = flat_interface_kz(eps_metal, eps_clad, wavelength_nm);
  auto f = [&](cplx kz) { return dispersion(radius_nm, eps_metal, eps_clad, wavelength_nm, kz); };
  auto bound = [&](cplx kz) {
    return kz.imag() >= -1e-12 * std::abs(kz) && kz.real() / k0 > std::sqrt(eps_clad.real());
  };

  std::ostringstream trace;
  std::vector<cplx> roots;
  for (double scale : options.start_scales) {
    cplx kz = guess * scale;
    cplx fz = f(kz);
    bool done = false;
    trace << "start " << kz << ":";
    for (int it = 0; it < options.max_iterations && !done; ++it) {
      const cplx step_size = 1e-7 * std::abs(kz);
      const cplx deriv = (f(kz + step_size) - f(kz - step_size)) / (2.0 * step_size);
      const cplx delta = -fz / deriv;
      double damping = 1.0;
      cplx next = kz + delta;
      cplx fn = f(next);
      while (!(std::abs(fn) < std::abs(fz)) && damping > 1e-4) {
        damping *= 0.5;
        next = kz + damping * delta;
        fn = f(next);
      }
      if (!std::isfinite(std::abs(fn))) break;
      const double rel = std::abs(next - kz) / std::abs(next);
      kz = next;
      fz = fn;
      if (rel < options.tolerance) done = true;
    }
    trace << " -> " << kz << (done ? " converged" : " stalled") << "; ";
    if (done && bound(kz)) roots.push_back(kz);
  }
  if (roots.empty()) throw NoBoundModeError("no bound mode found: " + trace.str());

  GuidedMode m;
  m.wavelength_nm = wavelength_nm;
  m.radius_nm = radius_nm;
  m.eps_metal = eps_metal;
  m.eps_clad = eps_clad;
  m.kz = roots.front();
  m.kappa_metal = kappa(m.kz, k0, eps_metal);
  m.kappa_clad = kappa(m.kz, k0, eps_clad);
  const auto terms = dispersion_terms(radius_nm, eps_metal, eps_clad, wavelength_nm, m.kz);
  m.residual = std::abs(terms[0] + terms[1]) / std::max(std::abs(terms[0]), std::abs(terms[1]));
  m.surface_ez = 1.0;
  m.surface_ez = 1.0 / std::sqrt(unit_power(m));
  const int n = std::max(options.profile_samples, 2);
  for (int i = 0; i < n; ++i) {
    const double r = options.profile_extent * radius_nm * i / (n - 1);
    m.profile.push_back({r, mode_profile(m, r)});
  }
  return m;
}

ModeField mode_profile(const GuidedMode& mode, double r_nm) {
  if (!(r_nm >= 0.0)) throw DomainError("radius must be nonnegative");
  ModeField f = unit_field(mode, r_nm);
  f.e_r *= mode.surface_ez;
  f.e_z *= mode.surface_ez;
  f.h_phi *= mode.surface_ez;
  return f;
}

double carried_power(const GuidedMode& mode) {
  return unit_power(mode) * std::norm(mode.surface_ez);
}

double carried_power_within(const GuidedMode& mode, double r_nm) {
  if (!(r_nm >= 0.0)) throw DomainError("radius must be nonnegative");
  return unit_power(mode, r_nm) * std::norm(mode.surface_ez);
}

CartesianField mode_field_at(const GuidedMode& mode, Vec3 axis_point, Vec3 direction, Vec3 p) {
  const Vec3 d = p - axis_point;
  const double s = dot(d, direction);
  const Vec3 radial = d - direction * s;
  const double r = norm(radial);
  const ModeField f = mode_profile(mode, r);
  const cplx phase = std::exp(cplx(0, 1) * mode.kz * s);
  CartesianField out;
  const Vec3 rhat = r > 0.0 ? radial * (1.0 / r) : Vec3{};
  const Vec3 phihat = cross(direction, rhat);
  for (int a = 0; a < 3; ++a) {
    out.e[a] = (f.e_r * rhat[a] + f.e_z * direction[a]) * phase;
    out.h[a] = f.h_phi * phihat[a] * phase;
  }
  return out;
}

nlohmann::json to_json(const GuidedMode& m) {
  auto c = [](cplx z) { return nlohmann::json::array({z.real(), z.imag()}); };
  return {{"wavelength_nm", m.wavelength_nm},
          {"radius_nm", m.radius_nm},
          {"eps_metal", c(m.eps_metal)},
          {"eps_clad", c(m.eps_clad)},
          {"kz_per_nm", c(m.kz)},
          {"n_eff", c(m.n_eff())},
          {"propagation_length_nm", m.propagation_length_nm()},
          {"dispersion_residual", m.residual}};
}

void write_mode_csv(std::ostream& out, const GuidedMode& mode) {
  out << "r_nm,re_e_r,im_e_r,re_e_z,im_e_z,re_h_phi,im_h_phi\n";
  out << std::setprecision(12);
  for (const ModeSample& s : mode.profile)
    out << s.r_nm << ',' << s.field.e_r.real() << ',' << s.field.e_r.imag() << ','
        << s.field.e_z.real() << ',' << s.field.e_z.imag() << ',' << s.field.h_phi.real() << ','
        << s.field.h_phi.imag() << '\n';
}

}  // namespace agwire
