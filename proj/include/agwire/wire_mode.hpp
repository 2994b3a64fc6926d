// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <complex>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "agwire/vec3.hpp"

namespace agwire {

using cplx = std::complex<double>;

/// Cylindrical components of the azimuthally symmetric TM mode in solver units
/// (c = eps0 = mu0 = 1, lengths in nm), without the exp(i kz z) factor.
struct ModeField {
  cplx e_r;
  cplx e_z;
  cplx h_phi;
};

struct ModeSample {
  double r_nm = 0.0;
  ModeField field;
};

/// Fundamental bound plasmon of a metal cylinder in a homogeneous cladding.
struct GuidedMode {
  double wavelength_nm = 0.0;
  double radius_nm = 0.0;
  cplx eps_metal;
  cplx eps_clad;
  cplx kz;               ///< rad/nm
  cplx kappa_metal;      ///< transverse decay constants, principal square roots
  cplx kappa_clad;
  double residual = 0.0; ///< |D(kz)| relative to the larger of its two terms
  cplx surface_ez;       ///< E_z at r = radius for unit carried power
  std::vector<ModeSample> profile;

  double k0() const;
  cplx n_eff() const;
  double propagation_length_nm() const;
};

/// The two terms of the dispersion function eps_m I1/(kappa_m I0) + eps_c K1/(kappa_c K0).
std::array<cplx, 2> dispersion_terms(double radius_nm, cplx eps_metal, cplx eps_clad,
                                     double wavelength_nm, cplx kz);
cplx dispersion(double radius_nm, cplx eps_metal, cplx eps_clad, double wavelength_nm, cplx kz);

struct ModeSolveOptions {
  std::vector<double> start_scales{1.0, 1.2, 1.5};  ///< multiples of the flat-interface guess
  int max_iterations = 200;
  double tolerance = 1e-13;       ///< relative Newton step
  int profile_samples = 201;
  double profile_extent = 10.0;   ///< in radii
};

/// Flat-interface surface plasmon wavenumber k0 sqrt(eps_m eps_c / (eps_m + eps_c)).
cplx flat_interface_kz(cplx eps_metal, cplx eps_clad, double wavelength_nm);

/// Damped Newton from several starts. Throws DomainError if Re eps_m >= -Re eps_c and
/// NoBoundModeError (with the search trace) if no start converges to a bound root.
GuidedMode solve_fundamental_mode(double radius_nm, cplx eps_metal, cplx eps_clad,
                                  double wavelength_nm, const ModeSolveOptions& options = {});

/// Field at radius r (nm). Throws DomainError for r < 0.
ModeField mode_profile(const GuidedMode& mode, double r_nm);

/// Mode field at point p for a wire whose axis passes through `axis_point` and which carries
/// the mode towards the unit vector `direction`; s = (p - axis_point) . direction sets the
/// phase. Components are Cartesian.
struct CartesianField {
  std::array<cplx, 3> e;
  std::array<cplx, 3> h;
};
CartesianField mode_field_at(const GuidedMode& mode, Vec3 axis_point, Vec3 direction, Vec3 p);

/// 1/2 Re of the cross-sectional integral of E x H*; 1 for a solved mode.
double carried_power(const GuidedMode& mode);
/// The same integral restricted to r < radius.
double carried_power_within(const GuidedMode& mode, double r_nm);

nlohmann::json to_json(const GuidedMode& mode);
/// Columns r_nm, re/im of E_r, E_z, H_phi.
void write_mode_csv(std::ostream& out, const GuidedMode& mode);

}  // namespace agwire
