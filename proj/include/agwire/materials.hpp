// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace agwire {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;
/// rad/s per eV (e / hbar).
inline constexpr double kRadPerSecondPerEv = 1.519267447e15;

/// Angular frequency in rad/s for a vacuum wavelength in nm.
double angular_frequency(double wavelength_nm);

// Time convention throughout: fields vary as exp(-i omega t), so lossy media have
// Im(eps) > 0.

/// One term of eps(w) = eps_inf + sum strength / (resonance^2 - w^2 - i damping w).
/// A Drude term has resonance = 0.
struct LorentzPole {
  double strength = 0.0;   ///< rad^2/s^2
  double resonance = 0.0;  ///< rad/s
  double damping = 0.0;    ///< rad/s
};

enum class MaterialKind { ConstantIndex, DrudeLorentz, PerfectConductor };

struct MaterialModel {
  std::string name;
  MaterialKind kind = MaterialKind::ConstantIndex;
  double refractive_index = 1.0;  ///< constant-index only
  double eps_infinity = 1.0;      ///< drude-lorentz only
  std::vector<LorentzPole> poles;

  static MaterialModel constant_index(std::string name, double n);
  static MaterialModel drude_lorentz(std::string name, double eps_inf,
                                     std::vector<LorentzPole> poles);
  /// Ideal mirror, used only by validation scenes.
  static MaterialModel perfect_conductor(std::string name);

  bool dispersive() const { return kind == MaterialKind::DrudeLorentz; }
  /// Metals are never averaged with neighbours during rasterisation.
  bool metallic() const { return kind != MaterialKind::ConstantIndex; }

  friend bool operator==(const MaterialModel&, const MaterialModel&) = default;
};

/// Relative permittivity at a vacuum wavelength. Constant-index models return n^2 exactly;
/// a perfect conductor returns -infinity. Throws DomainError for wavelength <= 0.
cplx permittivity(const MaterialModel& model, double wavelength_nm);

struct OpticsRow {
  double wavelength_nm = 0.0;
  double n = 0.0;
  double k = 0.0;
};

/// Tabulated n, k data. Rows are strictly increasing in wavelength.
struct TabulatedOptics {
  std::vector<OpticsRow> rows;
  std::string provenance;

  /// Linear interpolation of n and k, returned as (n + ik)^2.
  cplx permittivity_at(double wavelength_nm) const;
};

/// Parses the `wavelength_nm,n,k` CSV format. Lines starting with '#' are provenance.
TabulatedOptics parse_optics_csv(std::istream& in);
TabulatedOptics load_optics_csv(const std::filesystem::path& path);

struct PoleFit {
  MaterialModel model;
  double max_relative_residual = 0.0;  ///< max |eps_fit - eps_data| / |eps_data| over the band
  bool flagged = false;                ///< residual above 10%
  int rows_used = 0;
  std::pair<double, double> band_nm;
};

/// Least-squares fit of eps_inf plus `n_poles` poles (first Drude, rest Lorentz) to the rows
/// inside `band_nm`. Needs at least 2 * n_poles + 1 rows in band. Every fitted strength and
/// damping is nonnegative, so the result is passive.
PoleFit fit_pole_model(const TabulatedOptics& data, int n_poles,
                       std::pair<double, double> band_nm, std::string name = "fitted");

/// Directory holding shipped data assets (overridable with AGWIRE_DATA_DIR).
std::filesystem::path data_directory();

/// Named models used by the scene builders.
struct MaterialSet {
  MaterialModel silver;
  MaterialModel diamond;
  MaterialModel silica;
  MaterialModel vacuum;
};

MaterialModel diamond();
MaterialModel silica();
MaterialModel vacuum();
/// Drude + one Lorentz pole fitted to the shipped silver table over `band_nm`.
PoleFit silver_fit(std::pair<double, double> band_nm = {500.0, 900.0});
MaterialModel silver();
/// Silver, diamond (n = 2.41), fused silica (n = 1.46) and vacuum. Computed once.
const MaterialSet& default_materials();

}  // namespace agwire
