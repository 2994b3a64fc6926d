// SPDX-License-Identifier: Apache-2.0
#include "agwire/materials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "agwire/errors.hpp"
#include "agwire/least_squares.hpp"

#ifndef AGWIRE_DATA_DIR
#define AGWIRE_DATA_DIR "data"
#endif

namespace agwire {

double angular_frequency(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw DomainError("wavelength must be positive");
  return 2.0 * kPi * kSpeedOfLight / (wavelength_nm * 1e-9);
}

MaterialModel MaterialModel::constant_index(std::string name, double n) {
  if (!(n >= 1.0)) throw DomainError("refractive index of '" + name + "' must be >= 1");
  MaterialModel m;
  m.name = std::move(name);
  m.kind = MaterialKind::ConstantIndex;
  m.refractive_index = n;
  return m;
}

MaterialModel MaterialModel::drude_lorentz(std::string name, double eps_inf,
                                           std::vector<LorentzPole> poles) {
  MaterialModel m;
  m.name = std::move(name);
  m.kind = MaterialKind::DrudeLorentz;
  m.eps_infinity = eps_inf;
  m.poles = std::move(poles);
  return m;
}

MaterialModel MaterialModel::perfect_conductor(std::string name) {
  MaterialModel m;
  m.name = std::move(name);
  m.kind = MaterialKind::PerfectConductor;
  return m;
}

cplx permittivity(const MaterialModel& model, double wavelength_nm) {
  const double w = angular_frequency(wavelength_nm);
  switch (model.kind) {
    case MaterialKind::ConstantIndex:
      return {model.refractive_index * model.refractive_index, 0.0};
    case MaterialKind::PerfectConductor:
      return {-std::numeric_limits<double>::infinity(), 0.0};
    case MaterialKind::DrudeLorentz: {
      cplx eps = model.eps_infinity;
      for (const auto& p : model.poles) {
        eps += p.strength / cplx(p.resonance * p.resonance - w * w, -p.damping * w);
      }
      return eps;
    }
  }
  return {};
}

cplx TabulatedOptics::permittivity_at(double wavelength_nm) const {
  if (rows.empty()) throw DomainError("empty optics table");
  if (wavelength_nm < rows.front().wavelength_nm || wavelength_nm > rows.back().wavelength_nm) {
    throw DomainError("wavelength " + std::to_string(wavelength_nm) +
                      " nm outside tabulated range");
  }
  auto hi = std::lower_bound(rows.begin(), rows.end(), wavelength_nm,
                             [](const OpticsRow& r, double w) { return r.wavelength_nm < w; });
  if (hi == rows.begin()) ++hi;
  const auto lo = hi - 1;
  const double t = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
  const double n = lo->n + t * (hi->n - lo->n);
  const double k = lo->k + t * (hi->k - lo->k);
  const cplx nk(n, k);
  return nk * nk;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw DomainError("optics CSV line " + std::to_string(line) + ": bad number '" + t + "'");
  }
  return v;
}

}  // namespace

TabulatedOptics parse_optics_csv(std::istream& in) {
  TabulatedOptics table;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      table.provenance += trim(t.substr(1)) + "\n";
      continue;
    }
    if (!header_seen) {
      if (t != "wavelength_nm,n,k") {
        throw DomainError("optics CSV: expected header 'wavelength_nm,n,k', got '" + t + "'");
      }
      header_seen = true;
      continue;
    }
    std::stringstream ss(t);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw DomainError("optics CSV line " + std::to_string(line_no) + ": expected 3 columns");
    }
    OpticsRow row{parse_number(a, line_no), parse_number(b, line_no), parse_number(c, line_no)};
    if (row.k < 0.0) {
      throw DomainError("optics CSV line " + std::to_string(line_no) + ": negative k");
    }
    if (!table.rows.empty() && !(row.wavelength_nm > table.rows.back().wavelength_nm)) {
      throw DomainError("optics CSV line " + std::to_string(line_no) +
                        ": wavelengths must be strictly increasing");
    }
    table.rows.push_back(row);
  }
  if (!header_seen) throw DomainError("optics CSV: missing header");
  return table;
}

TabulatedOptics load_optics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open optics table " + path.string());
  return parse_optics_csv(in);
}

// ---------------------------------------------------------------------------
// Pole fitting. Internally frequencies are photon energies in eV, which keeps the
// parameters O(1). Parameter vector: [eps_inf, log S_1, log g_1, (log S_p, log w0_p, log g_p)...]
// with pole 1 a Drude term.

namespace {

constexpr double kNmEv = 1239.841984;

struct FitData {
  std::vector<double> energy;  // eV
  std::vector<cplx> eps;
  std::vector<double> weight;  // 1 / |eps|
};

int parameter_count(int n_poles) { return n_poles == 0 ? 1 : 1 + 2 + 3 * (n_poles - 1); }

cplx model_eps(const Eigen::VectorXd& p, int n_poles, double e, Eigen::VectorXcd* grad) {
  cplx eps = p(0);
  if (grad) {
    grad->setZero(p.size());
    (*grad)(0) = 1.0;
  }
  int idx = 1;
  for (int pole = 0; pole < n_poles; ++pole) {
    const bool drude = pole == 0;
    const double s = std::exp(p(idx));
    const double w0 = drude ? 0.0 : std::exp(p(idx + 1));
    const double g = std::exp(p(idx + (drude ? 1 : 2)));
    const cplx denom(w0 * w0 - e * e, -g * e);
    const cplx term = s / denom;
    eps += term;
    if (grad) {
      (*grad)(idx) = term;
      if (!drude) (*grad)(idx + 1) = -2.0 * w0 * w0 * term / denom;
      (*grad)(idx + (drude ? 1 : 2)) = cplx(0.0, g * e) * term / denom;
    }
    idx += drude ? 2 : 3;
  }
  return eps;
}

struct Candidate {
  Eigen::VectorXd params;
  double cost = std::numeric_limits<double>::infinity();
};

Candidate run_fit(const FitData& d, int n_poles, Eigen::VectorXd start) {
  const int np = parameter_count(n_poles);
  const auto m = static_cast<Eigen::Index>(d.energy.size());
  LeastSquaresProblem problem;
  problem.residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(2 * m);
    if (J) J->resize(2 * m, np);
    Eigen::VectorXcd grad;
    for (Eigen::Index i = 0; i < m; ++i) {
      const cplx diff = (model_eps(p, n_poles, d.energy[i], J ? &grad : nullptr) - d.eps[i]) *
                        d.weight[i];
      r(2 * i) = diff.real();
      r(2 * i + 1) = diff.imag();
      if (J) {
        for (int c = 0; c < np; ++c) {
          (*J)(2 * i, c) = grad(c).real() * d.weight[i];
          (*J)(2 * i + 1, c) = grad(c).imag() * d.weight[i];
        }
      }
    }
  };
  problem.lower = Eigen::VectorXd::Constant(np, -40.0);
  problem.upper = Eigen::VectorXd::Constant(np, 8.0);
  problem.lower(0) = 1.0;
  problem.upper(0) = 100.0;
  LeastSquaresOptions options;
  options.max_iterations = 2000;
  const auto res = levenberg_marquardt(problem, std::move(start), options);
  return {res.params, res.cost};
}

}  // namespace

PoleFit fit_pole_model(const TabulatedOptics& data, int n_poles,
                       std::pair<double, double> band_nm, std::string name) {
  if (n_poles < 0 || n_poles > 4) throw DomainError("n_poles must be in [0, 4]");
  FitData d;
  for (const auto& row : data.rows) {
    if (row.wavelength_nm < band_nm.first || row.wavelength_nm > band_nm.second) continue;
    const cplx nk(row.n, row.k);
    d.energy.push_back(kNmEv / row.wavelength_nm);
    d.eps.push_back(nk * nk);
    d.weight.push_back(1.0 / std::max(std::abs(nk * nk), 1e-12));
  }
  const int rows = static_cast<int>(d.energy.size());
  if (rows < 2 * n_poles + 1) {
    throw DomainError("pole fit needs at least " + std::to_string(2 * n_poles + 1) +
                      " rows in band, found " + std::to_string(rows));
  }

  // Drude seed from the quasi-static form Re eps ~ a - b / E^2.
  double eps_inf0 = 0.0;
  double strength0 = 1e-6;
  double damping0 = 0.1;
  {
    Eigen::MatrixXd A(rows, 2);
    Eigen::VectorXd b(rows);
    for (int i = 0; i < rows; ++i) {
      A(i, 0) = 1.0;
      A(i, 1) = -1.0 / (d.energy[i] * d.energy[i]);
      b(i) = d.eps[i].real();
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    eps_inf0 = std::clamp(sol(0), 1.0, 100.0);
    if (n_poles == 0) {
      eps_inf0 = 0.0;
      for (const auto& e : d.eps) eps_inf0 += e.real();
      eps_inf0 = std::clamp(eps_inf0 / rows, 1.0, 100.0);
    }
    strength0 = std::max(sol(1), 1e-6);
    std::vector<double> g;
    for (int i = 0; i < rows; ++i) {
      const double e = d.energy[i];
      g.push_back(d.eps[i].imag() * e * e * e / strength0);
    }
    std::nth_element(g.begin(), g.begin() + rows / 2, g.end());
    damping0 = std::clamp(g[rows / 2], 1e-4, 1.0);
  }

  const double e_max = *std::max_element(d.energy.begin(), d.energy.end());
  const double e_mid = 0.5 * (e_max + *std::min_element(d.energy.begin(), d.energy.end()));
  const int np = parameter_count(n_poles);

  Candidate best;
  const std::vector<double> spreads = n_poles > 1 ? std::vector<double>{1.3, 2.0, 3.0}
                                                  : std::vector<double>{1.0};
  const std::vector<double> amplitudes = n_poles > 1 ? std::vector<double>{1e-3, 0.5, 2.0}
                                                     : std::vector<double>{1.0};
  for (double spread : spreads) {
    for (double amp : amplitudes) {
      Eigen::VectorXd p(np);
      p(0) = eps_inf0;
      if (n_poles > 0) {
        p(1) = std::log(strength0);
        p(2) = std::log(damping0);
      }
      for (int pole = 1; pole < n_poles; ++pole) {
        const double w0 = e_max * (spread + 0.7 * (pole - 1));
        const int idx = 3 + 3 * (pole - 1);
        p(idx) = std::log(amp * std::max(w0 * w0 - e_mid * e_mid, 1e-3));
        p(idx + 1) = std::log(w0);
        p(idx + 2) = std::log(0.3 * w0);
      }
      Candidate c = run_fit(d, n_poles, p);
      if (c.cost < best.cost) best = std::move(c);
    }
  }
  if (!std::isfinite(best.cost)) throw FitError("pole fit failed to produce a finite residual");

  // Back to SI.
  std::vector<LorentzPole> poles;
  int idx = 1;
  for (int pole = 0; pole < n_poles; ++pole) {
    const bool drude = pole == 0;
    LorentzPole lp;
    lp.strength = std::exp(best.params(idx)) * kRadPerSecondPerEv * kRadPerSecondPerEv;
    lp.resonance = drude ? 0.0 : std::exp(best.params(idx + 1)) * kRadPerSecondPerEv;
    lp.damping = std::exp(best.params(idx + (drude ? 1 : 2))) * kRadPerSecondPerEv;
    poles.push_back(lp);
    idx += drude ? 2 : 3;
  }
  PoleFit fit;
  fit.model = MaterialModel::drude_lorentz(std::move(name), best.params(0), std::move(poles));
  fit.rows_used = rows;
  fit.band_nm = band_nm;
  for (const auto& row : data.rows) {
    if (row.wavelength_nm < band_nm.first || row.wavelength_nm > band_nm.second) continue;
    const cplx nk(row.n, row.k);
    const cplx target = nk * nk;
    const double rel = std::abs(permittivity(fit.model, row.wavelength_nm) - target) /
                       std::abs(target);
    fit.max_relative_residual = std::max(fit.max_relative_residual, rel);
  }
  fit.flagged = fit.max_relative_residual > 0.10;
  return fit;
}

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("AGWIRE_DATA_DIR"); env && *env) return env;
  return AGWIRE_DATA_DIR;
}

MaterialModel diamond() { return MaterialModel::constant_index("diamond", 2.41); }
MaterialModel silica() { return MaterialModel::constant_index("silica", 1.46); }
MaterialModel vacuum() { return MaterialModel::constant_index("vacuum", 1.0); }

PoleFit silver_fit(std::pair<double, double> band_nm) {
  const auto table = load_optics_csv(data_directory() / "silver_johnson_christy.csv");
  return fit_pole_model(table, 2, band_nm, "silver");
}

MaterialModel silver() { return default_materials().silver; }

const MaterialSet& default_materials() {
  static const MaterialSet set{silver_fit().model, diamond(), silica(), vacuum()};
  return set;
}

}  // namespace agwire
