// SPDX-License-Identifier: Apache-2.0
#include "agwire/observables.hpp"

#include <cmath>

#include "agwire/errors.hpp"
#include "agwire/kernels.hpp"

namespace agwire {
namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

void check_mode(const CrossSection& cs, const GuidedMode& mode) {
  if (cs.plane == nullptr || cs.grid == nullptr || cs.plane->kind != MonitorKind::Plane)
    throw ComparabilityError("cross-section needs a plane monitor and its grid");
  if (!same(cs.wire_radius_nm, mode.radius_nm) || !same(cs.wavelength_nm, mode.wavelength_nm))
    throw ComparabilityError("guided mode was solved for a different radius or wavelength");
}

Vec3 sample_position(const GridSpec& g, const FieldSample& s, bool electric) {
  return electric ? e_position(g, s.comp, s.node[0], s.node[1], s.node[2])
                  : h_position(g, s.comp, s.node[0], s.node[1], s.node[2]);
}

double axis_distance(const CrossSection& cs, Vec3 p) {
  const Vec3 d = p - cs.axis_point;
  return norm(d - cs.direction * dot(d, cs.direction));
}

}  // namespace

PowerRecord emitted_power(const PhasorMonitor& box) {
  if (box.kind != MonitorKind::Box) throw MonitorPlacementError("emitted power needs a closed box");
  return {box.flux(), box.spacing_nm, box.extent_nm()};
}

double decay_rate_enhancement(const PowerRecord& p, const PowerRecord& p0) {
  if (!(p0.power > 0.0)) throw DomainError("reference power must be positive");
  if (!same(p.spacing_nm, p0.spacing_nm))
    throw ComparabilityError("powers were computed on different grid spacings");
  for (int a = 0; a < 3; ++a)
    if (!same(p.box_extent_nm[a], p0.box_extent_nm[a]))
      throw ComparabilityError("powers were measured on different monitor boxes");
  return p.power / p0.power;
}

nlohmann::json to_json(const EnhancementResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return {{"P", r.p},
          {"P0", r.p0},
          {"gamma_ratio", r.gamma_ratio},
          {"beta_left", opt(r.beta_left)},
          {"beta_right", opt(r.beta_right)},
          {"beta_total", opt(r.beta_total)}};
}

cplx modal_amplitude(const CrossSection& cs, const GuidedMode& mode) {
  check_mode(cs, mode);
  const PhasorMonitor& m = *cs.plane;
  std::vector<cplx> em(m.e_samples.size()), hm(m.h_samples.size());
  for (std::size_t i = 0; i < em.size(); ++i) {
    const FieldSample& s = m.e_samples[i];
    em[i] = mode_field_at(mode, cs.axis_point, cs.direction, sample_position(*cs.grid, s, true)).e[s.comp];
  }
  for (std::size_t i = 0; i < hm.size(); ++i) {
    const FieldSample& s = m.h_samples[i];
    hm[i] = mode_field_at(mode, cs.axis_point, cs.direction, sample_position(*cs.grid, s, false)).h[s.comp];
  }
  cplx overlap = 0.0, norm_mode = 0.0;
  for (const FluxPair& p : m.pairs) {
    const double s = p.sign;
    overlap += s * (m.e_phasor[p.e] * std::conj(hm[p.h]) + std::conj(em[p.e]) * m.h_phasor[p.h]);
    norm_mode += s * (em[p.e] * std::conj(hm[p.h]) + std::conj(em[p.e]) * hm[p.h]);
  }
  // The plane's own direction sets the pair signs; the mode must travel the same way.
  if (norm_mode.real() <= 0.0)
    throw ComparabilityError("cross-section direction opposes the mode direction");
  return overlap / norm_mode;
}

double guided_power(const CrossSection& cs, const GuidedMode& mode) {
  const cplx a = modal_amplitude(cs, mode);
  return std::norm(a) * carried_power(mode);
}

BetaFactors beta_factors(const CrossSection& left, const CrossSection& right,
                         const GuidedMode& mode, double p_total) {
  if (!(p_total > 0.0)) throw DomainError("total power must be positive");
  BetaFactors b;
  const double loss = 2.0 * mode.kz.imag();
  b.guided_left = guided_power(left, mode) * std::exp(loss * left.offset_nm);
  b.guided_right = guided_power(right, mode) * std::exp(loss * right.offset_nm);
  b.beta_left = b.guided_left / p_total;
  b.beta_right = b.guided_right / p_total;
  b.beta_total = b.beta_left + b.beta_right;
  return b;
}

double raw_flux_guided_power(const CrossSection& cs, const GuidedMode& mode,
                             double window_radius_nm, double annulus_outer_nm) {
  check_mode(cs, mode);
  if (!(annulus_outer_nm > window_radius_nm && window_radius_nm > mode.radius_nm))
    throw DomainError("window must enclose the wire and lie inside the annulus");
  const PhasorMonitor& m = *cs.plane;
  double inner = 0.0, outer = 0.0;
  std::vector<int> region(m.e_samples.size());
  std::array<double, 2> inner_count{}, outer_count{};
  const int tangential = next_axis(m.axis);
  for (std::size_t i = 0; i < m.e_samples.size(); ++i) {
    const double r = axis_distance(cs, sample_position(*cs.grid, m.e_samples[i], true));
    region[i] = r < window_radius_nm ? 1 : (r < annulus_outer_nm ? 2 : 0);
    const int slot = m.e_samples[i].comp == tangential ? 0 : 1;
    if (region[i] == 1) inner_count[slot] += 1.0;
    if (region[i] == 2) outer_count[slot] += 1.0;
  }
  for (const FluxPair& p : m.pairs) {
    const double f = p.sign * (m.e_phasor[p.e] * std::conj(m.h_phasor[p.h])).real();
    if (region[p.e] == 1) inner += f;
    if (region[p.e] == 2) outer += f;
  }
  const double h2 = m.spacing_nm * m.spacing_nm;
  inner *= 0.5 * h2;
  outer *= 0.5 * h2;
  const double inner_area = 0.5 * (inner_count[0] + inner_count[1]) * h2;
  const double outer_area = 0.5 * (outer_count[0] + outer_count[1]) * h2;
  if (outer_area <= 0.0) throw DomainError("annulus lies outside the plane monitor");
  const double mode_inside = carried_power_within(mode, window_radius_nm) / carried_power(mode);
  const double guided_at_plane = (inner - outer / outer_area * inner_area) / mode_inside;
  return guided_at_plane * std::exp(2.0 * mode.kz.imag() * cs.offset_nm);
}

}  // namespace agwire
