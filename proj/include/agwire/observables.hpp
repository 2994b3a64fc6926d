// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "agwire/grid.hpp"
#include "agwire/monitors.hpp"
#include "agwire/wire_mode.hpp"

namespace agwire {

/// Emitted power together with the metadata that decides whether two powers may be divided.
struct PowerRecord {
  double power = 0.0;
  double spacing_nm = 0.0;
  Vec3 box_extent_nm;
};

/// 1/2 of the closed-surface integral of Re(E x H*) over a box monitor.
PowerRecord emitted_power(const PhasorMonitor& box);

/// P / P0. Throws ComparabilityError unless spacing and monitor box agree, DomainError if
/// P0 <= 0.
double decay_rate_enhancement(const PowerRecord& p, const PowerRecord& p0);

struct EnhancementResult {
  double p = 0.0;
  double p0 = 0.0;
  double gamma_ratio = 0.0;
  std::optional<double> beta_left;
  std::optional<double> beta_right;
  std::optional<double> beta_total;
};

nlohmann::json to_json(const EnhancementResult& r);

/// A plane monitor crossing a wire. `axis_point` lies on the wire axis, `direction` points
/// away from the emitter along the axis, `offset_nm` is the axial distance from the wire's
/// inner tip to the plane.
struct CrossSection {
  const PhasorMonitor* plane = nullptr;
  const GridSpec* grid = nullptr;
  Vec3 axis_point;
  Vec3 direction;
  double offset_nm = 0.0;
  double wire_radius_nm = 0.0;
  double wavelength_nm = 0.0;
};

/// Complex amplitude a such that the field on the plane contains a * mode, from the
/// conjugate overlap integral of the sampled fields with the mode fields.
cplx modal_amplitude(const CrossSection& cs, const GuidedMode& mode);
/// Power carried by the mode at the plane, |a|^2 times the mode's own power on the same grid
/// samples.
double guided_power(const CrossSection& cs, const GuidedMode& mode);

struct BetaFactors {
  double beta_left = 0.0;
  double beta_right = 0.0;
  double beta_total = 0.0;
  double guided_left = 0.0;   ///< at the tips, loss corrected
  double guided_right = 0.0;
};

/// Mode-overlap estimator: guided power at each plane, propagated back to the tip with
/// exp(2 Im kz offset), divided by the total emitted power. Throws ComparabilityError when
/// the mode was solved for a different radius or wavelength.
BetaFactors beta_factors(const CrossSection& left, const CrossSection& right,
                         const GuidedMode& mode, double p_total);

/// Brute-force guided power at the tip from the raw flux through one plane, without
/// projecting onto the mode. Flux inside a disc of radius `window_radius_nm` around the axis
/// contains the guided power plus radiation crossing the disc; the radiation density is
/// estimated from the annulus window_radius_nm < r < annulus_outer_nm, where the bound mode
/// has decayed. The remainder is corrected for the mode power outside the disc and
/// propagated back to the tip.
double raw_flux_guided_power(const CrossSection& cs, const GuidedMode& mode,
                             double window_radius_nm, double annulus_outer_nm);

}  // namespace agwire
