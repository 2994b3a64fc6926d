// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace agwire {

struct G2Bin {
  double tau_ns = 0.0;
  double counts = 0.0;
};

struct G2Histogram {
  std::vector<G2Bin> bins;  ///< sorted by tau
  double bin_width_ns = 0.0;
};

/// g2(tau) = 1 - (1 + a) exp(-|tau|/tau1) + a exp(-|tau|/tau2).
double three_level_g2(double tau_ns, double a, double tau1_ns, double tau2_ns);

/// Classification rule for a single quantum emitter.
bool is_single_emitter(double g2_at_zero);

struct G2FitOptions {
  /// Fit a contrast factor c in [0, 1] so that counts = N (1 + c (g2 - 1)); accounts for an
  /// uncorrelated background. Off by default.
  bool background_correction = false;
  int max_restarts = 5;
};

struct ThreeLevelFit {
  double a = 0.0;
  double tau1_ns = 0.0;
  double tau2_ns = 0.0;
  double normalization = 0.0;  ///< coincidences at long delay
  double contrast = 1.0;       ///< 1 unless background correction is enabled
  double g2_at_zero = 0.0;      ///< measured: data at the bin nearest zero delay, or 1 - contrast
  bool single_emitter = false;
  Eigen::MatrixXd covariance;  ///< over (a, tau1, tau2, normalization[, contrast])
  int restarts_used = 0;
  double cost = 0.0;
};

/// Throws DegenerateDataError for an all-zero histogram or fewer than 20 bins not spanning
/// both signs of tau, FitError when no restart converges.
ThreeLevelFit fit_g2(const G2Histogram& hist, const G2FitOptions& options = {});

struct TimeTrace {
  std::vector<double> t_ns;
  std::vector<double> counts;
};

struct LifetimeWindow {
  double start_ns = 0.0;  ///< first time after the instrument response
  double end_ns = 0.0;    ///< must not exceed the pulse period
  double pulse_period_ns = 1e3 / 5.05;
};

/// A_f exp(-(t - start)/tau_fast) + A_s exp(-(t - start)/tau_slow) + B.
struct LifetimeFit {
  double tau_fast_ns = 0.0;
  double tau_slow_ns = 0.0;
  double amplitude_fast = 0.0;
  double amplitude_slow = 0.0;
  double background = 0.0;
  Eigen::MatrixXd covariance;  ///< over (A_f, tau_fast, A_s, tau_slow, B)
  bool converged = false;
  bool short_window = false;       ///< window shorter than 3 tau_slow
  bool fast_is_wire = false;       ///< tau_fast below 1 ns
  double cost = 0.0;

  double tau_slow_sigma() const;
};

inline constexpr double kWireFluorescenceLimitNs = 1.0;

LifetimeFit fit_lifetime_biexp(const TimeTrace& trace, const LifetimeWindow& window);

struct EnhancementRatio {
  double ratio = 0.0;
  double sigma = 0.0;
};

/// tau_slow(reference) / tau_slow(coupled). Throws ComparabilityError if a fit did not
/// converge.
EnhancementRatio enhancement_from_lifetimes(const LifetimeFit& reference, const LifetimeFit& coupled);

/// Two-column CSV whose header declares the time unit: `tau_<unit>,counts` for histograms,
/// `t_<unit>,counts` for traces, unit one of ps, ns, us. Times are converted to ns.
G2Histogram parse_g2_csv(std::istream& in);
TimeTrace parse_trace_csv(std::istream& in);

/// Seeded synthetic data for tests and fixtures.
G2Histogram synthetic_g2(double a, double tau1_ns, double tau2_ns, double normalization,
                         double relative_noise, std::uint64_t seed, double span_ns = 1000.0,
                         double bin_ns = 2.0);
TimeTrace synthetic_trace(double amplitude_fast, double tau_fast_ns, double amplitude_slow,
                          double tau_slow_ns, double background, bool shot_noise,
                          std::uint64_t seed, double length_ns = 190.0, double bin_ns = 0.05);

nlohmann::json to_json(const ThreeLevelFit& f);
nlohmann::json to_json(const LifetimeFit& f);

}  // namespace agwire
