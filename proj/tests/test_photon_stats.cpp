#include <doctest.h>

#include <fstream>
#include <sstream>

#include "agwire/errors.hpp"
#include "agwire/photon_stats.hpp"

using namespace agwire;

TEST_CASE("three-level model shape") {
  CHECK(three_level_g2(0.0, 0.7, 10, 200) == doctest::Approx(0.0));
  CHECK(three_level_g2(1e5, 0.7, 10, 200) == doctest::Approx(1.0));
  CHECK(three_level_g2(-30.0, 0.7, 10, 200) == doctest::Approx(three_level_g2(30.0, 0.7, 10, 200)));
  CHECK(three_level_g2(40.0, 0.7, 10, 200) > 1.0);
}

TEST_CASE("single-emitter rule is a strict half threshold") {
  CHECK(is_single_emitter(0.4));
  CHECK(is_single_emitter(0.0));
  CHECK_FALSE(is_single_emitter(0.5));
  CHECK_FALSE(is_single_emitter(0.8));
}

TEST_CASE("g2 fit recovers the ground truth under 1% noise") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const ThreeLevelFit f = fit_g2(synthetic_g2(0.2, 10.0, 200.0, 1000.0, 0.01, seed));
    CHECK(f.a == doctest::Approx(0.2).epsilon(0.05));
    CHECK(f.tau1_ns == doctest::Approx(10.0).epsilon(0.05));
    CHECK(f.tau2_ns == doctest::Approx(200.0).epsilon(0.05));
    CHECK(f.normalization == doctest::Approx(1000.0).epsilon(0.05));
    CHECK(f.single_emitter);
    CHECK(f.covariance.rows() == 4);
  }
}

TEST_CASE("g2 fit is invariant under count rescaling") {
  const G2Histogram h = synthetic_g2(0.35, 8.0, 150.0, 500.0, 0.01, 9);
  G2Histogram scaled = h;
  for (auto& b : scaled.bins) b.counts *= 37.5;
  const ThreeLevelFit a = fit_g2(h), b = fit_g2(scaled);
  CHECK(std::abs(b.a / a.a - 1.0) < 1e-6);
  CHECK(std::abs(b.tau1_ns / a.tau1_ns - 1.0) < 1e-6);
  CHECK(std::abs(b.tau2_ns / a.tau2_ns - 1.0) < 1e-6);
  CHECK(b.normalization == doctest::Approx(37.5 * a.normalization).epsilon(1e-6));
}

TEST_CASE("two-level data fits with vanishing bunching") {
  const ThreeLevelFit f = fit_g2(synthetic_g2(0.0, 10.0, 200.0, 1000.0, 0.01, 7));
  CHECK(f.a < 0.02);
  CHECK(f.g2_at_zero == doctest::Approx(0.0).epsilon(0.05));
  CHECK(f.tau1_ns == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("background correction sees a reduced contrast") {
  G2Histogram h = synthetic_g2(0.2, 10.0, 200.0, 1000.0, 0.005, 4);
  // Mix in 30% uncorrelated coincidences: counts = N (1 + 0.7 (g2 - 1)).
  for (auto& b : h.bins) b.counts = 0.7 * b.counts + 0.3 * 1000.0;
  G2FitOptions o;
  o.background_correction = true;
  const ThreeLevelFit f = fit_g2(h, o);
  CHECK(f.contrast == doctest::Approx(0.7).epsilon(0.05));
  CHECK(f.tau1_ns == doctest::Approx(10.0).epsilon(0.05));
  const ThreeLevelFit plain = fit_g2(h);
  CHECK(plain.g2_at_zero > 0.2);
}

TEST_CASE("degenerate histograms are rejected") {
  G2Histogram empty = synthetic_g2(0.2, 10, 200, 1000, 0.0, 1);
  for (auto& b : empty.bins) b.counts = 0.0;
  CHECK_THROWS_AS(fit_g2(empty), DegenerateDataError);
  G2Histogram one_sided = synthetic_g2(0.2, 10, 200, 1000, 0.0, 1);
  std::erase_if(one_sided.bins, [](const G2Bin& b) { return b.tau_ns < 0.0; });
  CHECK_THROWS_AS(fit_g2(one_sided), DegenerateDataError);
}

TEST_CASE("biexponential fit recovers both lifetimes under 1% noise") {
  const TimeTrace t = synthetic_trace(20000, 0.5, 10000, 18.0, 5.0, true, 11);
  const LifetimeFit f = fit_lifetime_biexp(t, {0.0, 190.0});
  CHECK(f.converged);
  CHECK(f.tau_fast_ns == doctest::Approx(0.5).epsilon(0.05));
  CHECK(f.tau_slow_ns == doctest::Approx(18.0).epsilon(0.05));
  CHECK(f.amplitude_slow == doctest::Approx(10000).epsilon(0.05));
  CHECK(f.fast_is_wire);
  CHECK_FALSE(f.short_window);
  CHECK(f.tau_slow_sigma() > 0.0);
}

TEST_CASE("short windows are flagged") {
  const TimeTrace t = synthetic_trace(0, 0.5, 10000, 18.0, 5.0, false, 1);
  CHECK(fit_lifetime_biexp(t, {0.0, 40.0}).short_window);
  CHECK_THROWS_AS(fit_lifetime_biexp(t, {0.0, 500.0}), DomainError);
}

TEST_CASE("lifetime ratios reproduce the tabulated enhancements") {
  for (double r : {1.23, 1.54, 1.28, 1.94, 1.61, 2.28}) {
    const LifetimeFit ref = fit_lifetime_biexp(synthetic_trace(500, 0.4, 1000, 20.0, 2, false, 1), {0, 190});
    const LifetimeFit cpl = fit_lifetime_biexp(synthetic_trace(500, 0.4, 1000, 20.0 / r, 2, false, 1), {0, 190});
    const EnhancementRatio e = enhancement_from_lifetimes(ref, cpl);
    CHECK(e.ratio == doctest::Approx(r).epsilon(1e-6));
  }
  const LifetimeFit a = fit_lifetime_biexp(synthetic_trace(0, 0.5, 1000, 12.3, 2, false, 1), {0, 190});
  const LifetimeFit b = fit_lifetime_biexp(synthetic_trace(800, 0.3, 1000, 10.0, 2, false, 1), {0, 190});
  CHECK(enhancement_from_lifetimes(a, b).ratio == doctest::Approx(1.23).epsilon(1e-6));
  LifetimeFit bad = b;
  bad.converged = false;
  CHECK_THROWS_AS(enhancement_from_lifetimes(a, bad), ComparabilityError);
}

TEST_CASE("ratio is invariant under a shared time rescaling") {
  auto stretched = [](TimeTrace t, double s) {
    for (auto& v : t.t_ns) v *= s;
    return t;
  };
  const TimeTrace ra = synthetic_trace(0, 0.5, 1000, 15.0, 2, false, 1);
  const TimeTrace rb = synthetic_trace(400, 0.4, 1000, 9.0, 2, false, 1);
  const double base = enhancement_from_lifetimes(fit_lifetime_biexp(ra, {0, 150}), fit_lifetime_biexp(rb, {0, 150})).ratio;
  LifetimeWindow w{0, 75, 100};
  const double half = enhancement_from_lifetimes(fit_lifetime_biexp(stretched(ra, 0.5), w),
                                                 fit_lifetime_biexp(stretched(rb, 0.5), w)).ratio;
  CHECK(half == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("CSV parsing converts units and validates rows") {
  std::istringstream ps("# comment\ntau_ps,counts\n-2000,5\n0,1\n2000,4\n");
  const G2Histogram h = parse_g2_csv(ps);
  REQUIRE(h.bins.size() == 3);
  CHECK(h.bins[0].tau_ns == doctest::Approx(-2.0));
  CHECK(h.bin_width_ns == doctest::Approx(2.0));
  std::istringstream us("t_us,counts\n0,5\n0.001,4\n");
  CHECK(parse_trace_csv(us).t_ns[1] == doctest::Approx(1.0));
  std::istringstream unit("tau_fs,counts\n0,1\n");
  CHECK_THROWS_AS(parse_g2_csv(unit), ConfigError);
  std::istringstream neg("tau_ns,counts\n0,-1\n");
  CHECK_THROWS_AS(parse_g2_csv(neg), ConfigError);
  std::istringstream order("tau_ns,counts\n1,1\n0,1\n");
  CHECK_THROWS_AS(parse_g2_csv(order), ConfigError);
  std::istringstream none("1,2\n");
  CHECK_THROWS_AS(parse_g2_csv(none), ConfigError);
}

TEST_CASE("shipped fixtures") {
  std::ifstream g2(std::string(AGWIRE_SOURCE_DIR) + "/data/g2_synthetic.csv");
  const ThreeLevelFit f = fit_g2(parse_g2_csv(g2));
  CHECK(f.single_emitter);
  CHECK(f.a == doctest::Approx(0.6).epsilon(0.05));
  CHECK(f.tau1_ns == doctest::Approx(12.0).epsilon(0.05));
  std::ifstream ref(std::string(AGWIRE_SOURCE_DIR) + "/data/lifetime_reference.csv");
  std::ifstream cpl(std::string(AGWIRE_SOURCE_DIR) + "/data/lifetime_coupled.csv");
  const LifetimeWindow w{1.0, 150.0};
  const EnhancementRatio e =
      enhancement_from_lifetimes(fit_lifetime_biexp(parse_trace_csv(ref), w), fit_lifetime_biexp(parse_trace_csv(cpl), w));
  CHECK(e.ratio == doctest::Approx(1.23).epsilon(0.01));
}
