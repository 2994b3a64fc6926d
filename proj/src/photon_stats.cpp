// SPDX-License-Identifier: Apache-2.0
#include "agwire/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "agwire/errors.hpp"
#include "agwire/least_squares.hpp"

namespace agwire {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_spacing(const std::vector<double>& t) {
  std::vector<double> d;
  for (std::size_t i = 1; i < t.size(); ++i) d.push_back(t[i] - t[i - 1]);
  if (d.empty()) return 0.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

struct CsvColumns {
  std::vector<double> time_ns;
  std::vector<double> counts;
};

CsvColumns parse_two_columns(std::istream& in, const std::string& prefix) {
  std::string line;
  double scale = 0.0;
  CsvColumns out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (scale == 0.0) {
      const std::string counts_suffix = ",counts";
      if (line.size() <= prefix.size() + counts_suffix.size() || line.rfind(prefix, 0) != 0 ||
          line.substr(line.size() - counts_suffix.size()) != counts_suffix)
        throw ConfigError("line " + std::to_string(line_no),
                          "expected header '" + prefix + "<ps|ns|us>,counts', got '" + line + "'");
      const std::string unit =
          line.substr(prefix.size(), line.size() - prefix.size() - counts_suffix.size());
      if (unit == "ps") scale = 1e-3;
      else if (unit == "ns") scale = 1.0;
      else if (unit == "us") scale = 1e3;
      else throw ConfigError("line " + std::to_string(line_no), "unknown time unit '" + unit + "'");
      continue;
    }
    std::istringstream row(line);
    double t = 0.0, c = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> c) || comma != ',')
      throw ConfigError("line " + std::to_string(line_no), "malformed row '" + line + "'");
    if (c < 0.0) throw ConfigError("line " + std::to_string(line_no), "negative counts");
    if (!out.time_ns.empty() && t * scale <= out.time_ns.back())
      throw ConfigError("line " + std::to_string(line_no), "times must increase strictly");
    out.time_ns.push_back(t * scale);
    out.counts.push_back(c);
  }
  if (scale == 0.0) throw ConfigError("header", "missing header line");
  return out;
}

Eigen::MatrixXd rescaled(Eigen::MatrixXd cov, int index, double factor) {
  if (cov.size() == 0) return cov;
  cov.row(index) *= factor;
  cov.col(index) *= factor;
  return cov;
}

}  // namespace

double three_level_g2(double tau_ns, double a, double tau1_ns, double tau2_ns) {
  const double t = std::abs(tau_ns);
  return 1.0 - (1.0 + a) * std::exp(-t / tau1_ns) + a * std::exp(-t / tau2_ns);
}

bool is_single_emitter(double g2_at_zero) { return g2_at_zero < 0.5; }

ThreeLevelFit fit_g2(const G2Histogram& hist, const G2FitOptions& options) {
  const auto& bins = hist.bins;
  const bool negative = std::any_of(bins.begin(), bins.end(), [](const G2Bin& b) { return b.tau_ns < 0; });
  const bool positive = std::any_of(bins.begin(), bins.end(), [](const G2Bin& b) { return b.tau_ns > 0; });
  if (bins.size() < 20 || !negative || !positive)
    throw DegenerateDataError("g2 fit needs at least 20 bins on both sides of zero delay");
  if (std::all_of(bins.begin(), bins.end(), [](const G2Bin& b) { return b.counts == 0.0; }))
    throw DegenerateDataError("g2 histogram is empty");
  for (std::size_t i = 1; i < bins.size(); ++i)
    if (!(bins[i].tau_ns > bins[i - 1].tau_ns)) throw DegenerateDataError("g2 bins must be sorted");
  const double width = hist.bin_width_ns > 0.0 ? hist.bin_width_ns : [&] {
    std::vector<double> t;
    for (const G2Bin& b : bins) t.push_back(b.tau_ns);
    return median_spacing(t);
  }();

  // Normalise by the long-delay level so the fit is independent of the count scale.
  double tmax = 0.0;
  for (const G2Bin& b : bins) tmax = std::max(tmax, std::abs(b.tau_ns));
  double tail = 0.0;
  int tail_n = 0;
  for (const G2Bin& b : bins)
    if (std::abs(b.tau_ns) >= 0.8 * tmax) {
      tail += b.counts;
      ++tail_n;
    }
  double n0 = tail / tail_n;
  if (!(n0 > 0.0)) {
    n0 = 0.0;
    for (const G2Bin& b : bins) n0 += b.counts;
    n0 /= double(bins.size());
  }
  const int m = int(bins.size());
  Eigen::VectorXd tau(m), y(m);
  for (int i = 0; i < m; ++i) {
    tau[i] = bins[i].tau_ns;
    y[i] = bins[i].counts / n0;
  }

  // Initial values: dip depth and half width, overshoot height and its decay.
  int i_min = 0, i_max = 0;
  for (int i = 0; i < m; ++i) {
    if (std::abs(tau[i]) < std::abs(tau[i_min])) i_min = i;
    if (y[i] > y[i_max]) i_max = i;
  }
  const double y0 = y[i_min];
  const double overshoot = std::max(y[i_max] - 1.0, 0.0);
  double t_half = width;
  for (int i = 0; i < m; ++i)
    if (tau[i] > 0.0 && y[i] >= 0.5 * (y0 + 1.0)) {
      t_half = tau[i];
      break;
    }
  const double tau1_0 = std::max(t_half / std::log(2.0), width);
  double tau2_0 = 10.0 * tau1_0;
  if (overshoot > 0.0) {
    const double t_peak = std::abs(tau[i_max]);
    for (int i = 0; i < m; ++i)
      if (tau[i] > t_peak && y[i] - 1.0 < overshoot / std::exp(1.0)) {
        tau2_0 = std::max(tau[i] - t_peak, 2.0 * tau1_0);
        break;
      }
  }
  const double a0 = std::max(overshoot, 0.01);

  const bool bg = options.background_correction;
  const int np = bg ? 5 : 4;
  // Parameters (a, tau1, tau2 - tau1, normalization[, contrast]); the shelving decay is the slower one.
  LeastSquaresProblem prob;
  prob.lower = Eigen::VectorXd(np);
  prob.upper = Eigen::VectorXd(np);
  prob.lower.head(4) << 0.0, width, 0.0, 1e-6;
  prob.upper.head(4) << 1e3, 1e7, 1e7, 1e6;
  if (bg) {
    prob.lower[4] = 0.0;
    prob.upper[4] = 1.0;
  }
  prob.residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    const double a = p[0], t1 = p[1], t2 = p[1] + p[2], n = p[3], c = bg ? p[4] : 1.0;
    r.resize(m);
    if (J) J->resize(m, np);
    for (int i = 0; i < m; ++i) {
      const double t = std::abs(tau[i]);
      const double e1 = std::exp(-t / t1), e2 = std::exp(-t / t2);
      const double g = 1.0 - (1.0 + a) * e1 + a * e2;
      r[i] = n * (1.0 + c * (g - 1.0)) - y[i];
      if (J) {
        (*J)(i, 0) = n * c * (e2 - e1);
        (*J)(i, 2) = n * c * a * e2 * t / (t2 * t2);
        (*J)(i, 1) = -n * c * (1.0 + a) * e1 * t / (t1 * t1) + (*J)(i, 2);
        (*J)(i, 3) = 1.0 + c * (g - 1.0);
        if (bg) (*J)(i, 4) = n * (g - 1.0);
      }
    }
  };

  const double perturb[6][3] = {{1, 1, 1}, {0.5, 2, 1.5}, {2, 0.5, 0.5},
                                {1, 4, 1}, {1, 0.25, 2}, {0.7, 1.5, 3}};
  LeastSquaresResult best;
  int best_attempt = -1;
  const int attempts = 1 + std::clamp(options.max_restarts, 0, 5);
  std::ostringstream trace;
  for (int k = 0; k < attempts; ++k) {
    Eigen::VectorXd p0(np);
    const double t1 = tau1_0 * perturb[k][0];
    p0.head(4) << a0 * perturb[k][2], t1, std::max(tau2_0 * perturb[k][1] - t1, t1), 1.0;
    if (bg) p0[4] = std::clamp(1.0 - y0, 0.05, 1.0);
    LeastSquaresResult res = levenberg_marquardt(prob, p0);
    trace << "attempt " << k << ": cost " << res.cost << (res.converged ? " converged" : " stalled")
          << "; ";
    if (res.converged && (best_attempt < 0 || res.cost < best.cost)) {
      best = res;
      best_attempt = k;
    }
  }
  if (best_attempt < 0) throw FitError("g2 fit did not converge: " + trace.str());

  ThreeLevelFit f;
  f.a = best.params[0];
  f.tau1_ns = best.params[1];
  f.tau2_ns = best.params[1] + best.params[2];
  f.normalization = best.params[3] * n0;
  f.contrast = bg ? best.params[4] : 1.0;
  if (bg) {
    f.g2_at_zero = 1.0 - f.contrast;
  } else {
    // The plain model is pinned to zero at zero delay, so read the dip from the data.
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < m; ++i)
      if (std::abs(tau[i]) <= std::abs(tau[i_min]) + 1e-9 * width) {
        sum += y[i];
        ++count;
      }
    f.g2_at_zero = sum / count / best.params[3];
  }
  f.single_emitter = is_single_emitter(f.g2_at_zero);
  Eigen::MatrixXd to_tau2 = Eigen::MatrixXd::Identity(np, np);
  to_tau2(2, 1) = 1.0;
  f.covariance = rescaled(to_tau2 * best.covariance * to_tau2.transpose(), 3, n0);
  f.restarts_used = best_attempt;
  f.cost = best.cost;
  return f;
}

double LifetimeFit::tau_slow_sigma() const {
  if (covariance.rows() < 4) return kNaN;
  return std::sqrt(std::max(covariance(3, 3), 0.0));
}

LifetimeFit fit_lifetime_biexp(const TimeTrace& trace, const LifetimeWindow& window) {
  if (trace.t_ns.size() != trace.counts.size())
    throw DegenerateDataError("trace columns differ in length");
  if (!(window.end_ns > window.start_ns) || !(window.pulse_period_ns > 0.0) ||
      window.end_ns - window.start_ns > window.pulse_period_ns)
    throw DomainError("fit window must be nonempty and shorter than the pulse period");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < trace.t_ns.size(); ++i)
    if (trace.t_ns[i] >= window.start_ns && trace.t_ns[i] <= window.end_ns) {
      x.push_back(trace.t_ns[i] - window.start_ns);
      y.push_back(trace.counts[i]);
    }
  const int m = int(x.size());
  if (m < 10) throw DegenerateDataError("fewer than 10 samples inside the fit window");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }))
    throw DegenerateDataError("trace is empty");
  const double width = std::max(median_spacing(x), 1e-6);
  const double span = x.back() - x.front();

  // Background from the last tenth, slow decay from a log-linear fit of the second half,
  // fast decay from what the slow part leaves at early times.
  double b0 = 0.0;
  int nb = 0;
  for (int i = m - std::max(m / 10, 1); i < m; ++i, ++nb) b0 += y[i];
  b0 /= nb;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int ns = 0;
  for (int i = m / 4; i < m; ++i) {
    const double v = y[i] - 0.5 * b0;
    if (v <= 0.0) continue;
    sx += x[i];
    sy += std::log(v);
    sxx += x[i] * x[i];
    sxy += x[i] * std::log(v);
    ++ns;
  }
  double tau_s0 = span / 3.0, amp_s0 = std::max(y[0] - b0, 1.0);
  if (ns >= 3) {
    const double slope = (ns * sxy - sx * sy) / (ns * sxx - sx * sx);
    if (slope < 0.0) {
      tau_s0 = -1.0 / slope;
      amp_s0 = std::exp((sy - slope * sx) / ns);
    }
  }
  const double amp_f0 = std::max(y[0] - b0 * 0.5 - amp_s0, 0.0);
  const double tau_f0 = std::max(tau_s0 / 20.0, width);

  LeastSquaresProblem prob;
  prob.lower = Eigen::VectorXd(5);
  prob.upper = Eigen::VectorXd(5);
  prob.lower << 0.0, width, 0.0, width, 0.0;
  const double big = std::numeric_limits<double>::max();
  prob.upper << big, 1e6, big, 1e6, big;
  std::vector<double> w(m);
  for (int i = 0; i < m; ++i) w[i] = 1.0 / std::sqrt(std::max(y[i], 1.0));
  prob.residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(m);
    if (J) J->resize(m, 5);
    for (int i = 0; i < m; ++i) {
      const double ef = std::exp(-x[i] / p[1]), es = std::exp(-x[i] / p[3]);
      r[i] = w[i] * (p[0] * ef + p[2] * es + p[4] - y[i]);
      if (J) {
        (*J)(i, 0) = w[i] * ef;
        (*J)(i, 1) = w[i] * p[0] * ef * x[i] / (p[1] * p[1]);
        (*J)(i, 2) = w[i] * es;
        (*J)(i, 3) = w[i] * p[2] * es * x[i] / (p[3] * p[3]);
        (*J)(i, 4) = w[i];
      }
    }
  };
  const double perturb[6] = {1.0, 0.3, 3.0, 0.1, 10.0, 0.5};
  LeastSquaresResult best;
  bool found = false;
  std::ostringstream log;
  for (double f : perturb) {
    Eigen::VectorXd p0(5);
    p0 << std::max(amp_f0, 1e-3 * amp_s0), tau_f0 * f, amp_s0, tau_s0, b0 * 0.5;
    LeastSquaresResult res = levenberg_marquardt(prob, p0);
    log << "start tau_fast " << tau_f0 * f << ": cost " << res.cost
        << (res.converged ? " converged" : " stalled") << "; ";
    if (res.converged && (!found || res.cost < best.cost)) {
      best = res;
      found = true;
    }
  }
  if (!found) throw FitError("lifetime fit did not converge: " + log.str());

  Eigen::VectorXd p = best.params;
  Eigen::MatrixXd cov = best.covariance;
  if (p[1] > p[3]) {
    std::swap(p[0], p[2]);
    std::swap(p[1], p[3]);
    Eigen::PermutationMatrix<5> perm;
    perm.indices() << 2, 3, 0, 1, 4;
    if (cov.size() == 25) cov = perm * cov * perm.transpose();
  }

  // Nested single-exponential model. When the second component lowers chi^2 by less than
  // kSecondComponentChi2 the trace is treated as monoexponential.
  constexpr double kSecondComponentChi2 = 25.0;
  LeastSquaresProblem mono;
  mono.lower = Eigen::Vector3d(0.0, width, 0.0);
  mono.upper = Eigen::Vector3d(big, 1e6, big);
  mono.residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(m);
    if (J) J->resize(m, 3);
    for (int i = 0; i < m; ++i) {
      const double es = std::exp(-x[i] / q[1]);
      r[i] = w[i] * (q[0] * es + q[2] - y[i]);
      if (J) {
        (*J)(i, 0) = w[i] * es;
        (*J)(i, 1) = w[i] * q[0] * es * x[i] / (q[1] * q[1]);
        (*J)(i, 2) = w[i];
      }
    }
  };
  const LeastSquaresResult single =
      levenberg_marquardt(mono, Eigen::Vector3d(amp_s0, tau_s0, b0 * 0.5));
  if (single.converged && 2.0 * (single.cost - best.cost) < kSecondComponentChi2) {
    p << 0.0, 0.0, single.params[0], single.params[1], single.params[2];
    cov = Eigen::MatrixXd::Constant(5, 5, kNaN);
    if (single.covariance.size() == 9) {
      const int map[3] = {2, 3, 4};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) cov(map[i], map[j]) = single.covariance(i, j);
    }
    best.cost = single.cost;
  }
  LifetimeFit fit;
  fit.amplitude_fast = p[0];
  fit.tau_fast_ns = p[1];
  fit.amplitude_slow = p[2];
  fit.tau_slow_ns = p[3];
  fit.background = p[4];
  fit.covariance = cov;
  fit.converged = true;
  fit.cost = best.cost;
  fit.short_window = (window.end_ns - window.start_ns) < 3.0 * fit.tau_slow_ns;
  fit.fast_is_wire = fit.amplitude_fast > 0.0 && fit.tau_fast_ns < kWireFluorescenceLimitNs;
  return fit;
}

EnhancementRatio enhancement_from_lifetimes(const LifetimeFit& reference, const LifetimeFit& coupled) {
  if (!reference.converged || !coupled.converged)
    throw ComparabilityError("both lifetime fits must have converged");
  EnhancementRatio r;
  r.ratio = reference.tau_slow_ns / coupled.tau_slow_ns;
  const double a = reference.tau_slow_sigma() / reference.tau_slow_ns;
  const double b = coupled.tau_slow_sigma() / coupled.tau_slow_ns;
  r.sigma = r.ratio * std::sqrt(a * a + b * b);
  return r;
}

G2Histogram parse_g2_csv(std::istream& in) {
  const CsvColumns c = parse_two_columns(in, "tau_");
  G2Histogram h;
  for (std::size_t i = 0; i < c.time_ns.size(); ++i) h.bins.push_back({c.time_ns[i], c.counts[i]});
  h.bin_width_ns = median_spacing(c.time_ns);
  return h;
}

TimeTrace parse_trace_csv(std::istream& in) {
  CsvColumns c = parse_two_columns(in, "t_");
  return {std::move(c.time_ns), std::move(c.counts)};
}

G2Histogram synthetic_g2(double a, double tau1_ns, double tau2_ns, double normalization,
                         double relative_noise, std::uint64_t seed, double span_ns, double bin_ns) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  G2Histogram h;
  h.bin_width_ns = bin_ns;
  const int half = int(std::lround(span_ns / bin_ns));
  for (int i = -half; i <= half; ++i) {
    const double tau = i * bin_ns;
    const double expected = normalization * three_level_g2(tau, a, tau1_ns, tau2_ns);
    h.bins.push_back({tau, std::max(expected * (1.0 + relative_noise * noise(rng)), 0.0)});
  }
  return h;
}

TimeTrace synthetic_trace(double amplitude_fast, double tau_fast_ns, double amplitude_slow,
                          double tau_slow_ns, double background, bool shot_noise,
                          std::uint64_t seed, double length_ns, double bin_ns) {
  std::mt19937_64 rng(seed);
  TimeTrace t;
  const int n = int(std::lround(length_ns / bin_ns));
  for (int i = 0; i <= n; ++i) {
    const double time = i * bin_ns;
    double v = background + amplitude_slow * std::exp(-time / tau_slow_ns);
    if (amplitude_fast > 0.0) v += amplitude_fast * std::exp(-time / tau_fast_ns);
    if (shot_noise) v = double(std::poisson_distribution<long>(v)(rng));
    t.t_ns.push_back(time);
    t.counts.push_back(v);
  }
  return t;
}

namespace {
nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(std::isfinite(m(i, j)) ? nlohmann::json(m(i, j)) : nlohmann::json());
    rows.push_back(row);
  }
  return rows;
}
double sigma(const Eigen::MatrixXd& m, int i) {
  return i < m.rows() ? std::sqrt(std::max(m(i, i), 0.0)) : kNaN;
}
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
}  // namespace

nlohmann::json to_json(const ThreeLevelFit& f) {
  return {{"a", f.a},
          {"tau1_ns", f.tau1_ns},
          {"tau2_ns", f.tau2_ns},
          {"normalization", f.normalization},
          {"contrast", f.contrast},
          {"g2_at_zero", f.g2_at_zero},
          {"single_emitter", f.single_emitter},
          {"uncertainty",
           {{"a", num(sigma(f.covariance, 0))},
            {"tau1_ns", num(sigma(f.covariance, 1))},
            {"tau2_ns", num(sigma(f.covariance, 2))},
            {"normalization", num(sigma(f.covariance, 3))}}},
          {"covariance", matrix_json(f.covariance)},
          {"restarts_used", f.restarts_used}};
}

nlohmann::json to_json(const LifetimeFit& f) {
  return {{"tau_fast_ns", f.tau_fast_ns},
          {"tau_slow_ns", f.tau_slow_ns},
          {"amplitude_fast", f.amplitude_fast},
          {"amplitude_slow", f.amplitude_slow},
          {"background", f.background},
          {"uncertainty",
           {{"amplitude_fast", num(sigma(f.covariance, 0))},
            {"tau_fast_ns", num(sigma(f.covariance, 1))},
            {"amplitude_slow", num(sigma(f.covariance, 2))},
            {"tau_slow_ns", num(sigma(f.covariance, 3))},
            {"background", num(sigma(f.covariance, 4))}}},
          {"covariance", matrix_json(f.covariance)},
          {"converged", f.converged},
          {"short_window", f.short_window},
          {"fast_is_wire_fluorescence", f.fast_is_wire}};
}

}  // namespace agwire
