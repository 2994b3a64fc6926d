// SPDX-License-Identifier: Apache-2.0
#include "agwire/solver.hpp"

#include <omp.h>
#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <fstream>

#include "agwire/errors.hpp"
#include "agwire/hash.hpp"

namespace agwire {
namespace {

constexpr double kSiToSolverFrequency = 1e-9 / kSpeedOfLight;  // rad/s -> rad per (nm/c)

// Fields far from the source decay through the subnormal range during the ramp and in the
// absorber, where arithmetic becomes two orders of magnitude slower. Flush them to zero on
// the worker threads and, for the duration of a step, on the calling thread.
class FlushSubnormals {
 public:
  explicit FlushSubnormals(int threads) {
#if defined(__SSE__)
    saved_ = _mm_getcsr();
    if (threads > 1) {
#pragma omp parallel num_threads(threads)
      _mm_setcsr(_mm_getcsr() | 0x8040);
    }
    _mm_setcsr(saved_ | 0x8040);
#else
    (void)threads;
#endif
  }
  ~FlushSubnormals() {
#if defined(__SSE__)
    _mm_setcsr(saved_);
#endif
  }
  FlushSubnormals(const FlushSubnormals&) = delete;
  FlushSubnormals& operator=(const FlushSubnormals&) = delete;

 private:
  unsigned saved_ = 0;
};

double ramp(double t, double duration) {
  if (t >= duration) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * t / duration));
}

}  // namespace

void validate(const DipoleSource& s) {
  if (!(s.wavelength_nm > 0.0)) throw DomainError("source wavelength must be positive");
  if (!(s.amplitude >= 0.0) || !std::isfinite(s.amplitude))
    throw DomainError("source amplitude must be finite and nonnegative");
  if (std::abs(norm(s.orientation) - 1.0) > 1e-9)
    throw DomainError("source orientation must be a unit vector");
}

nlohmann::json to_json(const SolverSettings& s) {
  return {{"courant", s.courant},
          {"ramp_periods", s.ramp_periods},
          {"max_periods", s.max_periods},
          {"convergence",
           {{"window_periods", s.convergence.window_periods},
            {"threshold", s.convergence.threshold}}},
          {"pml",
           {{"order", s.pml.order},
            {"sigma_scale", s.pml.sigma_scale},
            {"kappa_max", s.pml.kappa_max},
            {"alpha_scale", s.pml.alpha_scale}}}};
}

nlohmann::json to_json(const RunReport& r) {
  return {{"steps", r.steps},
          {"steps_per_period", r.steps_per_period},
          {"metric_history", r.metric_history},
          {"converged", r.converged},
          {"wall_seconds", r.wall_seconds}};
}

RunReport run_report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.steps = j.at("steps").get<long>();
  r.steps_per_period = j.at("steps_per_period").get<int>();
  for (const auto& m : j.at("metric_history"))
    r.metric_history.push_back(m.is_null() ? std::numeric_limits<double>::quiet_NaN() : m.get<double>());
  r.converged = j.at("converged").get<bool>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

bool FieldState::finite() const {
  for (const auto* group : {&e, &h})
    for (const auto& v : *group) {
      bool ok = true;
      const std::ptrdiff_t n = std::ptrdiff_t(v.size());
#pragma omp parallel for reduction(&& : ok)
      for (std::ptrdiff_t i = 0; i < n; ++i) ok = ok && std::isfinite(v[i]);
      if (!ok) return false;
    }
  return true;
}

Simulation::Simulation(const Scene& scene, const GridSpec& grid, const DipoleSource& source,
                       const SolverSettings& settings)
    : Simulation(rasterize(scene, grid, source.wavelength_nm, settings.threads), source,
                 settings) {}

Simulation::Simulation(RasterGrid raster, const DipoleSource& source,
                       const SolverSettings& settings)
    : raster_(std::move(raster)), source_(source), settings_(settings) {
  setup();
}

void Simulation::setup() {
  validate(source_);
  validate(raster_.grid);
  if (!(settings_.courant > 0.0 && settings_.courant <= 0.5))
    throw DomainError("Courant factor must lie in (0, 0.5]");
  if (settings_.ramp_periods < 1 || settings_.max_periods <= settings_.ramp_periods)
    throw DomainError("step cap must exceed the ramp");
  if (settings_.convergence.window_periods < 1 || !(settings_.convergence.threshold > 0.0))
    throw DomainError("invalid convergence settings");

  const GridSpec& g = raster_.grid;
  const double h = g.spacing_nm;
  omega_ = 2.0 * kPi / source_.wavelength_nm;
  const double dt_max = settings_.courant * h / std::sqrt(3.0);
  steps_per_period_ = int(std::ceil(source_.wavelength_nm / dt_max));
  dt_ = source_.wavelength_nm / steps_per_period_;
  threads_ = settings_.threads > 0 ? settings_.threads : omp_get_max_threads();

  const Lattice lat(g);
  state_.lattice = lat;
  for (int a = 0; a < 3; ++a) {
    state_.e[a].assign(lat.size(), 0.0f);
    state_.h[a].assign(lat.size(), 0.0f);
  }

  // Update coefficients. Edges outside the update range keep a zero coefficient.
  for (int a = 0; a < 3; ++a) {
    ce_[a].assign(lat.size(), 0.0f);
    const IndexRange r = e_update_range(lat, a);
    for (int i = r.lo[0]; i <= r.hi[0]; ++i)
      for (int j = r.lo[1]; j <= r.hi[1]; ++j)
        for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
          const std::size_t n = lat.index(i, j, k);
          const std::uint8_t id = raster_.material[a][n];
          double eps = 0.0;
          if (id == kAveragedMaterial) {
            eps = raster_.eps[a][n];
          } else {
            const MaterialModel& m = raster_.models[id];
            if (m.kind == MaterialKind::PerfectConductor) continue;
            eps = m.dispersive() ? m.eps_infinity : double(raster_.eps[a][n]);
          }
          ce_[a][n] = float(dt_ / (eps * h));
        }
  }

  std::size_t slots = 0, max_poles = 0;
  for (std::size_t id = 0; id < raster_.models.size(); ++id) {
    const MaterialModel& m = raster_.models[id];
    if (!m.dispersive()) continue;
    DispersiveGroup grp;
    grp.inv_eps_inf = 1.0 / m.eps_infinity;
    for (const LorentzPole& p : m.poles) {
      const double w0 = p.resonance * kSiToSolverFrequency;
      const double gam = p.damping * kSiToSolverFrequency;
      const double str = p.strength * kSiToSolverFrequency * kSiToSolverFrequency;
      const double denom = 1.0 + 0.5 * gam * dt_;
      grp.poles.push_back({(2.0 - w0 * w0 * dt_ * dt_) / denom,
                           -(1.0 - 0.5 * gam * dt_) / denom, str * dt_ * dt_ / denom});
    }
    for (int a = 0; a < 3; ++a) {
      const IndexRange r = e_update_range(lat, a);
      for (int i = r.lo[0]; i <= r.hi[0]; ++i)
        for (int j = r.lo[1]; j <= r.hi[1]; ++j)
          for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
            const std::size_t n = lat.index(i, j, k);
            if (raster_.material[a][n] == id) grp.edges[a].push_back(std::uint32_t(n));
          }
    }
    grp.slot_offset = slots;
    slots += grp.slot_count();
    max_poles = std::max(max_poles, grp.poles.size());
    if (grp.slot_count() > 0) dispersive_.push_back(std::move(grp));
  }
  state_.polarization.assign(slots * max_poles, 0.0);
  state_.polarization_prev.assign(slots * max_poles, 0.0);
  pol_stride_ = slots;

  build_profiles();
  const int A = g.absorber_cells;
  if (A > 0)
    for (int a = 0; a < 3; ++a) {
      state_.pml.emplace_back(lat, a, 0, A);
      state_.pml.emplace_back(lat, a, lat.cells(a) - A, lat.cells(a));
    }
  build_source();
}

void Simulation::build_profiles() {
  const GridSpec& g = raster_.grid;
  const double h = g.spacing_nm;
  const int A = g.absorber_cells;
  const PmlSettings& p = settings_.pml;
  const double sigma_max = p.sigma_scale * 0.8 * (p.order + 1) / h;
  const double alpha_max = p.alpha_scale * omega_;
  auto coefficients = [&](double pos, int n, float& b, float& c, float& kinv) {
    double depth = 0.0;
    if (A > 0) depth = std::max({double(A) - pos, pos - double(n - A), 0.0}) / A;
    const double sigma = sigma_max * std::pow(depth, p.order);
    const double kappa = 1.0 + (p.kappa_max - 1.0) * std::pow(depth, p.order);
    const double alpha = depth > 0.0 ? alpha_max * (1.0 - depth) : 0.0;
    const double bb = std::exp(-(sigma / kappa + alpha) * dt_);
    const double cc = sigma > 0.0 ? sigma * (bb - 1.0) / (sigma * kappa + kappa * kappa * alpha) : 0.0;
    b = float(bb);
    c = float(cc);
    kinv = float(1.0 / kappa - 1.0);
  };
  for (int a = 0; a < 3; ++a) {
    const int n = g.cells[a];
    PmlProfile& pr = profiles_[a];
    pr.b_int.resize(n + 1);
    pr.c_int.resize(n + 1);
    pr.kinv_int.resize(n + 1);
    pr.b_half.resize(n);
    pr.c_half.resize(n);
    pr.kinv_half.resize(n);
    for (int u = 0; u <= n; ++u) coefficients(u, n, pr.b_int[u], pr.c_int[u], pr.kinv_int[u]);
    for (int u = 0; u < n; ++u)
      coefficients(u + 0.5, n, pr.b_half[u], pr.c_half[u], pr.kinv_half[u]);
  }
}

void Simulation::build_source() {
  const GridSpec& g = raster_.grid;
  const Lattice lat(g);
  const double h = g.spacing_nm;
  const Box3 inner = g.interior();
  if (!inner.contains(source_.position))
    throw DomainError("source lies outside the absorber-free interior");
  std::vector<FieldSample> samples;
  for (int a = 0; a < 3; ++a) {
    const double o = source_.orientation[a];
    if (o == 0.0) continue;
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    for (int b = 0; b < 3; ++b) {
      const double f = source_.position[b] / h - g.origin[b] - (b == a ? 0.5 : 0.0);
      double fl = std::floor(f);
      double t = f - fl;
      if (t > 1.0 - 1e-12) {
        fl += 1.0;
        t = 0.0;
      } else if (t < 1e-12) {
        t = 0.0;
      }
      base[b] = int(fl);
      frac[b] = t;
    }
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      std::array<int, 3> node = base;
      for (int b = 0; b < 3; ++b) {
        const bool up = (corner >> b) & 1;
        w *= up ? frac[b] : 1.0 - frac[b];
        node[b] += up ? 1 : 0;
      }
      if (w == 0.0) continue;
      const std::size_t n = lat.index(node[0], node[1], node[2]);
      const float ce = ce_[a][n];
      if (ce == 0.0f) continue;
      const double weight = o * w;
      const double coef = double(ce) * h * source_.amplitude * weight / (h * h * h);
      source_edges_.push_back({a, n, weight, float(coef)});
      samples.push_back({std::uint8_t(a), node, n});
    }
  }
  source_monitor_ = state_.monitors.size();
  state_.monitors.push_back(make_point_monitor("source", std::move(samples), h));
}

const PhasorMonitor& Simulation::add_monitor(const MonitorSpec& spec) {
  if (state_.step != 0) throw MonitorPlacementError("monitors must be registered before stepping");
  PhasorMonitor m = std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxMonitorSpec>)
          return make_box_monitor(s, raster_);
        else
          return make_plane_monitor(s, raster_);
      },
      spec);
  for (const PhasorMonitor& other : state_.monitors)
    if (other.name == m.name) throw MonitorPlacementError("duplicate monitor name '" + m.name + "'");
  state_.monitors.push_back(std::move(m));
  return state_.monitors.back();
}

const PhasorMonitor& Simulation::monitor(const std::string& name) const {
  for (const PhasorMonitor& m : state_.monitors)
    if (m.name == name) return m;
  throw MonitorPlacementError("no monitor named '" + name + "'");
}

KernelContext Simulation::context() {
  KernelContext c;
  c.lat = state_.lattice;
  c.ch = float(dt_ / raster_.grid.spacing_nm);
  for (int a = 0; a < 3; ++a) {
    c.ce[a] = ce_[a].data();
    c.e[a] = state_.e[a].data();
    c.h[a] = state_.h[a].data();
  }
  c.profiles = &profiles_;
  c.slabs = &state_.pml;
  c.dispersive = dispersive_.empty() ? nullptr : &dispersive_;
  c.pol = state_.polarization.data();
  c.pol_prev = state_.polarization_prev.data();
  c.pol_stride = pol_stride_;
  c.threads = threads_;
  return c;
}

void Simulation::accumulate(bool electric, double t) {
  const cplx phase = std::polar(1.0, omega_ * t);
  for (PhasorMonitor& m : state_.monitors) {
    auto& samples = electric ? m.e_samples : m.h_samples;
    auto& acc = electric ? m.e_acc : m.h_acc;
    const auto& field = electric ? state_.e : state_.h;
    for (std::size_t s = 0; s < samples.size(); ++s)
      acc[s] += double(field[samples[s].comp][samples[s].index]) * phase;
  }
}

void Simulation::close_period() {
  const double scale = 2.0 / steps_per_period_;
  for (PhasorMonitor& m : state_.monitors) {
    for (std::size_t s = 0; s < m.e_acc.size(); ++s) {
      m.e_phasor[s] = m.e_acc[s] * scale;
      m.e_acc[s] = 0.0;
    }
    for (std::size_t s = 0; s < m.h_acc.size(); ++s) {
      m.h_phasor[s] = m.h_acc[s] * scale;
      m.h_acc[s] = 0.0;
    }
  }
}

void Simulation::step() {
  const FlushSubnormals guard(threads_);
  KernelContext c = context();
  const bool serial = settings_.kernel == KernelVariant::Serial;
  const double t_half = (double(state_.step) + 0.5) * dt_;

  serial ? kernels::serial::advance_h(c) : kernels::parallel::advance_h(c);
  accumulate(false, t_half);

  serial ? kernels::serial::advance_e(c) : kernels::parallel::advance_e(c);
  const double drive = ramp(t_half, settings_.ramp_periods * source_.wavelength_nm) *
                       std::cos(omega_ * t_half);
  for (const SourceEdge& s : source_edges_)
    state_.e[s.comp][s.index] -= float(double(s.coefficient) * drive);

  ++state_.step;
  accumulate(true, double(state_.step) * dt_);
  if (state_.step % steps_per_period_ == 0) close_period();
}

double Simulation::source_power() const {
  const PhasorMonitor& m = state_.monitors[source_monitor_];
  double sum = 0.0;
  for (std::size_t s = 0; s < source_edges_.size(); ++s)
    sum += source_edges_[s].weight * m.e_phasor[s].real();
  return -0.5 * source_.amplitude * sum;
}

double Simulation::free_space_power(double amplitude, double wavelength_nm, double index) {
  const double w = 2.0 * kPi / wavelength_nm;
  return index * w * w * amplitude * amplitude / (12.0 * kPi);
}

RunReport Simulation::run_cw() {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.steps_per_period = steps_per_period_;
  std::vector<double> previous;
  int settled = 0;
  for (;;) {
    for (int s = 0; s < steps_per_period_; ++s) step();
    const long period = state_.step / steps_per_period_;
    if (!state_.finite())
      throw InstabilityError("non-finite field values by step " + std::to_string(state_.step),
                             state_.step);
    if (period >= settings_.ramp_periods) {
      std::vector<double> powers{source_power()};
      for (const PhasorMonitor& m : state_.monitors)
        if (!m.pairs.empty()) powers.push_back(m.flux());
      double scale = 0.0;
      for (double p : powers) scale = std::max(scale, std::abs(p));
      if (!std::isfinite(scale))
        throw InstabilityError("non-finite monitor power at step " + std::to_string(state_.step),
                               state_.step);
      if (!previous.empty()) {
        double change = 0.0;
        for (std::size_t i = 0; i < powers.size(); ++i)
          change = std::max(change, std::abs(powers[i] - previous[i]) / (scale > 0 ? scale : 1.0));
        if (scale == 0.0) change = 0.0;
        report.metric_history.push_back(change);
        settled = change < settings_.convergence.threshold ? settled + 1 : 0;
        if (settled >= settings_.convergence.window_periods) {
          report.converged = true;
          break;
        }
      }
      previous = std::move(powers);
    }
    if (period >= settings_.max_periods) break;
  }
  report.steps = state_.step;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void Simulation::write_checkpoint(const std::filesystem::path& stem) const {
  std::filesystem::path bin = stem, meta = stem;
  bin += ".bin";
  meta += ".json";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error("cannot write " + bin.string());
  for (const auto* group : {&state_.e, &state_.h})
    for (const auto& v : *group)
      out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(float)));
  const GridSpec& g = raster_.grid;
  nlohmann::json j = {
      {"tool_version", kToolVersion},
      {"layout", "float32 little-endian arrays E_x, E_y, E_z, H_x, H_y, H_z; node (i, j, k) at "
                 "offset (i * (ny + 1) + j) * (nz + 1) + k"},
      {"grid",
       {{"spacing_nm", g.spacing_nm},
        {"cells", g.cells},
        {"absorber_cells", g.absorber_cells},
        {"origin", g.origin}}},
      {"source",
       {{"position_nm", {source_.position.x, source_.position.y, source_.position.z}},
        {"orientation", {source_.orientation.x, source_.orientation.y, source_.orientation.z}},
        {"wavelength_nm", source_.wavelength_nm},
        {"amplitude", source_.amplitude}}},
      {"step", state_.step},
      {"dt", dt_}};
  std::ofstream(meta) << j.dump(2) << '\n';
}

}  // namespace agwire
