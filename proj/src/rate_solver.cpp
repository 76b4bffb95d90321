#include "shb/rate_solver.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "shb/csv.hpp"
#include "shb/lorentzian.hpp"

namespace shb {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// (1 - exp(-x)) / x, continuous through x = 0.
double one_minus_exp_over(double x) {
  if (std::abs(x) < 1e-300) return 1.0;
  return -std::expm1(-x) / x;
}

Generator to_generator(const Eigen::Matrix3d& m) {
  Generator g{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) g[r][c] = m(r, c);
  return g;
}

// Per-bin propagators; a single entry applies to every bin.
using Propagators = std::vector<Generator>;

PopulationState apply(const PopulationState& state, const Propagators& props, double dt, unsigned workers) {
  PopulationState next = state;
  next.timestamp = state.timestamp + dt;
  const bool shared = props.size() == 1;
  parallel_for(state.ground.size(), workers, [&](std::size_t i) {
    const Generator& p = shared ? props.front() : props[i];
    const double n[3] = {state.ground[i], state.excited[i], state.bottleneck[i]};
    double out[3];
    for (int r = 0; r < 3; ++r) out[r] = p[r][0] * n[0] + p[r][1] * n[1] + p[r][2] * n[2];
    next.ground[i] = out[0];
    next.excited[i] = out[1];
    next.bottleneck[i] = out[2];
  });
  for (std::size_t i = 0; i < next.ground.size(); ++i) {
    if (!std::isfinite(next.ground[i]) || !std::isfinite(next.excited[i]) || !std::isfinite(next.bottleneck[i]))
      throw NonFiniteState("population became non-finite at bin " + std::to_string(i) + ", t = " +
                           fmt_num(next.timestamp) + " s");
  }
  return next;
}

Propagators burn_propagators(const SpectralArray& rate, const MaterialParams& material, double dt,
                             unsigned workers) {
  Propagators props(rate.size());
  parallel_for(rate.size(), workers,
               [&](std::size_t i) { props[i] = burn_propagator(rate[i], material, dt); });
  return props;
}

bool is_cycle_end(const std::vector<PulseSegment>& segs, std::size_t i) {
  if (i + 1 == segs.size()) return true;
  return segs[i].kind != SegmentKind::Burn && segs[i + 1].kind == SegmentKind::Burn;
}

} // namespace

PulseSegment PulseSegment::burn(double duration, const LaserParams& laser, PulseShape shape) {
  if (shape.duration == 0.0) shape.duration = duration;
  PulseSegment s;
  s.kind = SegmentKind::Burn;
  s.duration = duration;
  s.shape = std::move(shape);
  s.laser = laser;
  return s;
}

PulseSegment PulseSegment::wait(double duration) {
  PulseSegment s;
  s.kind = SegmentKind::Wait;
  s.duration = duration;
  return s;
}

std::vector<Violation> PulseSegment::violations() const {
  std::vector<Violation> v;
  if (!(duration > 0.0) || !std::isfinite(duration))
    v.push_back({"segment.duration", "duration must be finite and > 0, got " + fmt_num(duration)});
  if (substeps == 0) v.push_back({"segment.substeps", "substeps must be >= 1"});
  if (kind == SegmentKind::Burn) {
    auto more = shape.violations();
    v.insert(v.end(), more.begin(), more.end());
    more = laser.violations();
    v.insert(v.end(), more.begin(), more.end());
  }
  return v;
}

BurnSequence BurnSequence::repeated(const std::vector<PulseSegment>& cycle, std::size_t count,
                                    SnapshotPolicy policy) {
  BurnSequence seq;
  seq.snapshot_policy = policy;
  seq.segments.reserve(cycle.size() * count);
  for (std::size_t k = 0; k < count; ++k) seq.segments.insert(seq.segments.end(), cycle.begin(), cycle.end());
  return seq;
}

std::vector<Violation> BurnSequence::violations() const {
  std::vector<Violation> v;
  if (segments.empty()) v.push_back({"sequence", "sequence has no segments"});
  bool any_burn = false;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    any_burn = any_burn || segments[i].kind == SegmentKind::Burn;
    for (auto& x : segments[i].violations())
      v.push_back({"sequence[" + std::to_string(i) + "]." + x.field, x.constraint});
  }
  if (!segments.empty() && !any_burn) v.push_back({"sequence", "sequence contains no burn segment"});
  return v;
}

Generator rate_generator(double rate, const MaterialParams& m) {
  const double ke = 1.0 / m.excited_lifetime;
  const double kb = 1.0 / m.bottleneck_lifetime;
  const double z = m.branching_ratio;
  return Generator{{{-rate, rate + (1.0 - z) * ke, kb},
                    {rate, -rate - ke, 0.0},
                    {0.0, z * ke, -kb}}};
}

Generator relaxation_propagator(const MaterialParams& m, double dt) {
  const double ke = 1.0 / m.excited_lifetime;
  const double kb = 1.0 / m.bottleneck_lifetime;
  const double z = m.branching_ratio;
  const double pe = std::exp(-dt * ke);
  const double pb = std::exp(-dt * kb);
  // Bottleneck fed by the decaying excited level, integrated analytically.
  const double feed = z * ke * dt * pb * one_minus_exp_over((ke - kb) * dt);
  return Generator{{{1.0, 1.0 - pe - feed, 1.0 - pb},
                    {0.0, pe, 0.0},
                    {0.0, feed, pb}}};
}

Generator burn_propagator(double rate, const MaterialParams& m, double dt) {
  const Generator g = rate_generator(rate, m);
  Eigen::Matrix3d mat;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) mat(r, c) = g[r][c] * dt;
  return to_generator(mat.exp());
}

PopulationState propagate_segment(const PopulationState& state, const std::optional<SpectralArray>& rate,
                                  const MaterialParams& material, double dt, unsigned workers) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "dt must be finite and > 0, got " + fmt_num(dt));
  if (!rate) return apply(state, Propagators{relaxation_propagator(material, dt)}, dt, workers);
  require_same_grid(state.grid(), rate->grid, "excitation rate");
  if (rate->quantity != Quantity::Rate) throw InvalidParameter("R", "array is not tagged as a rate");
  return apply(state, burn_propagators(*rate, material, dt, workers), dt, workers);
}

HoleEvolution run_sequence(const BurnSequence& seq, const MaterialParams& material, const FrequencyGrid& grid,
                           const std::optional<PopulationState>& initial, const RunOptions& options) {
  std::vector<Violation> v = seq.violations();
  for (const auto& seg : seq.segments)
    if (seg.kind == SegmentKind::Burn) {
      try {
        validate(material, seg.laser, grid);
      } catch (const InvalidParameter& e) {
        v.insert(v.end(), e.violations().begin(), e.violations().end());
        break;
      }
    }
  throw_if_any(std::move(v));
  if (initial) {
    require_same_grid(grid, initial->grid(), "initial state");
    throw_if_any(initial->violations());
  }

  struct RateEntry {
    PulseShape shape;
    LaserParams laser;
    SpectralArray rate;
  };
  struct PropEntry {
    std::size_t rate_index;  // npos for waits
    double dt;
    Propagators props;
  };
  constexpr std::size_t no_rate = static_cast<std::size_t>(-1);
  std::vector<RateEntry> rates;
  std::vector<PropEntry> cache;

  auto rate_index = [&](const PulseSegment& seg) {
    for (std::size_t k = 0; k < rates.size(); ++k)
      if (rates[k].shape == seg.shape && rates[k].laser == seg.laser) return k;
    rates.push_back({seg.shape, seg.laser,
                     burn_excitation_rate(seg.shape, seg.laser, material, grid, options.sample_rate)});
    return rates.size() - 1;
  };
  auto propagators = [&](std::size_t ri, double dt) -> const Propagators& {
    for (const auto& e : cache)
      if (e.rate_index == ri && e.dt == dt) return e.props;
    Propagators p = ri == no_rate ? Propagators{relaxation_propagator(material, dt)}
                                  : burn_propagators(rates[ri].rate, material, dt, options.workers);
    cache.push_back({ri, dt, std::move(p)});
    return cache.back().props;
  };

  HoleEvolution evo;
  PopulationState state = initial ? *initial : PopulationState::all_ground(grid);
  auto snapshot = [&] {
    evo.times.push_back(state.timestamp);
    evo.od_spectra.push_back(to_optical_depth(state, material));
    evo.states.push_back(state);
  };
  if (seq.snapshot_policy != SnapshotPolicy::FinalOnly) snapshot();

  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    const auto& seg = seq.segments[i];
    const std::size_t ri = seg.kind == SegmentKind::Burn ? rate_index(seg) : no_rate;
    const double dt = seg.duration / static_cast<double>(seg.substeps);
    for (std::size_t k = 0; k < seg.substeps; ++k) {
      state = apply(state, propagators(ri, dt), dt, options.workers);
      if (seq.snapshot_policy == SnapshotPolicy::AfterEachSegment) snapshot();
    }
    if (seq.snapshot_policy == SnapshotPolicy::AfterEachCycle && is_cycle_end(seq.segments, i)) snapshot();
  }
  if (seq.snapshot_policy == SnapshotPolicy::FinalOnly) snapshot();
  evo.distinct_rates = rates.size();
  return evo;
}

SpectralArray to_optical_depth(const PopulationState& state, const MaterialParams& material) {
  require_same_grid(material.background_od.grid, state.grid(), "population state");
  SpectralArray od = SpectralArray::zeros(state.grid(), Quantity::OpticalDepth);
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = material.background_od[i] * state.ground[i];
  return od;
}

SpectralArray apply_diffusion_broadening(const SpectralArray& od, const SpectralArray& background,
                                         double added_fwhm) {
  require_same_grid(background.grid, od.grid, "optical depth");
  if (!(added_fwhm >= 0.0) || !std::isfinite(added_fwhm))
    throw InvalidParameter("added_fwhm", "added width must be finite and >= 0, got " + fmt_num(added_fwhm));
  if (added_fwhm == 0.0) return od;
  const double h = od.grid.spacing();
  if (added_fwhm < 2.0 * h)
    throw GridUnresolvable("added width " + fmt_num(added_fwhm) + " Hz is below two grid spacings (" +
                           fmt_num(2.0 * h) + " Hz)");

  std::vector<double> feature(od.size());
  double area = 0.0;
  for (std::size_t i = 0; i < od.size(); ++i) {
    feature[i] = background[i] - od[i];
    area += feature[i];
  }
  const std::array<LorentzianKernel, 1> kernel{LorentzianKernel{0.5 * added_fwhm, 0.0}};
  auto broadened = convolve_lorentzians(feature, h, kernel);
  double kept = 0.0;
  for (double x : broadened) kept += x;
  const double scale = kept != 0.0 ? area / kept : 1.0;

  SpectralArray out = SpectralArray::zeros(od.grid, Quantity::OpticalDepth);
  for (std::size_t i = 0; i < od.size(); ++i) out[i] = background[i] - scale * broadened[i];
  return out;
}

double hole_depth(const SpectralArray& od, const SpectralArray& background, double detuning) {
  require_same_grid(background.grid, od.grid, "optical depth");
  const std::size_t i = od.grid.nearest_bin(detuning);
  return background[i] - od[i];
}

void write_evolution_csv(const HoleEvolution& evo, const std::filesystem::path& directory) {
  std::vector<std::vector<std::string>> index;
  for (std::size_t s = 0; s < evo.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%04zu.csv", s);
    index.push_back({std::to_string(s), format_number(evo.times[s]), name});
    const auto& st = evo.states[s];
    write_csv_columns(directory / name, {"detuning_hz", "od", "n_g", "n_e", "n_b"},
                      {st.grid().detunings(), evo.od_spectra[s].values, st.ground.values, st.excited.values,
                       st.bottleneck.values});
  }
  write_csv(directory / "index.csv", {"snapshot", "time_s", "file"}, index);
}

} // namespace shb
