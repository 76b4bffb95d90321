#include "shb/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "shb/csv.hpp"

namespace shb {

namespace {

template <class T>
const T& require(const std::optional<T>& section, const char* name) {
  if (!section) throw InvalidParameter(name, std::string("section [") + name + "] is required for this command");
  return *section;
}

std::string kind_label(FeatureKind k) { return k == FeatureKind::Hole ? "hole" : "antihole"; }

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

std::vector<double> lin_spaced(double lo, double hi, std::size_t n) {
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

void write_widths(const std::filesystem::path& path, const std::vector<WidthPoint>& pts) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : pts)
    rows.push_back({format_number(p.t_delay), format_number(p.fwhm), p.sigma ? format_number(*p.sigma) : ""});
  write_csv(path, {"t_s", "fwhm_hz", "sigma_hz"}, rows);
}

std::vector<WidthPoint> read_widths(const std::filesystem::path& path) {
  const CsvData data = read_csv(path);
  const auto t = data.numeric_column("t_s");
  const auto w = data.numeric_column("fwhm_hz");
  std::vector<WidthPoint> out(t.size());
  bool has_sigma = false;
  for (const auto& h : data.header) has_sigma = has_sigma || h == "sigma_hz";
  std::vector<double> s;
  if (has_sigma) s = data.numeric_column("sigma_hz");
  for (std::size_t i = 0; i < t.size(); ++i) {
    out[i].t_delay = t[i];
    out[i].fwhm = w[i];
    if (has_sigma) out[i].sigma = s[i];
  }
  return out;
}

} // namespace

void cmd_holeburn(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& grid = require(cfg.grid, "grid");
  const auto& material = require(cfg.material, "material");
  const auto& laser = require(cfg.laser, "laser");
  const auto& seq = require(cfg.sequence, "sequence");
  validate(material, laser, grid);

  RunOptions opts;
  opts.sample_rate = cfg.burn_sample_rate;
  const HoleEvolution evo = run_sequence(seq, material, grid, std::nullopt, opts);
  const auto dir = ctx.out_dir / "holeburn";
  write_evolution_csv(evo, dir);

  std::vector<double> depths;
  for (const auto& od : evo.od_spectra) depths.push_back(hole_depth(od, material.background_od, laser.center_detuning));
  write_csv_columns(dir / "depth.csv", {"time_s", "hole_depth_od"}, {evo.times, depths});

  const double final_depth = depths.back();
  std::vector<std::vector<std::string>> rows{
      {"final_time", format_number(evo.times.back()), "s"},
      {"final_hole_depth", format_number(final_depth), "OD"},
  };
  try {
    const LorentzianFit fit = fit_lorentzian(evo.od_spectra.back());
    rows.push_back({"fwhm", format_number(fit.fwhm), "Hz"});
    rows.push_back({"center", format_number(fit.center), "Hz"});
    rows.push_back({"fit_converged", fit.converged ? "1" : "0", "flag"});
    *ctx.log << "final hole depth " << final_depth << " OD, FWHM " << fit.fwhm << " Hz\n";
  } catch (const NoFeatureFound& e) {
    rows.push_back({"fwhm", "nan", "Hz"});
    rows.push_back({"center", "nan", "Hz"});
    rows.push_back({"fit_converged", "0", "flag"});
    *ctx.diag << "no hole to fit: " << e.what() << "\n";
  }
  write_csv(dir / "summary.csv", {"quantity", "value", "unit"}, rows);
  *ctx.log << evo.size() << " snapshots written to " << dir.string() << "\n";
}

void cmd_pulse(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& setup = require(cfg.pulse, "pulse");
  const auto dir = ctx.out_dir / "pulse";
  // Synthesize everything before writing anything, so a bad pulse leaves no partial output.
  std::vector<SampledWaveform> waves;
  std::vector<SpectralArray> spectra;
  for (const auto& p : setup.pulses) {
    waves.push_back(synthesize(p.shape, setup.sample_rate));
    spectra.push_back(power_spectrum(waves.back(), setup.spectrum_grid));
  }

  std::vector<std::vector<std::string>> table;
  for (std::size_t k = 0; k < setup.pulses.size(); ++k) {
    const auto& p = setup.pulses[k];
    const auto& w = waves[k];
    std::vector<double> t(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) t[i] = w.time(i);
    write_csv_columns(dir / ("waveform_" + p.name + ".csv"), {"t_s", "amplitude", "freq_hz"},
                      {t, w.amplitude, w.instantaneous_frequency});
    std::vector<double> offsets(setup.spectrum_grid.bin_count);
    for (std::size_t i = 0; i < offsets.size(); ++i) offsets[i] = setup.spectrum_grid.offset(i);
    write_csv_columns(dir / ("spectrum_" + p.name + ".csv"), {"offset_hz", "power_rel"}, {offsets, spectra[k].values});

    const double bw = p.shape.chirp_bandwidth();
    const double suppression = bw > 0.0 ? out_of_band_suppression_db(w, bw) : std::nan("");
    std::string notes;
    for (const auto& a : p.shape.advisories()) {
      *ctx.diag << "advisory (" << p.name << "): " << a << "\n";
      notes += (notes.empty() ? "" : "; ") + a;
    }
    table.push_back({p.name, std::string(p.shape.kind_name()), format_number(bw), format_number(p.shape.duration),
                     format_number(suppression), notes.empty() ? "" : "\"" + notes + "\""});
    *ctx.log << p.name << ": " << w.size() << " samples, out-of-band power " << suppression << " dB\n";
  }
  write_csv(dir / "comparison.csv",
            {"name", "kind", "chirp_bandwidth_hz", "duration_s", "out_of_band_db", "advisory"}, table);
}

void cmd_zeeman(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& spin = require(cfg.spin, "spin");
  const auto& z = require(cfg.zeeman, "zeeman");
  const auto dir = ctx.out_dir / "zeeman";

  std::vector<std::vector<std::string>> sweep;
  for (double b : lin_spaced(z.field_start, z.field_stop, z.points)) {
    const auto preds = predict_shift_split(b * z.direction, z.delta_field * z.direction, spin, cfg.classes);
    for (const auto& p : preds)
      sweep.push_back({std::string(to_string(p.label)), format_number(b), format_number(p.center_shift),
                       format_number(p.splitting)});
  }
  write_csv(dir / "shift_split.csv", {"class", "B_T", "center_shift_hz", "splitting_hz"}, sweep);
  *ctx.log << "shift/split sweep: " << sweep.size() << " rows\n";

  if (z.pattern_field) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<std::string>> levels;
    for (const auto& site : cfg.classes) {
      const auto d = splittings(*z.pattern_field * z.direction, site, spin);
      levels.push_back({std::string(to_string(site.label)), format_number(*z.pattern_field), format_number(d.ground),
                        format_number(d.excited)});
      for (const auto& f : hole_pattern(d.ground, d.excited, z.branch_weights).features)
        rows.push_back({std::string(to_string(site.label)), format_number(f.offset), kind_label(f.kind),
                        format_number(f.strength * site.population_weight)});
    }
    write_csv(dir / "splittings.csv", {"class", "B_T", "ground_splitting_hz", "excited_splitting_hz"}, levels);
    write_csv(dir / "hole_pattern.csv", {"class", "offset_hz", "kind", "strength_rel"}, rows);
    *ctx.log << "hole pattern at " << *z.pattern_field << " T: " << rows.size() << " features\n";
  }
}

void cmd_diffusion(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& d = require(cfg.diffusion, "diffusion");
  const double k = d.tensor_norm ? *d.tensor_norm : tensor_difference_norm(*cfg.spin);
  const auto dir = ctx.out_dir / "diffusion";

  struct Series {
    double field;
    std::vector<WidthPoint> points;
  };
  std::vector<Series> series;
  if (d.mode == DiffusionSetup::Mode::Synthetic) {
    if (d.fields.empty()) throw InsufficientData("no fields configured for the synthetic series");
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sigma = d.noise_fraction * d.truth.gamma_0;
    const auto delays = log_spaced(d.delay_min, d.delay_max, d.delay_points);
    for (std::size_t i = 0; i < d.fields.size(); ++i) {
      DiffusionModel m = d.truth;
      const double b = d.fields[i];
      m.gamma_sd = gamma_sd_of_bt(b, m.temperature, m.g_env, gamma_max_of_b(b, m, k));
      Series s{b, {}};
      for (double t : delays) {
        WidthPoint p{t, hole_width_model(t, m), std::nullopt};
        if (sigma > 0.0) {
          p.fwhm += sigma * normal(rng);
          p.sigma = sigma;
        }
        s.points.push_back(p);
      }
      write_widths(dir / ("widths_" + std::to_string(i) + ".csv"), s.points);
      series.push_back(std::move(s));
    }
  } else {
    for (const auto& f : d.series) series.push_back({f.field, read_widths(f.path)});
  }

  std::ostringstream report;
  report << std::setprecision(6);
  std::vector<std::vector<std::string>> rows;
  std::vector<FieldPoint> field_points;
  for (const auto& s : series) {
    try {
      const DiffusionFit fit = fit_diffusion_timeseries(s.points);
      rows.push_back({format_number(s.field), format_number(fit.gamma_0), format_number(fit.sigma_gamma_0()),
                      format_number(fit.gamma_sd), format_number(fit.sigma_gamma_sd()), format_number(fit.rate_rs),
                      format_number(fit.sigma_rate_rs()), "ok"});
      field_points.push_back({s.field, fit.gamma_sd, fit.sigma_gamma_sd() > 0.0 ? std::optional(fit.sigma_gamma_sd()) : std::nullopt});
      report << "B = " << s.field << " T\n"
             << "  gamma_0   " << fit.gamma_0 << " +/- " << fit.sigma_gamma_0() << " Hz\n"
             << "  gamma_sd  " << fit.gamma_sd << " +/- " << fit.sigma_gamma_sd() << " Hz\n"
             << "  rate_rs   " << fit.rate_rs << " +/- " << fit.sigma_rate_rs() << " 1/s\n";
    } catch (const DegenerateFit& e) {
      if (ctx.strict) throw;
      *ctx.diag << "B = " << s.field << " T skipped: " << e.what() << "\n";
      report << "B = " << s.field << " T\n  degenerate: " << e.what() << "\n";
      rows.push_back({format_number(s.field), "", "", "", "", "", "", "degenerate"});
    }
  }
  write_csv(dir / "fits.csv",
            {"B_T", "gamma_0_hz", "gamma_0_sigma_hz", "gamma_sd_hz", "gamma_sd_sigma_hz", "rate_rs_per_s",
             "rate_rs_sigma_per_s", "status"},
            rows);

  // Any missing sigma makes the field fit unweighted.
  if (field_points.size() >= 3) {
    std::optional<SechFactor> sech;
    if (d.truth.g_env > 0.0) sech = SechFactor{d.truth.g_env, d.truth.temperature};
    const BNoiseFit bn = fit_bnoise(field_points, k, sech);
    report << "field dependence (K = " << k << " Hz/T^2)\n"
           << "  gamma_max0 " << bn.gamma_max0 << " +/- " << bn.gamma_max0_sigma << " Hz\n";
    if (bn.b_noise)
      report << "  b_noise    " << *bn.b_noise * 1e6 << " +/- " << bn.b_noise_sigma * 1e6 << " uT\n";
    for (const auto& w : bn.warnings) {
      report << "  warning: " << w << "\n";
      *ctx.diag << "warning: " << w << "\n";
    }
    write_csv(dir / "bnoise.csv", {"parameter", "value", "uncertainty", "unit"},
              {{"b_noise", bn.b_noise ? format_number(*bn.b_noise) : "", format_number(bn.b_noise_sigma), "T"},
               {"gamma_max0", format_number(bn.gamma_max0), format_number(bn.gamma_max0_sigma), "Hz"},
               {"slope", format_number(bn.slope), "", "Hz/T"}});
  } else {
    report << "field dependence not fitted: " << field_points.size() << " usable field(s), need 3\n";
  }

  if (d.mode == DiffusionSetup::Mode::Synthetic) {
    report << "generating parameters: gamma_0 " << d.truth.gamma_0 << " Hz, rate_rs " << d.truth.rate_rs
           << " 1/s, b_noise " << d.truth.b_noise * 1e6 << " uT, gamma_max0 " << d.truth.gamma_max0 << " Hz\n";
  }
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.txt", std::ios::binary) << report.str();
  *ctx.log << report.str();
}

void cmd_dipolar(const ExperimentConfig& cfg, const CommandContext& ctx) {
  const auto& d = require(cfg.dipolar, "dipolar");
  const auto table = species_table(d.species, d.geometric_factor);
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : table) {
    rows.push_back({e.species.name, format_number(e.species.concentration), format_number(e.species.g_eff),
                    format_number(e.species.avg_distance * 1e10), format_number(e.field), e.dominant ? "1" : "0"});
    *ctx.log << e.species.name << ": " << e.field * 1e6 << " uT" << (e.dominant ? " (dominant)" : "") << "\n";
  }
  write_csv(ctx.out_dir / "dipolar" / "species.csv",
            {"name", "concentration", "g_eff", "r_angstrom", "field_T", "dominant"}, rows);
}

int run_command(const CommandRequest& request, std::ostream& log, std::ostream& diag) {
  try {
    const ExperimentConfig cfg = load_config(request.config);
    CommandContext ctx;
    ctx.out_dir = request.out_dir ? *request.out_dir : cfg.output.value_or("shb_out");
    ctx.seed = request.seed ? *request.seed : cfg.seed.value_or(0);
    ctx.strict = request.strict;
    ctx.log = &log;
    ctx.diag = &diag;

    if (request.command == "holeburn")
      cmd_holeburn(cfg, ctx);
    else if (request.command == "pulse")
      cmd_pulse(cfg, ctx);
    else if (request.command == "zeeman")
      cmd_zeeman(cfg, ctx);
    else if (request.command == "diffusion")
      cmd_diffusion(cfg, ctx);
    else if (request.command == "dipolar")
      cmd_dipolar(cfg, ctx);
    else
      throw InvalidParameter("command", "unknown command '" + std::string(request.command) + "'");
    return exit_ok;
  } catch (const Error& e) {
    diag << "error: " << e.what() << "\n";
    return e.category() == ErrorCategory::Validation ? exit_validation : exit_numeric;
  } catch (const std::filesystem::filesystem_error& e) {
    diag << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return exit_numeric;
  }
}

} // namespace shb
