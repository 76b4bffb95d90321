#include "shb/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace shb {

namespace {

// Typed access to one TOML table that records every problem instead of
// stopping at the first, and flags keys nobody asked about.
class Section {
public:
  Section(const toml::table& table, std::string prefix, std::vector<Violation>& out,
          std::initializer_list<std::string_view> allowed)
      : table_(table), prefix_(std::move(prefix)), out_(out) {
    const std::set<std::string_view> ok(allowed);
    for (const auto& [key, node] : table_) {
      (void)node;
      if (!ok.count(key.str())) out_.push_back({field(key.str()), "unknown key"});
    }
  }

  std::string field(std::string_view key) const { return prefix_ + "." + std::string(key); }
  bool has(std::string_view key) const { return table_.contains(key); }
  void fail(std::string_view key, std::string msg) { out_.push_back({field(key), std::move(msg)}); }

  std::optional<double> number(std::string_view key) {
    const auto* node = table_.get(key);
    if (!node) return std::nullopt;
    if (auto v = node->value<double>(); v && (node->is_integer() || node->is_floating_point())) return *v;
    fail(key, "expected a number");
    return std::nullopt;
  }
  double number_or(std::string_view key, double fallback) { return number(key).value_or(fallback); }
  double required_number(std::string_view key) {
    if (!has(key)) {
      fail(key, "required key is missing");
      return 0.0;
    }
    return number(key).value_or(0.0);
  }

  std::optional<std::int64_t> integer(std::string_view key) {
    const auto* node = table_.get(key);
    if (!node) return std::nullopt;
    if (auto v = node->value_exact<std::int64_t>()) return *v;
    fail(key, "expected an integer");
    return std::nullopt;
  }
  std::size_t count_or(std::string_view key, std::size_t fallback, std::int64_t minimum) {
    auto v = integer(key);
    if (!v) return fallback;
    if (*v < minimum) {
      fail(key, "must be >= " + std::to_string(minimum));
      return fallback;
    }
    return static_cast<std::size_t>(*v);
  }

  std::optional<std::string> string(std::string_view key) {
    const auto* node = table_.get(key);
    if (!node) return std::nullopt;
    if (auto v = node->value_exact<std::string>()) return *v;
    fail(key, "expected a string");
    return std::nullopt;
  }

  std::optional<std::vector<double>> numbers(std::string_view key, std::optional<std::size_t> length = {}) {
    const auto* node = table_.get(key);
    if (!node) return std::nullopt;
    const auto* arr = node->as_array();
    std::vector<double> out;
    if (arr) {
      for (const auto& e : *arr) {
        auto v = e.value<double>();
        if (!v || !(e.is_integer() || e.is_floating_point())) {
          arr = nullptr;
          break;
        }
        out.push_back(*v);
      }
    }
    if (!arr || (length && out.size() != *length)) {
      fail(key, length ? "expected an array of " + std::to_string(*length) + " numbers" : "expected an array of numbers");
      return std::nullopt;
    }
    return out;
  }

  std::optional<Eigen::Vector3d> vector3(std::string_view key) {
    auto v = numbers(key, 3);
    if (!v) return std::nullopt;
    return Eigen::Vector3d((*v)[0], (*v)[1], (*v)[2]);
  }

  std::optional<Eigen::Matrix3d> matrix3(std::string_view key) {
    const auto* node = table_.get(key);
    if (!node) return std::nullopt;
    Eigen::Matrix3d m;
    const auto* rows = node->as_array();
    bool ok = rows && rows->size() == 3;
    for (std::size_t r = 0; ok && r < 3; ++r) {
      const auto* row = (*rows)[r].as_array();
      ok = row && row->size() == 3;
      for (std::size_t c = 0; ok && c < 3; ++c) {
        auto v = (*row)[c].value<double>();
        ok = v.has_value();
        if (ok) m(static_cast<int>(r), static_cast<int>(c)) = *v;
      }
    }
    if (!ok) {
      fail(key, "expected a 3x3 array of numbers");
      return std::nullopt;
    }
    return m;
  }

  const toml::table* subtable(std::string_view key) {
    const auto* node = table_.get(key);
    if (!node) return nullptr;
    if (const auto* t = node->as_table()) return t;
    fail(key, "expected a table");
    return nullptr;
  }

  std::vector<const toml::table*> table_array(std::string_view key) {
    std::vector<const toml::table*> out;
    const auto* node = table_.get(key);
    if (!node) return out;
    const auto* arr = node->as_array();
    if (arr)
      for (const auto& e : *arr) {
        if (const auto* t = e.as_table())
          out.push_back(t);
        else
          arr = nullptr;
      }
    if (!arr) {
      fail(key, "expected an array of tables");
      out.clear();
    }
    return out;
  }

private:
  const toml::table& table_;
  std::string prefix_;
  std::vector<Violation>& out_;
};

void append_prefixed(std::vector<Violation>& into, const std::vector<Violation>& more, const std::string& prefix = {}) {
  for (const auto& v : more) into.push_back({prefix + v.field, v.constraint});
}

FrequencyGrid read_grid(Section& s) {
  FrequencyGrid g;
  g.center_detuning = s.number_or("center", 0.0);
  g.span = s.required_number("span");
  g.bin_count = s.count_or("bins", 0, 3);
  if (!s.has("bins")) s.fail("bins", "required key is missing");
  return g;
}

// Reads the shape keys shared by burn segments and standalone pulses.
std::optional<PulseShape> read_shape(Section& s, std::string_view kind_key, double duration) {
  PulseShape shape;
  shape.duration = duration;
  const std::string kind = s.string(kind_key).value_or("rectangular");
  const double bandwidth = s.number_or("chirp_bandwidth", 0.0);
  if (kind == "rectangular") {
    shape.form = Rectangular{};
    if (s.has("chirp_bandwidth")) s.fail("chirp_bandwidth", "not used by rectangular pulses");
  } else if (kind == "hyperbolic_secant") {
    HyperbolicSecant hs;
    hs.chirp_bandwidth = bandwidth;
    hs.steepness = s.number("steepness");
    hs.truncation = s.number_or("truncation", hs.truncation);
    shape.form = hs;
  } else if (kind == "linear_chirp") {
    shape.form = LinearChirp{bandwidth};
  } else {
    s.fail(kind_key, "unknown pulse kind '" + kind + "' (rectangular, hyperbolic_secant, linear_chirp)");
    return std::nullopt;
  }
  if (!std::holds_alternative<HyperbolicSecant>(shape.form))
    for (auto key : {"steepness", "truncation"})
      if (s.has(key)) s.fail(key, "only used by hyperbolic_secant pulses");
  return shape;
}

std::optional<BurnSequence> read_sequence(const toml::table& t, const LaserParams& laser,
                                          std::optional<double>& sample_rate, std::vector<Violation>& v) {
  Section s(t, "sequence", v, {"snapshot", "repeat", "sample_rate", "segment"});
  BurnSequence seq;
  const std::string policy = s.string("snapshot").value_or("after_each_cycle");
  if (policy == "after_each_cycle")
    seq.snapshot_policy = SnapshotPolicy::AfterEachCycle;
  else if (policy == "after_each_segment")
    seq.snapshot_policy = SnapshotPolicy::AfterEachSegment;
  else if (policy == "final_only")
    seq.snapshot_policy = SnapshotPolicy::FinalOnly;
  else
    s.fail("snapshot", "expected after_each_cycle, after_each_segment or final_only");
  const std::size_t repeat = s.count_or("repeat", 1, 1);
  sample_rate = s.number("sample_rate");

  std::vector<PulseSegment> cycle;
  const auto segs = s.table_array("segment");
  if (segs.empty()) s.fail("segment", "at least one [[sequence.segment]] is required");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::size_t before = v.size();
    Section g(*segs[i], "sequence.segment[" + std::to_string(i) + "]", v,
              {"kind", "duration", "substeps", "shape", "shape_duration", "chirp_bandwidth", "steepness",
               "truncation", "peak_rate_amplitude", "rate_amplitude", "center"});
    const std::string kind = g.string("kind").value_or("");
    const double duration = g.required_number("duration");
    PulseSegment seg;
    if (kind == "burn") {
      LaserParams l = laser;
      l.rate_amplitude = g.number_or("rate_amplitude", l.rate_amplitude);
      l.center_detuning = g.number_or("center", l.center_detuning);
      auto shape = read_shape(g, "shape", g.number_or("shape_duration", duration));
      if (shape) {
        shape->peak_rate_amplitude = g.number("peak_rate_amplitude");
        seg = PulseSegment::burn(duration, l, *shape);
      }
    } else if (kind == "wait") {
      for (auto key : {"shape", "shape_duration", "chirp_bandwidth", "steepness", "truncation",
                       "peak_rate_amplitude", "rate_amplitude", "center"})
        if (g.has(key)) g.fail(key, "not used by wait segments");
      seg = PulseSegment::wait(duration);
    } else {
      g.fail("kind", "expected \"burn\" or \"wait\"");
    }
    seg.substeps = g.count_or("substeps", 1, 1);
    if (v.size() == before) append_prefixed(v, seg.violations(), "sequence.segment[" + std::to_string(i) + "].");
    cycle.push_back(seg);
  }
  seq = BurnSequence::repeated(cycle, repeat, seq.snapshot_policy);
  if (!cycle.empty()) {
    bool any_burn = false;
    for (const auto& c : cycle) any_burn = any_burn || c.kind == SegmentKind::Burn;
    if (!any_burn) s.fail("segment", "sequence contains no burn segment");
  }
  return seq;
}

SpinModel read_spin(Section& s) {
  SpinModel m;
  m.g_j_ground = s.required_number("g_j_ground");
  m.g_j_excited = s.required_number("g_j_excited");
  m.a_j_ground = s.required_number("a_j_ground");
  m.a_j_excited = s.required_number("a_j_excited");
  m.gamma_ground = s.vector3("gamma_ground").value_or(Eigen::Vector3d::Zero());
  m.gamma_excited = s.vector3("gamma_excited").value_or(Eigen::Vector3d::Zero());
  for (auto key : {"gamma_ground", "gamma_excited"})
    if (!s.has(key)) s.fail(key, "required key is missing");
  m.gamma_n = s.number_or("gamma_n", 0.0);
  auto lg = s.matrix3("lambda_ground");
  auto le = s.matrix3("lambda_excited");
  const bool derivable = m.a_j_ground != 0.0 && m.a_j_excited != 0.0;
  m.lambda_ground = lg ? *lg : (derivable ? quadratic_tensor_from_gyromagnetic(Level::Ground, m) : Eigen::Matrix3d::Zero());
  m.lambda_excited = le ? *le : (derivable ? quadratic_tensor_from_gyromagnetic(Level::Excited, m) : Eigen::Matrix3d::Zero());
  for (const auto& x : m.violations()) s.fail(x.field.substr(x.field.find('.') + 1), x.constraint);
  if (m.a_j_ground == 0.0 && s.has("a_j_ground")) s.fail("a_j_ground", "hyperfine constant must be non-zero");
  if (m.a_j_excited == 0.0 && s.has("a_j_excited")) s.fail("a_j_excited", "hyperfine constant must be non-zero");
  return m;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " (line " << e.source().begin.line << ", column " << e.source().begin.column << ")";
    throw InvalidParameter("config", "TOML syntax error: " + os.str());
  }

  ExperimentConfig cfg;
  std::vector<Violation> v;
  Section top(root, "config", v,
              {"seed", "output", "grid", "material", "laser", "sequence", "pulse", "spin", "classes", "zeeman",
               "diffusion", "dipolar"});
  if (auto seed = top.integer("seed")) {
    if (*seed < 0)
      top.fail("seed", "must be >= 0");
    else
      cfg.seed = static_cast<std::uint64_t>(*seed);
  }
  if (auto out = top.string("output")) cfg.output = base_dir / *out;

  if (const auto* t = top.subtable("grid")) {
    Section s(*t, "grid", v, {"center", "span", "bins"});
    cfg.grid = read_grid(s);
    append_prefixed(v, cfg.grid->violations());
  }

  if (const auto* t = top.subtable("material")) {
    Section s(*t, "material", v,
              {"excited_lifetime", "bottleneck_lifetime", "zeta", "homogeneous_linewidth", "background_od"});
    MaterialParams m;
    m.excited_lifetime = s.number_or("excited_lifetime", m.excited_lifetime);
    m.bottleneck_lifetime = s.number_or("bottleneck_lifetime", m.bottleneck_lifetime);
    if (auto z = s.number("zeta")) m.branching_ratio = *z;
    m.homogeneous_linewidth = s.number_or("homogeneous_linewidth", m.homogeneous_linewidth);
    const double d0 = s.number_or("background_od", 1.0);
    if (cfg.grid)
      m.background_od = SpectralArray::constant(*cfg.grid, d0, Quantity::OpticalDepth);
    else
      v.push_back({"material", "a [grid] section is required to place the background optical depth"});
    if (cfg.grid && cfg.grid->violations().empty()) append_prefixed(v, m.violations());
    else if (std::isnan(m.branching_ratio)) v.push_back({"material.zeta", "branching ratio is required (no default)"});
    cfg.material = m;
  }

  if (const auto* t = top.subtable("laser")) {
    Section s(*t, "laser", v, {"linewidth", "rate_amplitude", "center"});
    LaserParams l;
    l.linewidth = s.number_or("linewidth", l.linewidth);
    l.rate_amplitude = s.required_number("rate_amplitude");
    l.center_detuning = s.number_or("center", cfg.grid ? cfg.grid->center_detuning : 0.0);
    append_prefixed(v, l.violations());
    cfg.laser = l;
  }

  if (const auto* t = top.subtable("sequence")) {
    if (!cfg.laser) v.push_back({"sequence", "a [laser] section is required for burn segments"});
    std::optional<double> rate;
    cfg.sequence = read_sequence(*t, cfg.laser.value_or(LaserParams{}), rate, v);
    cfg.burn_sample_rate = rate;
  }

  if (const auto* t = top.subtable("pulse")) {
    Section s(*t, "pulse", v, {"sample_rate", "spectrum_span", "spectrum_bins", "shape"});
    PulseSetup p;
    p.sample_rate = s.required_number("sample_rate");
    p.spectrum_grid = FrequencyGrid{0.0, s.required_number("spectrum_span"), s.count_or("spectrum_bins", 1001, 3)};
    append_prefixed(v, p.spectrum_grid.violations(), "pulse.spectrum_");
    const auto shapes = s.table_array("shape");
    if (shapes.empty()) s.fail("shape", "at least one [[pulse.shape]] is required");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const std::string prefix = "pulse.shape[" + std::to_string(i) + "]";
      Section g(*shapes[i], prefix, v,
                {"name", "kind", "duration", "chirp_bandwidth", "steepness", "truncation"});
      NamedPulse np;
      np.name = g.string("name").value_or("pulse" + std::to_string(i));
      const double duration = g.required_number("duration");
      if (!g.has("kind")) g.fail("kind", "required key is missing");
      if (auto shape = read_shape(g, "kind", duration)) {
        np.shape = *shape;
        append_prefixed(v, np.shape.violations(), prefix + ".");
      }
      for (const auto& other : p.pulses)
        if (other.name == np.name) g.fail("name", "duplicate pulse name '" + np.name + "'");
      p.pulses.push_back(np);
    }
    cfg.pulse = p;
  }

  if (const auto* t = top.subtable("spin")) {
    Section s(*t, "spin", v,
              {"g_j_ground", "g_j_excited", "a_j_ground", "a_j_excited", "gamma_ground", "gamma_excited", "gamma_n",
               "lambda_ground", "lambda_excited"});
    cfg.spin = read_spin(s);
  }

  if (top.has("classes")) {
    cfg.classes.clear();
    const auto tables = top.table_array("classes");
    for (std::size_t i = 0; i < tables.size(); ++i) {
      Section s(*tables[i], "classes[" + std::to_string(i) + "]", v, {"label", "rotation", "weight"});
      SiteClass c;
      const std::string label = s.string("label").value_or("");
      if (label == "ClassXZ")
        c.label = SiteLabel::ClassXZ;
      else if (label == "ClassYZ")
        c.label = SiteLabel::ClassYZ;
      else
        s.fail("label", "expected ClassXZ or ClassYZ");
      const auto defaults = default_site_classes();
      c.rotation = s.matrix3("rotation").value_or(defaults[c.label == SiteLabel::ClassXZ ? 0 : 1].rotation);
      c.population_weight = s.number_or("weight", 1.0 / static_cast<double>(tables.size()));
      cfg.classes.push_back(c);
    }
    append_prefixed(v, class_set_violations(cfg.classes));
  }

  if (const auto* t = top.subtable("zeeman")) {
    Section s(*t, "zeeman", v,
              {"direction", "field_start", "field_stop", "points", "delta_field", "pattern_field", "branch_weights"});
    ZeemanSetup z;
    z.direction = s.vector3("direction").value_or(z.direction);
    if (!(z.direction.norm() > 0.0) || !z.direction.allFinite())
      s.fail("direction", "must be a finite non-zero vector");
    else
      z.direction.normalize();
    z.field_start = s.number_or("field_start", z.field_start);
    z.field_stop = s.number_or("field_stop", z.field_stop);
    z.points = s.count_or("points", z.points, 1);
    z.delta_field = s.number_or("delta_field", z.delta_field);
    z.pattern_field = s.number("pattern_field");
    if (auto w = s.numbers("branch_weights", 2)) z.branch_weights = BranchWeights{(*w)[0], (*w)[1]};
    if (!(z.field_start >= 0.0 && z.field_stop >= z.field_start)) s.fail("field_stop", "need 0 <= field_start <= field_stop");
    if (z.pattern_field && !(*z.pattern_field >= 0.0)) s.fail("pattern_field", "must be >= 0");
    if (!(z.branch_weights.preserving >= 0.0 && z.branch_weights.flipping >= 0.0 &&
          z.branch_weights.preserving + z.branch_weights.flipping > 0.0))
      s.fail("branch_weights", "weights must be >= 0 with a positive sum");
    if (!cfg.spin) v.push_back({"zeeman", "a [spin] section is required"});
    cfg.zeeman = z;
  }

  if (const auto* t = top.subtable("diffusion")) {
    Section s(*t, "diffusion", v,
              {"mode", "gamma_0", "gamma_max0", "rate_rs", "b_noise", "g_env", "temperature", "tensor_norm", "fields",
               "delay_min", "delay_max", "delay_points", "noise_fraction", "series"});
    DiffusionSetup d;
    const std::string mode = s.string("mode").value_or("synthetic");
    if (mode == "synthetic")
      d.mode = DiffusionSetup::Mode::Synthetic;
    else if (mode == "measured")
      d.mode = DiffusionSetup::Mode::Measured;
    else
      s.fail("mode", "expected synthetic or measured");
    d.truth.gamma_0 = s.number_or("gamma_0", 0.0);
    d.truth.gamma_max0 = s.number_or("gamma_max0", 0.0);
    d.truth.rate_rs = s.number_or("rate_rs", 0.0);
    d.truth.b_noise = s.number_or("b_noise", 0.0);
    d.truth.g_env = s.number_or("g_env", 0.0);
    d.truth.temperature = s.number_or("temperature", 1.0);
    d.tensor_norm = s.number("tensor_norm");
    d.fields = s.numbers("fields").value_or(std::vector<double>{});
    d.delay_min = s.number_or("delay_min", d.delay_min);
    d.delay_max = s.number_or("delay_max", d.delay_max);
    d.delay_points = s.count_or("delay_points", d.delay_points, 1);
    d.noise_fraction = s.number_or("noise_fraction", d.noise_fraction);
    for (const auto& x : d.truth.violations()) v.push_back(x);
    if (!(d.truth.temperature > 0.0)) s.fail("temperature", "must be > 0");
    if (d.tensor_norm && !(*d.tensor_norm > 0.0)) s.fail("tensor_norm", "must be > 0");
    if (!d.tensor_norm && !cfg.spin) s.fail("tensor_norm", "required when no [spin] section provides the tensors");
    if (!(d.noise_fraction >= 0.0)) s.fail("noise_fraction", "must be >= 0");
    if (d.mode == DiffusionSetup::Mode::Synthetic) {
      if (!(d.delay_min > 0.0 && d.delay_max > d.delay_min)) s.fail("delay_max", "need 0 < delay_min < delay_max");
      for (auto key : {"gamma_0", "rate_rs", "b_noise"})
        if (!s.has(key)) s.fail(key, "required in synthetic mode");
      for (double b : d.fields)
        if (!(b >= 0.0)) s.fail("fields", "fields must be >= 0");
    } else {
      for (auto key : {"gamma_0", "gamma_max0", "rate_rs", "b_noise", "fields", "delay_min", "delay_max",
                       "delay_points", "noise_fraction"})
        if (s.has(key)) s.fail(key, "only used in synthetic mode");
    }
    const auto series = s.table_array("series");
    for (std::size_t i = 0; i < series.size(); ++i) {
      Section g(*series[i], "diffusion.series[" + std::to_string(i) + "]", v, {"field", "path"});
      WidthSeriesFile f;
      f.field = g.required_number("field");
      if (auto p = g.string("path"))
        f.path = base_dir / *p;
      else
        g.fail("path", "required key is missing");
      d.series.push_back(f);
    }
    if (d.mode == DiffusionSetup::Mode::Measured && series.empty())
      s.fail("series", "measured mode needs at least one [[diffusion.series]]");
    if (d.mode == DiffusionSetup::Mode::Synthetic && !series.empty())
      s.fail("series", "only used in measured mode");
    cfg.diffusion = d;
  }

  if (const auto* t = top.subtable("dipolar")) {
    Section s(*t, "dipolar", v, {"geometric_factor", "species"});
    DipolarSetup d;
    d.geometric_factor = s.number_or("geometric_factor", 1.0);
    if (!(d.geometric_factor >= 0.0)) s.fail("geometric_factor", "must be >= 0");
    const auto tables = s.table_array("species");
    for (std::size_t i = 0; i < tables.size(); ++i) {
      Section g(*tables[i], "dipolar.species[" + std::to_string(i) + "]", v,
                {"name", "concentration", "g_eff", "distance_angstrom"});
      SpinSpecies sp;
      sp.name = g.string("name").value_or("species" + std::to_string(i));
      sp.concentration = g.required_number("concentration");
      sp.g_eff = g.required_number("g_eff");
      sp.avg_distance = g.required_number("distance_angstrom") * 1e-10;
      append_prefixed(v, sp.violations());
      d.species.push_back(sp);
    }
    cfg.dipolar = d;
  }

  throw_if_any(std::move(v));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

} // namespace shb
