#include "shb/zeeman.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "shb/constants.hpp"
#include "shb/core.hpp"

namespace shb {

namespace {

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void check_tensor(std::vector<Violation>& v, const Eigen::Matrix3d& t, const std::string& field) {
  if (!finite(t)) {
    v.push_back({field, "tensor entries must be finite"});
    return;
  }
  const double scale = std::max(t.cwiseAbs().maxCoeff(), 1e-300);
  if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    v.push_back({field, "tensor must be symmetric"});
}

} // namespace

std::vector<Violation> SpinModel::violations() const {
  std::vector<Violation> v;
  if (!std::isfinite(g_j_ground)) v.push_back({"spin.g_j_ground", "must be finite"});
  if (!std::isfinite(g_j_excited)) v.push_back({"spin.g_j_excited", "must be finite"});
  if (!std::isfinite(a_j_ground)) v.push_back({"spin.a_j_ground", "must be finite"});
  if (!std::isfinite(a_j_excited)) v.push_back({"spin.a_j_excited", "must be finite"});
  if (!gamma_ground.allFinite()) v.push_back({"spin.gamma_ground", "gyromagnetic ratios must be finite"});
  if (!gamma_excited.allFinite()) v.push_back({"spin.gamma_excited", "gyromagnetic ratios must be finite"});
  if (!std::isfinite(gamma_n)) v.push_back({"spin.gamma_n", "must be finite"});
  check_tensor(v, lambda_ground, "spin.lambda_ground");
  check_tensor(v, lambda_excited, "spin.lambda_excited");
  return v;
}

std::string_view to_string(SiteLabel label) {
  return label == SiteLabel::ClassXZ ? "ClassXZ" : "ClassYZ";
}

std::vector<Violation> SiteClass::violations() const {
  std::vector<Violation> v;
  const std::string field = "classes." + std::string(to_string(label));
  if (!rotation.allFinite() ||
      (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10)
    v.push_back({field + ".rotation", "rotation must be orthonormal within 1e-10"});
  if (!(population_weight >= 0.0) || !std::isfinite(population_weight))
    v.push_back({field + ".weight", "population weight must be finite and >= 0"});
  return v;
}

std::vector<SiteClass> default_site_classes() {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix3d xz;
  xz << 0, r, r,
        0, -r, r,
        1, 0, 0;
  Eigen::Matrix3d yz;
  yz << 0, r, -r,
        0, r, r,
        1, 0, 0;
  return {SiteClass{SiteLabel::ClassXZ, xz, 0.5}, SiteClass{SiteLabel::ClassYZ, yz, 0.5}};
}

std::vector<Violation> class_set_violations(const std::vector<SiteClass>& classes) {
  std::vector<Violation> v;
  if (classes.empty()) v.push_back({"classes", "at least one site class is required"});
  double total = 0.0;
  for (const auto& c : classes) {
    auto more = c.violations();
    v.insert(v.end(), more.begin(), more.end());
    total += c.population_weight;
  }
  if (!classes.empty() && std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "class weights must sum to 1, got " << total;
    v.push_back({"classes", os.str()});
  }
  return v;
}

Eigen::Vector3d project_field(const Eigen::Vector3d& b_crystal, const SiteClass& site) {
  return site.rotation * b_crystal;
}

double level_shift_dj(const Eigen::Vector3d& b_local, Level level, const SpinModel& model) {
  const bool ground = level == Level::Ground;
  const double a = ground ? model.a_j_ground : model.a_j_excited;
  if (a == 0.0)
    throw ZeroHyperfineConstant(std::string(ground ? "ground" : "excited") + " level has A_J = 0");
  const double g = ground ? model.g_j_ground : model.g_j_excited;
  const Eigen::Vector3d& gamma = ground ? model.gamma_ground : model.gamma_excited;
  const double prefactor = g * constants::bohr_magneton_hz_per_tesla / (2.0 * a);
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) sum += (gamma[k] - model.gamma_n) * b_local[k] * b_local[k];
  return prefactor * sum;
}

double transition_shift(const Eigen::Vector3d& b_crystal, const SiteClass& site, const SpinModel& model) {
  const Eigen::Vector3d b = project_field(b_crystal, site);
  return level_shift_dj(b, Level::Excited, model) - level_shift_dj(b, Level::Ground, model);
}

double tensor_transition_shift(const Eigen::Vector3d& b_crystal, const SiteClass& site, const SpinModel& model) {
  const Eigen::Vector3d b = project_field(b_crystal, site);
  return b.dot((model.lambda_excited - model.lambda_ground) * b);
}

Eigen::Matrix3d quadratic_tensor_from_gyromagnetic(Level level, const SpinModel& model) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d axis = Eigen::Vector3d::Zero();
    axis[k] = 1.0;
    t(k, k) = level_shift_dj(axis, level, model);
  }
  return t;
}

double tensor_difference_norm(const SpinModel& model) {
  const Eigen::Matrix3d diff = model.lambda_excited - model.lambda_ground;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(diff);
  return svd.singularValues()(0);
}

LevelSplittings splittings(const Eigen::Vector3d& b_crystal, const SiteClass& site, const SpinModel& model) {
  const Eigen::Vector3d b = project_field(b_crystal, site);
  return LevelSplittings{model.gamma_ground.cwiseProduct(b).norm(), model.gamma_excited.cwiseProduct(b).norm()};
}

std::vector<ShiftSplit> predict_shift_split(const Eigen::Vector3d& b_initial, const Eigen::Vector3d& delta_b,
                                            const SpinModel& model, const std::vector<SiteClass>& classes) {
  std::vector<ShiftSplit> out;
  out.reserve(classes.size());
  const Eigen::Vector3d b_final = b_initial + delta_b;
  for (const auto& site : classes) {
    const double shift = transition_shift(b_final, site, model) - transition_shift(b_initial, site, model);
    const auto before = splittings(b_initial, site, model);
    const auto after = splittings(b_final, site, model);
    const double split = std::abs((after.excited - before.excited) - (after.ground - before.ground));
    out.push_back({site.label, shift, split});
  }
  return out;
}

double HolePattern::total(FeatureKind kind) const {
  double s = 0.0;
  for (const auto& f : features)
    if (f.kind == kind) s += f.strength;
  return s;
}

HolePattern hole_pattern(double d_ground, double d_excited, const BranchWeights& weights) {
  std::vector<Violation> v;
  if (!(d_ground >= 0.0) || !std::isfinite(d_ground)) v.push_back({"D_g", "ground splitting must be finite and >= 0"});
  if (!(d_excited >= 0.0) || !std::isfinite(d_excited)) v.push_back({"D_e", "excited splitting must be finite and >= 0"});
  if (!(weights.preserving >= 0.0 && weights.flipping >= 0.0) || !(weights.preserving + weights.flipping > 0.0))
    v.push_back({"branch_weights", "weights must be >= 0 with a positive sum"});
  throw_if_any(std::move(v));

  const double norm = weights.preserving + weights.flipping;
  auto strength = [&](int ground_spin, int excited_spin) {
    return (ground_spin == excited_spin ? weights.preserving : weights.flipping) / norm;
  };
  constexpr std::array<int, 2> spins{+1, -1};

  std::vector<HoleFeature> raw;
  for (int i : spins) {
    for (int j : spins) {
      // Subgroup whose i -> j transition sits at the burn frequency; each of
      // the four is pumped in proportion to that transition's strength.
      const double pumped = 0.5 * strength(i, j);
      if (pumped == 0.0) continue;
      for (int l : spins) {
        // Offsets are built from integer multiples of D_g and D_e so that
        // coincident positions compare equal exactly.
        const double excited_step = 0.5 * (l - j) * d_excited;
        raw.push_back({excited_step, FeatureKind::Hole, pumped * strength(i, l)});
        if (d_ground > 0.0)
          raw.push_back({excited_step + 0.5 * (i - (-i)) * d_ground, FeatureKind::Antihole, pumped * strength(-i, l)});
      }
    }
  }

  std::sort(raw.begin(), raw.end(), [](const HoleFeature& a, const HoleFeature& b) {
    if (a.offset != b.offset) return a.offset < b.offset;
    return a.kind < b.kind;
  });
  HolePattern pattern;
  for (const auto& f : raw) {
    if (f.strength == 0.0) continue;
    if (!pattern.features.empty() && pattern.features.back().offset == f.offset &&
        pattern.features.back().kind == f.kind)
      pattern.features.back().strength += f.strength;
    else
      pattern.features.push_back(f);
  }
  return pattern;
}

} // namespace shb
