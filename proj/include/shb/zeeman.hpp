#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "shb/errors.hpp"

namespace shb {

enum class Level { Ground, Excited };

/// Spin parameters of the optical transition. All quantities are stored so
/// that every derived output is in Hz:
///  - gyromagnetic ratios in Hz/T (h already divided out),
///  - hyperfine constants A_J in Hz,
///  - quadratic tensors in Hz/T^2 with g_J^2 mu_B^2 folded in, so that
///    B^T Lambda B is a frequency.
struct SpinModel {
  double g_j_ground = 0.0;
  double g_j_excited = 0.0;
  double a_j_ground = 0.0;
  double a_j_excited = 0.0;
  Eigen::Vector3d gamma_ground = Eigen::Vector3d::Zero();
  Eigen::Vector3d gamma_excited = Eigen::Vector3d::Zero();
  double gamma_n = 0.0;
  Eigen::Matrix3d lambda_ground = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d lambda_excited = Eigen::Matrix3d::Zero();

  std::vector<Violation> violations() const;
};

enum class SiteLabel { ClassXZ, ClassYZ };

std::string_view to_string(SiteLabel label);

/// Rows of `rotation` are the local x, y, z axes expressed in the crystal frame.
struct SiteClass {
  SiteLabel label = SiteLabel::ClassXZ;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double population_weight = 0.5;

  std::vector<Violation> violations() const;
};

/// The two classes seen along <111>: ClassXZ has its local Y axis normal to
/// <111>, ClassYZ its local X axis. Equal weights.
std::vector<SiteClass> default_site_classes();

/// Each class valid and weights summing to 1 within 1e-12.
std::vector<Violation> class_set_violations(const std::vector<SiteClass>& classes);

Eigen::Vector3d project_field(const Eigen::Vector3d& b_crystal, const SiteClass& site);

/// Quadratic Zeeman shift of one level from its enhanced gyromagnetic ratios:
///   D_J = (g_J mu_B / h) / (2 A_J) * sum_a (gamma_{J,a} - gamma_n) B_a^2
/// with mu_B / h in Hz/T, A_J in Hz and gamma in Hz/T, giving Hz.
/// Throws ZeroHyperfineConstant when A_J = 0.
double level_shift_dj(const Eigen::Vector3d& b_local, Level level, const SpinModel& model);

/// D_excited - D_ground for the field projected into the site frame.
double transition_shift(const Eigen::Vector3d& b_crystal, const SiteClass& site, const SpinModel& model);

/// Same quantity from the stored tensors: B^T (Lambda_e - Lambda_g) B.
double tensor_transition_shift(const Eigen::Vector3d& b_crystal, const SiteClass& site, const SpinModel& model);

/// The diagonal tensor that makes B^T Lambda B equal level_shift_dj.
Eigen::Matrix3d quadratic_tensor_from_gyromagnetic(Level level, const SpinModel& model);

/// Spectral norm of Lambda_e - Lambda_g in Hz/T^2 (the K of the diffusion model).
double tensor_difference_norm(const SpinModel& model);

struct LevelSplittings {
  double ground = 0.0;
  double excited = 0.0;
};

/// |gamma_J (*) B_local| per level (componentwise product, then 2-norm).
LevelSplittings splittings(const Eigen::Vector3d& b_crystal, const SiteClass& site, const SpinModel& model);

struct ShiftSplit {
  SiteLabel label = SiteLabel::ClassXZ;
  double center_shift = 0.0;  // Hz
  double splitting = 0.0;     // Hz
};

/// Per class: center_shift = shift(B + dB) - shift(B); splitting = the gap
/// between the two spin branches, |dD_e - dD_g| with dD the change of each
/// linear splitting.
std::vector<ShiftSplit> predict_shift_split(const Eigen::Vector3d& b_initial, const Eigen::Vector3d& delta_b,
                                            const SpinModel& model, const std::vector<SiteClass>& classes);

enum class FeatureKind { Hole, Antihole };

struct HoleFeature {
  double offset = 0.0;  // Hz from the burn frequency
  FeatureKind kind = FeatureKind::Hole;
  double strength = 0.0;
};

/// Relative oscillator strengths of spin-preserving and spin-flipping
/// optical transitions; normalized internally.
struct BranchWeights {
  double preserving = 0.5;
  double flipping = 0.5;
};

struct HolePattern {
  std::vector<HoleFeature> features;  // sorted by offset, holes before antiholes

  double total(FeatureKind kind) const;
};

/// Burn at zero offset into an inhomogeneous line of ions with ground
/// levels at +/-D_g/2 and excited levels at +/-D_e/2. Every subgroup that
/// is resonant is pumped in proportion to its transition strength; its
/// depleted ground level gives holes, the other ground level antiholes. With
/// D_g = 0 the pumped population has no spin level to go to (it is held in
/// the bottleneck), so only holes appear.
HolePattern hole_pattern(double d_ground, double d_excited, const BranchWeights& weights = {});

} // namespace shb
