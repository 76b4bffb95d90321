#pragma once

#include <cmath>

#include "shb/zeeman.hpp"

namespace fixture {

// Illustrative Tm-like spin parameters: enhanced gyromagnetic ratios of a
// few hundred MHz/T in the ground multiplet, smaller in the excited one,
// bare 169Tm nuclear ratio and free-ion hyperfine constants.
inline shb::SpinModel tm_like_spin_model() {
  shb::SpinModel m;
  m.g_j_ground = 7.0 / 6.0;
  m.g_j_excited = 4.0 / 5.0;
  m.a_j_ground = -393.5e6;
  m.a_j_excited = -509.0e6;
  m.gamma_ground = Eigen::Vector3d(25e6, 60e6, 400e6);
  m.gamma_excited = Eigen::Vector3d(10e6, 20e6, 110e6);
  m.gamma_n = -3.53e6;
  m.lambda_ground = shb::quadratic_tensor_from_gyromagnetic(shb::Level::Ground, m);
  m.lambda_excited = shb::quadratic_tensor_from_gyromagnetic(shb::Level::Excited, m);
  return m;
}

inline Eigen::Vector3d along_111() { return Eigen::Vector3d(1, 1, 1).normalized(); }

} // namespace fixture
