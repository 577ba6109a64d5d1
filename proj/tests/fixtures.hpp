#pragma once

// Shared test fixtures: the bundled chip tables and the first programmable
// interferometer setting, frozen as literals so library tests do not depend
// on file I/O. The serialization tests check that the bundled JSON files
// load back to exactly these numbers.

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gbsim/device.hpp"
#include "gbsim/types.hpp"

namespace fixtures {

inline gbsim::ChipSpec default_chip() {
  gbsim::ChipSpec chip;
  chip.eta = {0.154, 0.120, 0.173, 0.139, 0.152, 0.128, 0.197, 0.170};
  chip.nbar = {0.0205, 0.0091, 0.0131, 0.0193, 0.0223, 0.0175, 0.0158, 0.0187};
  chip.r1 = {1.162, 1.101, 1.050, 1.005};
  chip.r2 = {0.345, 0.367, 0.393, 0.336};
  return chip;
}

/// Uniform-loss chip with one Schmidt mode of r = 1 per squeezer and no
/// detector noise; the setting behind the analytic interference model.
inline gbsim::ChipSpec single_schmidt_chip(double eta = 0.15) {
  gbsim::ChipSpec chip;
  chip.eta.assign(gbsim::kDeviceModes, eta);
  chip.nbar.assign(gbsim::kDeviceModes, 0.0);
  chip.r1.assign(gbsim::kDevicePairs, 1.0);
  chip.r2.assign(gbsim::kDevicePairs, 0.0);
  return chip;
}

/// The first bundled 4x4 setting, printed to four decimals and therefore
/// only approximately unitary; jobs replace it by its polar projection.
inline gbsim::CMat u1_printed() {
  using gbsim::Complex;
  gbsim::CMat u(4, 4);
  u << Complex(-0.3250, -0.4190), Complex(-0.3362, -0.1772),
      Complex(-0.3803, 0.1376), Complex(0.3149, 0.5582),
      Complex(-0.6316, -0.0366), Complex(0.4966, -0.4024),
      Complex(-0.2632, -0.0127), Complex(-0.1553, -0.3123),
      Complex(-0.1518, 0.0883), Complex(-0.5153, 0.0818),
      Complex(-0.3063, -0.7007), Complex(-0.0142, -0.3346),
      Complex(0.3766, -0.3819), Complex(-0.2557, -0.3306),
      Complex(-0.1885, 0.3830), Complex(0.0749, -0.5915);
  return u;
}

inline std::string data_path(const std::string& name) {
  const char* dir = std::getenv("GBSIM_DATA_DIR");
  if (dir == nullptr)
    throw std::runtime_error("GBSIM_DATA_DIR is not set; run via ctest");
  return std::string(dir) + "/" + name;
}

}  // namespace fixtures
