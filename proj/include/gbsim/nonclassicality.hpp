#pragma once

// Classical-simulability witness. Each mode contributes a factor
//   x_i = sqrt((eta_i e^{-2 r_i} + 1 - eta_i) / (1 - 2 p_i)),
// combining its squeezing r_i, transmissivity eta_i and dark-count
// probability p_i. The witness compares
//   sum_i ln((x_i + 1/x_i) / 2)   against   epsilon^2 / 4:
// when the left side is at least the right side, no classical distribution
// can stay within fidelity epsilon of the device output, certifying a
// non-classical (negative P-function) state.

#include <cmath>
#include <string>
#include <vector>

#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"

namespace gbsim {

struct ModeTestParams {
  double eta = 1.0;  // transmissivity in [0, 1]
  double r = 0.0;    // squeezing, >= 0
  double p = 0.0;    // dark-count probability, in [0, 1/2)
};

struct TestModel {
  std::vector<ModeTestParams> modes;
};

inline double x_factor(double eta, double r, double p) {
  require(eta >= 0.0 && eta <= 1.0, "x_factor: eta must lie in [0, 1]");
  require(r >= 0.0, "x_factor: r must be >= 0");
  require(p >= 0.0, "x_factor: p must be >= 0");
  require(p < 0.5, "x_factor: dark-count probability must be below 1/2");
  return std::sqrt((eta * std::exp(-2.0 * r) + 1.0 - eta) / (1.0 - 2.0 * p));
}

/// Left side of the witness; each term ln((x + 1/x)/2) is >= 0.
inline double classicality_lhs(const TestModel& model) {
  require(!model.modes.empty(), "classicality_lhs: empty test model");
  double acc = 0.0;
  for (const ModeTestParams& m : model.modes) {
    const double x = x_factor(m.eta, m.r, m.p);
    acc += std::log(0.5 * (x + 1.0 / x));
  }
  return acc;
}

struct TestReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double epsilon = 0.0;
  double epsilon0 = 0.0;  // largest epsilon the device still certifies
  bool pass = false;
};

inline TestReport passes_test(const TestModel& model, double epsilon) {
  require(epsilon > 0.0, "passes_test: epsilon must be positive");
  TestReport rep;
  rep.lhs = classicality_lhs(model);
  rep.epsilon = epsilon;
  rep.rhs = 0.25 * epsilon * epsilon;
  rep.epsilon0 = 2.0 * std::sqrt(rep.lhs);
  rep.pass = rep.lhs >= rep.rhs;
  return rep;
}

/// Per-mode test parameters from the chip tables: each mode inherits its
/// pair's dominant squeezing, and the Poisson noise mean maps to a
/// dark-count probability p = 1 - e^{-nbar} (probability of at least one
/// noise photon).
inline TestModel chip_params_to_test_model(const ChipSpec& chip) {
  chip.validate();
  TestModel model;
  model.modes.reserve(kDeviceModes);
  for (int m = 0; m < kDeviceModes; ++m) {
    ModeTestParams params;
    params.eta = chip.eta[m];
    params.r = chip.r1[m % kDevicePairs];
    params.p = 1.0 - std::exp(-chip.nbar[m]);
    model.modes.push_back(params);
  }
  return model;
}

}  // namespace gbsim
