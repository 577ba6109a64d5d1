#pragma once

#include <complex>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace gbsim {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Photon counts per mode, e.g. {0,2,0,0,1,0,0,1} on the 8-mode device.
using Pattern = std::vector<int>;

inline int pattern_total(const Pattern& s) {
  return std::accumulate(s.begin(), s.end(), 0);
}

}  // namespace gbsim
