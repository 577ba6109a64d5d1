#pragma once

// Zero-mean Gaussian states of M bosonic modes, held as the 2M x 2M
// covariance Sigma in the (a_1..a_M, a^dag_1..a^dag_M) ordering:
//
//   Sigma = [[N^T + I/2, M], [M^*, N + I/2]],
//   N_ij = <a_i^dag a_j>,  M_ij = <a_i a_j>.
//
// Vacuum is Sigma = I/2. A Heisenberg-linear element with mode map v -> T v
// transforms Sigma -> T Sigma T^dag. Output probabilities come from
// Q = Sigma + I/2 and the hafnian of A = X (I - Q^{-1}) with rows/columns
// repeated per detected pattern.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gbsim/errors.hpp"
#include "gbsim/matrix_kernels.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

inline constexpr double kMaxSqueezing = 4.0;

struct GaussianState {
  int modes = 0;
  CMat sigma;  // 2*modes x 2*modes
};

inline GaussianState vacuum(int modes) {
  require(modes >= 1, "vacuum: state must have at least one mode");
  GaussianState st;
  st.modes = modes;
  st.sigma = 0.5 * CMat::Identity(2 * modes, 2 * modes);
  return st;
}

namespace detail {

inline void check_mode(const GaussianState& st, int mode, const char* who) {
  require(mode >= 0 && mode < st.modes,
          std::string(who) + ": mode index out of range");
}

inline GaussianState transformed(const GaussianState& st, const CMat& t) {
  GaussianState out;
  out.modes = st.modes;
  out.sigma = t * st.sigma * t.adjoint();
  return out;
}

}  // namespace detail

/// Two-mode squeezer exp(r (a^dag b^dag - a b)):
/// a -> a cosh r + b^dag sinh r, b -> b cosh r + a^dag sinh r.
inline GaussianState apply_two_mode_squeezing(const GaussianState& st,
                                              int mode_a, int mode_b,
                                              double r) {
  detail::check_mode(st, mode_a, "apply_two_mode_squeezing");
  detail::check_mode(st, mode_b, "apply_two_mode_squeezing");
  require(mode_a != mode_b,
          "apply_two_mode_squeezing: modes must be distinct");
  require(std::abs(r) <= kMaxSqueezing,
          "apply_two_mode_squeezing: |r| must be at most 4");
  const int m = st.modes;
  const double ch = std::cosh(r), sh = std::sinh(r);
  CMat t = CMat::Identity(2 * m, 2 * m);
  t(mode_a, mode_a) = ch;
  t(mode_a, m + mode_b) = sh;
  t(mode_b, mode_b) = ch;
  t(mode_b, m + mode_a) = sh;
  t(m + mode_a, m + mode_a) = ch;
  t(m + mode_a, mode_b) = sh;
  t(m + mode_b, m + mode_b) = ch;
  t(m + mode_b, mode_a) = sh;
  return detail::transformed(st, t);
}

/// Linear interferometer u on the listed modes: a_i -> sum_j u_ij a_j.
inline GaussianState apply_interferometer(const GaussianState& st, const CMat& u,
                                          const std::vector<int>& modes) {
  require(u.rows() == u.cols(), "apply_interferometer: matrix must be square");
  require(static_cast<std::size_t>(u.rows()) == modes.size(),
          "apply_interferometer: mode list must match matrix dimension");
  require(is_unitary(u, 1e-8),
          "apply_interferometer: matrix must be unitary within 1e-8");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    detail::check_mode(st, modes[i], "apply_interferometer");
    for (std::size_t j = i + 1; j < modes.size(); ++j)
      require(modes[i] != modes[j],
              "apply_interferometer: modes must be distinct");
  }
  const int m = st.modes;
  CMat t = CMat::Identity(2 * m, 2 * m);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (std::size_t j = 0; j < modes.size(); ++j) {
      t(modes[i], modes[j]) = u(i, j);
      t(m + modes[i], m + modes[j]) = std::conj(u(i, j));
    }
  }
  return detail::transformed(st, t);
}

/// Pure-loss channel of transmissivity eta on one mode:
/// Sigma -> G Sigma G + (I - G^2)/2 with G = diag(.., sqrt(eta), ..).
inline GaussianState apply_loss(const GaussianState& st, int mode, double eta) {
  detail::check_mode(st, mode, "apply_loss");
  require(eta >= 0.0 && eta <= 1.0,
          "apply_loss: transmissivity must lie in [0, 1]");
  const int m = st.modes;
  const double root = std::sqrt(eta);
  GaussianState out = st;
  for (int slot : {mode, m + mode}) {
    out.sigma.row(slot) *= root;
    out.sigma.col(slot) *= root;
    out.sigma(slot, slot) += 0.5 * (1.0 - eta);
  }
  return out;
}

struct PhotonMoments {
  RVec mean;        // <n_i>
  RMat covariance;  // Cov(n_i, n_j)
};

/// First and second photon-number moments from the covariance blocks:
/// Cov(n_c, n_d) = |M_cd|^2 + |N_cd|^2 + delta_cd N_cc.
inline PhotonMoments photon_moments(const GaussianState& st) {
  const int m = st.modes;
  PhotonMoments out;
  out.mean.resize(m);
  out.covariance.resize(m, m);
  for (int c = 0; c < m; ++c)
    out.mean(c) = std::real(st.sigma(m + c, m + c)) - 0.5;
  for (int c = 0; c < m; ++c) {
    for (int d = 0; d < m; ++d) {
      const Complex n_cd = st.sigma(m + c, m + d) -
                           (c == d ? Complex(0.5, 0.0) : Complex(0.0, 0.0));
      const Complex m_cd = st.sigma(c, m + d);
      double cov = std::norm(m_cd) + std::norm(n_cd);
      if (c == d) cov += out.mean(c);
      out.covariance(c, d) = cov;
    }
  }
  return out;
}

/// Precomputes Q^{-1}, sqrt(det Q) and A = X (I - Q^{-1}) once per state so
/// pattern probabilities reduce to one hafnian each.
class FockProbabilityEvaluator {
 public:
  explicit FockProbabilityEvaluator(const GaussianState& st) : modes_(st.modes) {
    const int d = 2 * modes_;
    const CMat q = st.sigma + 0.5 * CMat::Identity(d, d);
    Eigen::LLT<CMat> llt(q);
    if (llt.info() != Eigen::Success)
      throw ComputationError(
          "fock_probability: covariance is not positive definite");
    q_det_sqrt_ = 1.0;
    for (int i = 0; i < d; ++i)
      q_det_sqrt_ *= std::real(llt.matrixLLT()(i, i));
    const CMat q_inv = llt.solve(CMat::Identity(d, d));
    const CMat body = CMat::Identity(d, d) - q_inv;
    CMat a(d, d);
    a.topRows(modes_) = body.bottomRows(modes_);
    a.bottomRows(modes_) = body.topRows(modes_);
    // A is symmetric in exact arithmetic; strip roundoff so the hafnian
    // kernels see a symmetric matrix.
    a_mat_ = 0.5 * (a + a.transpose());
  }

  double q_det_sqrt() const { return q_det_sqrt_; }
  const CMat& a_matrix() const { return a_mat_; }

  /// Pr(pattern); sum of counts capped at 12. Tiny negative results in
  /// [-1e-9, 0) clamp to zero (flagged via clamped); anything lower throws.
  double probability(const Pattern& s, bool* clamped = nullptr) const {
    require(static_cast<int>(s.size()) == modes_,
            "fock_probability: pattern length must match mode count");
    int total = 0;
    for (int v : s) {
      require(v >= 0, "fock_probability: photon counts must be >= 0");
      total += v;
    }
    require(total <= 12,
            "fock_probability: total photon number must be at most 12");
    if (clamped) *clamped = false;
    double denom = q_det_sqrt_;
    std::vector<int> idx;
    idx.reserve(2 * total);
    for (int i = 0; i < modes_; ++i)
      for (int k = 0; k < s[i]; ++k) idx.push_back(i);
    for (int i = 0; i < modes_; ++i) {
      for (int k = 2; k <= s[i]; ++k) denom *= k;  // factorial, folded in
      for (int k = 0; k < s[i]; ++k) idx.push_back(modes_ + i);
    }
    const int d = static_cast<int>(idx.size());
    CMat sub(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) sub(r, c) = a_mat_(idx[r], idx[c]);
    const double raw = std::real(detail::hafnian_any(sub)) / denom;
    if (raw >= 0.0) return raw;
    if (raw >= -1e-9) {
      if (clamped) *clamped = true;
      return 0.0;
    }
    throw ComputationError(
        "fock_probability: probability " + std::to_string(raw) +
        " is below -1e-9; covariance is inconsistent");
  }

 private:
  int modes_;
  double q_det_sqrt_;
  CMat a_mat_;
};

/// One-shot form of FockProbabilityEvaluator::probability.
inline double fock_probability(const GaussianState& st, const Pattern& s,
                               bool* clamped = nullptr) {
  return FockProbabilityEvaluator(st).probability(s, clamped);
}

/// C = U diag(tanh r) U^T, the symmetric matrix whose repeated-index
/// permanent gives pure-state pattern amplitudes.
inline CMat pure_state_c_matrix(const CMat& u, const RVec& r) {
  require(is_unitary(u, 1e-8),
          "pure_state_c_matrix: matrix must be unitary within 1e-8");
  require(u.rows() == r.size(),
          "pure_state_c_matrix: one squeezing value per mode required");
  for (int i = 0; i < r.size(); ++i)
    require(std::abs(r(i)) <= kMaxSqueezing,
            "pure_state_c_matrix: |r| must be at most 4");
  CVec tanh_r(r.size());
  for (int i = 0; i < r.size(); ++i) tanh_r(i) = Complex(std::tanh(r(i)), 0.0);
  return u * tanh_r.asDiagonal() * u.transpose();
}

/// sqrt(det Q) of the lossless 2M-mode state built from M two-mode squeezers,
/// prod_i cosh^2 r_i.
inline double pure_q_det_sqrt(const RVec& r) {
  double out = 1.0;
  for (int i = 0; i < r.size(); ++i) out *= std::cosh(r(i)) * std::cosh(r(i));
  return out;
}

/// Pure-state pattern probability |Per(C_{s,t})|^2 / (sqrt(det Q) s! t!) for
/// signal pattern s and idler pattern t; zero when the totals differ (photons
/// are created in pairs). Totals capped at 10.
inline double pure_pattern_probability(const CMat& c, const Pattern& s,
                                       const Pattern& t, double q_det_sqrt) {
  require(c.rows() == c.cols(), "pure_pattern_probability: matrix must be square");
  require(static_cast<int>(s.size()) == c.rows() &&
              static_cast<int>(t.size()) == c.rows(),
          "pure_pattern_probability: pattern length must match matrix");
  require(q_det_sqrt > 0.0,
          "pure_pattern_probability: sqrt(det Q) must be positive");
  int total_s = 0, total_t = 0;
  for (int v : s) {
    require(v >= 0, "pure_pattern_probability: photon counts must be >= 0");
    total_s += v;
  }
  for (int v : t) {
    require(v >= 0, "pure_pattern_probability: photon counts must be >= 0");
    total_t += v;
  }
  require(total_s <= 10 && total_t <= 10,
          "pure_pattern_probability: block totals must be at most 10");
  if (total_s != total_t) return 0.0;
  const Complex per = permanent(repeat_rows_cols(c, s, t));
  double denom = q_det_sqrt;
  for (int v : s)
    for (int k = 2; k <= v; ++k) denom *= k;
  for (int v : t)
    for (int k = 2; k <= v; ++k) denom *= k;
  return std::norm(per) / denom;
}

struct TotalPhotonDistribution {
  std::vector<double> probs;  // probs[n] = Pr(total photons = n), n <= cutoff
  double tail = 0.0;          // 1 - sum(probs)
};

/// Exact total-photon distribution from the generating function
/// E[z^N] = 1 / sqrt(det Q det(I - z B)), B = I - Q^{-1}: the log-series
/// coefficients are tr(B^k)/(2k) and the exponential is recovered by the
/// standard power-series recurrence. Cost O(cutoff (2M)^3), no sampling, no
/// aliasing.
inline TotalPhotonDistribution total_photon_distribution(const GaussianState& st,
                                                         int cutoff) {
  require(cutoff >= 0, "total_photon_distribution: cutoff must be >= 0");
  const int d = 2 * st.modes;
  const CMat q = st.sigma + 0.5 * CMat::Identity(d, d);
  Eigen::LLT<CMat> llt(q);
  if (llt.info() != Eigen::Success)
    throw ComputationError(
        "total_photon_distribution: covariance is not positive definite");
  double q_det_sqrt = 1.0;
  for (int i = 0; i < d; ++i) q_det_sqrt *= std::real(llt.matrixLLT()(i, i));
  const CMat b = CMat::Identity(d, d) - llt.solve(CMat::Identity(d, d));
  std::vector<Complex> c(cutoff + 1, Complex(0.0, 0.0));
  CMat pw = CMat::Identity(d, d);
  for (int k = 1; k <= cutoff; ++k) {
    pw = pw * b;
    c[k] = pw.trace() / Complex(2.0 * k, 0.0);
  }
  std::vector<Complex> g(cutoff + 1, Complex(0.0, 0.0));
  g[0] = Complex(1.0, 0.0);
  for (int k = 1; k <= cutoff; ++k) {
    Complex s(0.0, 0.0);
    for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * c[j] * g[k - j];
    g[k] = s / static_cast<double>(k);
  }
  TotalPhotonDistribution out;
  out.probs.resize(cutoff + 1);
  double sum = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    out.probs[n] = std::max(0.0, std::real(g[n]) / q_det_sqrt);
    sum += out.probs[n];
  }
  out.tail = std::max(0.0, 1.0 - sum);
  return out;
}

}  // namespace gbsim
