#pragma once

// Nonlinear least squares (Levenberg-Marquardt with a finite-difference
// Jacobian) plus the four-parameter squeezer model fitted to joint
// signal/idler photon histograms: two Schmidt modes with strengths r1 >= r2,
// one transmissivity eta shared by signal and idler, and one Poisson noise
// mean nbar per detector.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gbsim/errors.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

struct LMOptions {
  int max_iterations = 200;
  double step_tol = 1e-12;
  double lambda0 = 1e-3;
  // Scale the covariance by the reduced chi^2 (appropriate for unweighted
  // residuals; leave off when residuals are already sigma-weighted).
  bool scale_covariance = false;
};

struct LMResult {
  RVec params;
  RMat covariance;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes |f(x)|^2. The residual function maps parameters to a residual
/// vector; the Jacobian is taken by central differences.
inline LMResult levenberg_marquardt(
    const std::function<RVec(const RVec&)>& residuals, const RVec& x0,
    const LMOptions& opt = {}) {
  require(x0.size() >= 1, "levenberg_marquardt: empty parameter vector");
  RVec x = x0;
  RVec r = residuals(x);
  const int m = static_cast<int>(r.size());
  const int n = static_cast<int>(x.size());
  require(m >= n, "levenberg_marquardt: need at least as many residuals as parameters");
  double chi2 = r.squaredNorm();
  double lambda = opt.lambda0;
  LMResult out;
  out.converged = false;
  int iter = 0;
  RMat jac(m, n);
  for (; iter < opt.max_iterations; ++iter) {
    for (int j = 0; j < n; ++j) {
      const double h = 1e-6 * (1.0 + std::abs(x(j)));
      RVec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      jac.col(j) = (residuals(xp) - residuals(xm)) / (2.0 * h);
    }
    const RMat jtj = jac.transpose() * jac;
    const RVec jtr = jac.transpose() * r;
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      RMat damped = jtj;
      for (int j = 0; j < n; ++j)
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-12);
      const RVec delta = damped.ldlt().solve(-jtr);
      const RVec x_new = x + delta;
      const RVec r_new = residuals(x_new);
      const double chi2_new = r_new.squaredNorm();
      if (chi2_new < chi2) {
        x = x_new;
        r = r_new;
        const double improvement = chi2 - chi2_new;
        chi2 = chi2_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (delta.norm() <= opt.step_tol * (1.0 + x.norm()) ||
            improvement <= 1e-14 * (1.0 + chi2)) {
          out.converged = true;
        }
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) {
      out.converged = true;  // no downhill direction left at this scale
      break;
    }
    if (out.converged) break;
  }
  out.params = x;
  out.chi2 = chi2;
  out.iterations = iter + 1;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x(j)));
    RVec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    jac.col(j) = (residuals(xp) - residuals(xm)) / (2.0 * h);
  }
  RMat jtj = jac.transpose() * jac;
  RMat cov = jtj.ldlt().solve(RMat::Identity(n, n));
  if (opt.scale_covariance && m > n) cov *= chi2 / static_cast<double>(m - n);
  out.covariance = cov;
  return out;
}

/// Joint (n_signal, n_idler) pmf of one two-mode squeezed vacuum of strength
/// r after transmissivity eta on both arms, on [0, max_n]^2. Binomial
/// thinning of the perfectly correlated pair number:
///   P(a, b) = sum_n tanh^{2n} r / cosh^2 r * Bin(a | n, eta) Bin(b | n, eta).
/// Independent of the covariance machinery, so it doubles as an oracle.
inline RMat lossy_tmsv_joint(double r, double eta, int max_n) {
  require(r >= 0.0, "lossy_tmsv_joint: r must be >= 0");
  require(eta > 0.0 && eta <= 1.0, "lossy_tmsv_joint: eta must lie in (0, 1]");
  require(max_n >= 0, "lossy_tmsv_joint: max_n must be >= 0");
  RMat out = RMat::Zero(max_n + 1, max_n + 1);
  const double q = std::tanh(r) * std::tanh(r);
  const double vac = 1.0 - q;  // 1/cosh^2 r
  if (q == 0.0) {
    out(0, 0) = 1.0;
    return out;
  }
  const double miss = 1.0 - eta;
  for (int a = 0; a <= max_n; ++a) {
    for (int b = 0; b <= max_n; ++b) {
      const int n0 = std::max(a, b);
      // Track both binomial terms incrementally in n.
      double weight = vac * std::pow(q, n0);
      double bin_a = std::pow(miss, n0 - a), bin_b = std::pow(miss, n0 - b);
      for (int k = 0; k < a; ++k) bin_a *= static_cast<double>(n0 - k) / (k + 1);
      for (int k = 0; k < b; ++k) bin_b *= static_cast<double>(n0 - k) / (k + 1);
      bin_a *= std::pow(eta, a);
      bin_b *= std::pow(eta, b);
      double acc = 0.0;
      // Terms can rise before the geometric decay takes over (the binomial
      // grows polynomially), so only stop once well past the start.
      for (int n = n0; n < n0 + 20000; ++n) {
        const double term = weight * bin_a * bin_b;
        acc += term;
        if (n > n0 + 50 && term < 1e-16 * (acc + 1e-300)) break;
        weight *= q;
        bin_a *= miss * static_cast<double>(n + 1) / (n + 1 - a);
        bin_b *= miss * static_cast<double>(n + 1) / (n + 1 - b);
      }
      out(a, b) = acc;
    }
  }
  return out;
}

namespace detail {

inline RMat conv2d_truncated(const RMat& a, const RMat& b) {
  const int n = static_cast<int>(a.rows());
  RMat out = RMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k <= i; ++k)
        for (int l = 0; l <= j; ++l) out(i, j) += a(k, l) * b(i - k, j - l);
  return out;
}

}  // namespace detail

/// Model joint pmf for one squeezer pair on [0, max_n]^2: two lossy TMSV
/// Schmidt modes convolved together, then Poisson noise with mean nbar on
/// each detector.
inline RMat pair_model_distribution(double r1, double r2, double eta,
                                    double nbar, int max_n = 8) {
  require(nbar >= 0.0, "pair_model_distribution: nbar must be >= 0");
  RMat joint = detail::conv2d_truncated(lossy_tmsv_joint(r1, eta, max_n),
                                        lossy_tmsv_joint(r2, eta, max_n));
  if (nbar > 0.0) {
    std::vector<double> pois(max_n + 1, 0.0);
    pois[0] = std::exp(-nbar);
    for (int k = 1; k <= max_n; ++k) pois[k] = pois[k - 1] * nbar / k;
    RMat noise = RMat::Zero(max_n + 1, max_n + 1);
    for (int i = 0; i <= max_n; ++i)
      for (int j = 0; j <= max_n; ++j) noise(i, j) = pois[i] * pois[j];
    joint = detail::conv2d_truncated(joint, noise);
  }
  return joint;
}

struct SqueezerFit {
  double r1 = 0.0;
  double r2 = 0.0;
  double eta = 0.0;
  double nbar = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fits (r1, r2, eta, nbar) to a 9x9 joint photon histogram of one squeezer
/// pair (signal counts index the rows). The histogram may hold counts or
/// frequencies; it is normalized internally. Optimization runs in transformed
/// coordinates (log r, logit eta, log nbar) to keep parameters in range.
inline SqueezerFit fit_squeezer_model(const RMat& histogram) {
  require(histogram.rows() == 9 && histogram.cols() == 9,
          "fit_squeezer_model: histogram must be 9x9 (counts 0..8)");
  require(histogram.minCoeff() >= 0.0,
          "fit_squeezer_model: histogram entries must be >= 0");
  const double total = histogram.sum();
  require(total > 0.0, "fit_squeezer_model: histogram is empty");
  const RMat freq = histogram / total;

  const auto unpack = [](const RVec& x) {
    const double r1 = std::exp(std::clamp(x(0), -20.0, 1.38));
    const double r2 = std::exp(std::clamp(x(1), -20.0, 1.38));
    const double eta = 1.0 / (1.0 + std::exp(-std::clamp(x(2), -30.0, 30.0)));
    const double nbar = std::exp(std::clamp(x(3), -30.0, 2.0));
    return std::array<double, 4>{r1, r2, eta, nbar};
  };
  const auto residuals = [&](const RVec& x) {
    const auto [r1, r2, eta, nbar] = unpack(x);
    const RMat model = pair_model_distribution(r1, r2, eta, nbar, 8);
    RVec res(81);
    int k = 0;
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) res(k++) = model(i, j) - freq(i, j);
    return res;
  };

  RVec x0(4);
  x0 << std::log(1.0), std::log(0.3), std::log(0.15 / 0.85), std::log(0.02);
  LMOptions opt;
  opt.scale_covariance = true;
  const LMResult lm = levenberg_marquardt(residuals, x0, opt);
  auto [r1, r2, eta, nbar] = unpack(lm.params);
  if (r1 < r2) std::swap(r1, r2);  // label order is a gauge choice
  SqueezerFit fit;
  fit.r1 = r1;
  fit.r2 = r2;
  fit.eta = eta;
  fit.nbar = nbar;
  fit.residual_norm = std::sqrt(lm.chi2);
  fit.iterations = lm.iterations;
  fit.converged = lm.converged;
  return fit;
}

}  // namespace gbsim
