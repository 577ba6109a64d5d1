#pragma once

// Sample statistics mirroring the device's analysis chain: noise reduction
// factor, unheralded second-order correlation, Schmidt-number estimate,
// total variation distance, photon-pattern orbits, and the two-squeezer
// interference sweep with its joint closed-form fit.
//
// Every batch statistic reports value (full batch) and std_error (sample
// standard deviation of the statistic over 8 equal sub-batches; the
// remainder after dividing by 8 is dropped).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"
#include "gbsim/fitting.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

struct StatResult {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

inline constexpr int kSubBatches = 8;

inline void check_batch(const std::vector<Pattern>& samples) {
  if (samples.empty())
    throw ComputationError("statistic undefined on an empty batch");
  const std::size_t width = samples.front().size();
  for (const Pattern& s : samples)
    require(s.size() == width, "batch: all samples must have the same width");
}

inline void check_batch_mode(const std::vector<Pattern>& samples, int mode,
                             const char* who) {
  require(mode >= 0 && mode < static_cast<int>(samples.front().size()),
          std::string(who) + ": mode index out of range");
}

template <typename Fn>
StatResult batched_statistic(const std::vector<Pattern>& samples, Fn&& fn) {
  check_batch(samples);
  StatResult out;
  out.value = fn(std::span<const Pattern>(samples));
  const std::size_t per = samples.size() / kSubBatches;
  if (per < 2)
    throw ComputationError(
        "statistic needs at least 16 samples for sub-batch errors");
  double mean = 0.0;
  std::array<double, kSubBatches> vals{};
  for (int b = 0; b < kSubBatches; ++b) {
    vals[b] = fn(std::span<const Pattern>(samples.data() + b * per, per));
    mean += vals[b];
  }
  mean /= kSubBatches;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  out.std_error = std::sqrt(ss / (kSubBatches - 1));
  return out;
}

}  // namespace detail

/// Noise reduction factor Var(n_a - n_b) / <n_a + n_b>; 0 for an ideal
/// squeezed pair, 1 - eta under loss, 1 for coherent light.
inline StatResult nrf(const std::vector<Pattern>& samples, int mode_a,
                      int mode_b) {
  detail::check_batch(samples);
  detail::check_batch_mode(samples, mode_a, "nrf");
  detail::check_batch_mode(samples, mode_b, "nrf");
  require(mode_a != mode_b, "nrf: modes must be distinct");
  return detail::batched_statistic(samples, [&](std::span<const Pattern> s) {
    double sum_d = 0.0, sum_d2 = 0.0, sum_t = 0.0;
    for (const Pattern& p : s) {
      const double d = p[mode_a] - p[mode_b];
      sum_d += d;
      sum_d2 += d * d;
      sum_t += p[mode_a] + p[mode_b];
    }
    const double n = static_cast<double>(s.size());
    const double mean_t = sum_t / n;
    if (mean_t <= 0.0)
      throw ComputationError("nrf: undefined, zero mean photon number");
    const double var = (sum_d2 - sum_d * sum_d / n) / (n - 1.0);
    return var / mean_t;
  });
}

/// Unheralded g2 = (<n^2> - <n>) / <n>^2 of one mode; loss-insensitive,
/// 2 for a single thermal (Schmidt) mode, 1 + 1/K for K equal modes.
inline StatResult g2(const std::vector<Pattern>& samples, int mode) {
  detail::check_batch(samples);
  detail::check_batch_mode(samples, mode, "g2");
  return detail::batched_statistic(samples, [&](std::span<const Pattern> s) {
    double sum = 0.0, sum2 = 0.0;
    for (const Pattern& p : s) {
      sum += p[mode];
      sum2 += static_cast<double>(p[mode]) * p[mode];
    }
    const double n = static_cast<double>(s.size());
    const double mean = sum / n;
    if (mean <= 0.0)
      throw ComputationError("g2: undefined, zero mean photon number");
    return (sum2 / n - mean) / (mean * mean);
  });
}

/// Schmidt-mode count K = 1 / (g2 - 1); only meaningful for thermal-like
/// single-mode statistics, so g2 outside (1, 2] is rejected.
inline double schmidt_number(double g2_value) {
  if (!(g2_value > 1.0 && g2_value <= 2.0))
    throw ComputationError("schmidt_number: g2 " + std::to_string(g2_value) +
                           " outside (1, 2] has no Schmidt-mode reading");
  return 1.0 / (g2_value - 1.0);
}

/// Total variation distance, half the l1 distance over the union of keys.
inline double tvd(const std::map<Pattern, double>& p,
                  const std::map<Pattern, double>& q) {
  double acc = 0.0;
  auto it_p = p.begin();
  auto it_q = q.begin();
  while (it_p != p.end() || it_q != q.end()) {
    if (it_q == q.end() || (it_p != p.end() && it_p->first < it_q->first)) {
      acc += std::abs(it_p->second);
      ++it_p;
    } else if (it_p == p.end() || it_q->first < it_p->first) {
      acc += std::abs(it_q->second);
      ++it_q;
    } else {
      acc += std::abs(it_p->second - it_q->second);
      ++it_p;
      ++it_q;
    }
  }
  return 0.5 * acc;
}

inline double tvd(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  const std::size_t n = std::max(p.size(), q.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    acc += std::abs(a - b);
  }
  return 0.5 * acc;
}

/// Orbit of a pattern: counts sorted non-increasing with zeros stripped, the
/// permutation-equivalence class label.
inline Pattern orbit_of(const Pattern& s) {
  Pattern orbit;
  for (int v : s) {
    require(v >= 0, "orbit_of: photon counts must be >= 0");
    if (v > 0) orbit.push_back(v);
  }
  std::sort(orbit.begin(), orbit.end(), std::greater<int>());
  return orbit;
}

inline std::string orbit_to_string(const Pattern& orbit) {
  if (orbit.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(orbit[i]);
  }
  return out;
}

/// Exact orbit probability: the distribution mass on patterns in the class.
inline double orbit_probability(const PatternDistribution& dist,
                                const Pattern& orbit) {
  double acc = 0.0;
  for (const auto& [s, p] : dist.probs)
    if (orbit_of(s) == orbit) acc += p;
  return acc;
}

/// Sampled orbit probability with the binomial standard error.
inline StatResult orbit_probability(const std::vector<Pattern>& samples,
                                    const Pattern& orbit) {
  detail::check_batch(samples);
  std::uint64_t hits = 0;
  for (const Pattern& s : samples)
    if (orbit_of(s) == orbit) ++hits;
  const double n = static_cast<double>(samples.size());
  StatResult out;
  out.value = hits / n;
  out.std_error = std::sqrt(out.value * (1.0 - out.value) / n);
  return out;
}

/// Display order of the eleven six-photon orbits, ascending largest part
/// then descending length.
inline std::vector<Pattern> sixphoton_orbit_order() {
  return {{1, 1, 1, 1, 1, 1}, {2, 1, 1, 1, 1}, {3, 1, 1, 1}, {2, 2, 1, 1},
          {4, 1, 1},          {3, 2, 1},       {5, 1},       {2, 2, 2},
          {4, 2},             {3, 3},          {6}};
}

/// All 8-mode patterns of one orbit in lexicographically descending order.
inline std::vector<Pattern> orbit_patterns(const Pattern& orbit, int modes) {
  require(static_cast<int>(orbit.size()) <= modes,
          "orbit_patterns: orbit has more parts than modes");
  Pattern p(orbit);
  std::sort(p.begin(), p.end(), std::greater<int>());
  p.resize(modes, 0);
  std::vector<Pattern> out;
  do {
    out.push_back(p);
  } while (std::prev_permutation(p.begin(), p.end()));
  return out;
}

struct OrbitRow {
  Pattern orbit;
  Pattern pattern;
  std::uint64_t count = 0;
  double fraction = 0.0;   // conditional on total = 6
  double std_error = 0.0;  // binomial, on the conditional fraction
};

/// Six-photon events grouped by orbit: one row per 8-mode pattern with total
/// six (1716 rows), ordered by the display orbit order and lexicographically
/// descending within each orbit. Fractions are conditional on the six-photon
/// subset. Samples with other totals are ignored.
inline std::vector<OrbitRow> orbit_histogram_sixphoton(
    const std::vector<Pattern>& samples) {
  detail::check_batch(samples);
  require(samples.front().size() == kDeviceModes,
          "orbit_histogram_sixphoton: 8-mode samples required");
  std::map<Pattern, std::uint64_t> counts;
  std::uint64_t events = 0;
  for (const Pattern& s : samples) {
    if (pattern_total(s) != 6) continue;
    ++events;
    ++counts[s];
  }
  std::vector<OrbitRow> rows;
  for (const Pattern& orbit : sixphoton_orbit_order()) {
    for (const Pattern& pattern : orbit_patterns(orbit, kDeviceModes)) {
      OrbitRow row;
      row.orbit = orbit;
      row.pattern = pattern;
      const auto it = counts.find(pattern);
      row.count = it == counts.end() ? 0 : it->second;
      if (events > 0) {
        row.fraction = static_cast<double>(row.count) / events;
        row.std_error =
            std::sqrt(row.fraction * (1.0 - row.fraction) / events);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Two-squeezer interference sweep.

/// Beam splitter cell with reflectivity angle theta and phase phi.
inline CMat interference_cell(double theta, double phi) {
  CMat u(2, 2);
  const Complex phase(std::cos(phi), std::sin(phi));
  u(0, 0) = std::cos(theta / 2);
  u(0, 1) = phase * std::sin(theta / 2);
  u(1, 0) = -std::conj(phase) * std::sin(theta / 2);
  u(1, 1) = std::cos(theta / 2);
  return u;
}

/// theta = pi/2 cell embedded on signal modes (k, l) of the identity.
inline CMat sweep_unitary(int k, int l, double phi) {
  CMat u = CMat::Identity(kDevicePairs, kDevicePairs);
  const CMat cell = interference_cell(M_PI / 2, phi);
  u(k, k) = cell(0, 0);
  u(k, l) = cell(0, 1);
  u(l, k) = cell(1, 0);
  u(l, l) = cell(1, 1);
  return u;
}

struct SweepPoint {
  double phi = 0.0;
  // NRF traces in the order (k,k), (l,l), (k,l), (l,k), where the first
  // index is the signal mode and the second selects the idler mode + 4.
  std::array<StatResult, 4> nrf;
};

struct SweepFit {
  double n = 0.0;     // mean photons per interfering mode
  double eta = 0.0;   // transmissivity
  double phi0 = 0.0;  // phase offset
  double n_err = 0.0;
  double eta_err = 0.0;
  double phi0_err = 0.0;
  double chi2 = 0.0;
  bool converged = false;
};

struct SweepResult {
  int mode_k = 0;
  int mode_l = 1;
  std::vector<SweepPoint> points;
  SweepFit fit;
};

/// Closed-form traces at theta = pi/2: same-pair NRF dips to 1 - eta when
/// the pairing survives, cross-pair mirrors it around 1 + n.
inline double sweep_model_same(double phi, double n, double eta, double phi0) {
  const double s = std::sin(phi + phi0);
  return 1.0 - eta + (eta + n) * s * s;
}

inline double sweep_model_cross(double phi, double n, double eta, double phi0) {
  const double s = std::sin(phi + phi0);
  return 1.0 + n - (eta + n) * s * s;
}

/// Joint weighted fit of (n, eta, phi0) to all four traces.
inline SweepFit fit_sweep(const std::vector<SweepPoint>& points) {
  require(points.size() >= 3, "fit_sweep: at least 3 sweep points required");
  const auto residuals = [&](const RVec& x) {
    RVec res(4 * points.size());
    int k = 0;
    for (const SweepPoint& pt : points) {
      for (int t = 0; t < 4; ++t) {
        const double model =
            t < 2 ? sweep_model_same(pt.phi, x(0), x(1), x(2))
                  : sweep_model_cross(pt.phi, x(0), x(1), x(2));
        const double sigma = std::max(pt.nrf[t].std_error, 1e-9);
        res(k++) = (pt.nrf[t].value - model) / sigma;
      }
    }
    return res;
  };
  double lo = points.front().nrf[0].value, hi = lo;
  for (const SweepPoint& pt : points)
    for (int t = 0; t < 4; ++t) {
      lo = std::min(lo, pt.nrf[t].value);
      hi = std::max(hi, pt.nrf[t].value);
    }
  RVec x0(3);
  x0 << std::max(hi - 1.0, 0.01), std::clamp(1.0 - lo, 0.01, 0.99), 0.0;
  const LMResult lm = levenberg_marquardt(residuals, x0);
  SweepFit fit;
  fit.n = lm.params(0);
  fit.eta = lm.params(1);
  fit.phi0 = lm.params(2);
  fit.n_err = std::sqrt(std::max(0.0, lm.covariance(0, 0)));
  fit.eta_err = std::sqrt(std::max(0.0, lm.covariance(1, 1)));
  fit.phi0_err = std::sqrt(std::max(0.0, lm.covariance(2, 2)));
  fit.chi2 = lm.chi2;
  fit.converged = lm.converged;
  return fit;
}

/// Interference sweep on signal pair (k, l): for each phase, program the
/// theta = pi/2 cell, sample the device with only squeezers k and l enabled,
/// and measure the four NRF traces; then fit (n, eta, phi0) jointly. Each
/// point uses the derived seed mix(seed, point index), so the sweep is
/// deterministic as a whole.
inline SweepResult interference_sweep(const ChipSpec& chip, int k, int l,
                                      const std::vector<double>& phis,
                                      std::uint64_t shots_per_point,
                                      std::uint64_t seed, int threads = 0) {
  require(k >= 0 && k < kDevicePairs && l >= 0 && l < kDevicePairs,
          "interference_sweep: pair indices must lie in 0..3");
  require(k != l, "interference_sweep: pair indices must be distinct");
  require(!phis.empty(), "interference_sweep: empty phase list");
  require(shots_per_point >= 16,
          "interference_sweep: at least 16 shots per point required");
  SweepResult out;
  out.mode_k = k;
  out.mode_l = l;
  for (std::size_t j = 0; j < phis.size(); ++j) {
    JobSpec job;
    job.unitary = sweep_unitary(k, l, phis[j]);
    job.squeezers_on = {false, false, false, false};
    job.squeezers_on[k] = true;
    job.squeezers_on[l] = true;
    job.shots = shots_per_point;
    job.total_cutoff = kDeviceCutoffCap;
    job.seed = detail::mix_seed(seed, j);
    const std::vector<Pattern> samples = sample(chip, job, threads);
    SweepPoint pt;
    pt.phi = phis[j];
    pt.nrf[0] = nrf(samples, k, k + kDevicePairs);
    pt.nrf[1] = nrf(samples, l, l + kDevicePairs);
    pt.nrf[2] = nrf(samples, k, l + kDevicePairs);
    pt.nrf[3] = nrf(samples, l, k + kDevicePairs);
    out.points.push_back(pt);
  }
  out.fit = fit_sweep(out.points);
  return out;
}

/// Evenly spaced sweep phases covering one period of sin^2.
inline std::vector<double> default_sweep_phis(int n_points = 40) {
  require(n_points >= 1, "default_sweep_phis: need at least one point");
  std::vector<double> phis(n_points);
  for (int j = 0; j < n_points; ++j) phis[j] = M_PI * j / n_points;
  return phis;
}

}  // namespace gbsim
