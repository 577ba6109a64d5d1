#pragma once

// The eight-mode device: four two-mode squeezers feeding mode pairs
// (i, i+4), per-mode loss, one programmable 4x4 unitary applied to the
// signal block 0..3 and again to the idler block 4..7, and independent
// Poisson noise added at each detector. Each squeezer populates two
// independent Schmidt modes with strengths r1 >= r2, so the emitted light is
// the product of two independent Gaussian states; the detected distribution
// is their convolution plus noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gbsim/errors.hpp"
#include "gbsim/gaussian.hpp"
#include "gbsim/matrix_kernels.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

inline constexpr int kDeviceModes = 8;
inline constexpr int kDevicePairs = 4;
inline constexpr int kDeviceCutoffCap = 8;
// Sampling only builds per-state lookup tables, so it can afford a slightly
// higher cutoff than the full joint enumeration. Needed when heavy squeezing
// pushes the truncation tail past the 1% sampler guard at cutoff 8.
inline constexpr int kSampleCutoffCap = 10;

struct ChipSpec {
  std::vector<double> eta;   // per-mode transmissivity, 8 entries in (0, 1]
  std::vector<double> nbar;  // per-mode noise mean, 8 entries >= 0
  std::vector<double> r1;    // dominant Schmidt-mode squeezing per pair
  std::vector<double> r2;    // secondary Schmidt-mode squeezing per pair

  void validate() const {
    require(eta.size() == kDeviceModes, "chip: eta must list 8 modes");
    require(nbar.size() == kDeviceModes, "chip: nbar must list 8 modes");
    require(r1.size() == kDevicePairs, "chip: r1 must list 4 squeezers");
    require(r2.size() == kDevicePairs, "chip: r2 must list 4 squeezers");
    for (double e : eta)
      require(e > 0.0 && e <= 1.0, "chip: eta must lie in (0, 1]");
    for (double n : nbar) require(n >= 0.0, "chip: nbar must be >= 0");
    for (int i = 0; i < kDevicePairs; ++i) {
      require(r1[i] >= r2[i] && r2[i] >= 0.0,
              "chip: squeezing must satisfy r1 >= r2 >= 0");
      require(r1[i] <= kMaxSqueezing, "chip: squeezing must be at most 4");
    }
  }
};

struct JobSpec {
  CMat unitary;  // 4x4, applied to both mode blocks
  std::array<bool, kDevicePairs> squeezers_on{true, true, true, true};
  std::uint64_t shots = 0;
  int total_cutoff = kDeviceCutoffCap;
  std::uint64_t seed = 0;
  // Optional per-pair override: a single Schmidt mode per squeezer with these
  // r values, replacing the chip's (r1, r2). Used by the problem encoders.
  std::optional<std::vector<double>> squeezing_override;
};

/// Checks a job and canonicalizes its unitary: accepted as-is within 1e-6 of
/// unitary, replaced by its polar projection within 1e-3, rejected beyond.
inline JobSpec validated_job(const JobSpec& job) {
  JobSpec out = job;
  require(out.unitary.rows() == kDevicePairs && out.unitary.cols() == kDevicePairs,
          "job: unitary must be 4x4");
  if (!is_unitary(out.unitary, 1e-6)) {
    require(is_unitary(out.unitary, 1e-3),
            "job: matrix deviates from unitarity by more than 1e-3");
    out.unitary = polar_unitary_factor(out.unitary);
  }
  require(out.total_cutoff >= 0, "job: total_cutoff must be >= 0");
  if (out.squeezing_override) {
    require(out.squeezing_override->size() == kDevicePairs,
            "job: squeezing_override must list 4 squeezers");
    for (double r : *out.squeezing_override)
      require(r >= 0.0 && r <= kMaxSqueezing,
              "job: squeezing_override entries must lie in [0, 4]");
  }
  return out;
}

/// The two independent 8-mode Gaussian states emitted by the device, one per
/// Schmidt mode: squeeze pairs (i, i+4), apply per-mode loss, then the job
/// unitary on modes 0..3 and again on 4..7. Detector noise is not included
/// here; it is convolved in by the distribution and sampling routines.
inline std::array<GaussianState, 2> build_schmidt_states(const ChipSpec& chip,
                                                         const JobSpec& job_in) {
  chip.validate();
  const JobSpec job = validated_job(job_in);
  std::array<GaussianState, 2> out{vacuum(kDeviceModes), vacuum(kDeviceModes)};
  for (int k = 0; k < 2; ++k) {
    GaussianState st = vacuum(kDeviceModes);
    for (int i = 0; i < kDevicePairs; ++i) {
      if (!job.squeezers_on[i]) continue;
      double r = 0.0;
      if (job.squeezing_override)
        r = (k == 0) ? (*job.squeezing_override)[i] : 0.0;
      else
        r = (k == 0) ? chip.r1[i] : chip.r2[i];
      if (r > 0.0) st = apply_two_mode_squeezing(st, i, i + kDevicePairs, r);
    }
    for (int m = 0; m < kDeviceModes; ++m) st = apply_loss(st, m, chip.eta[m]);
    st = apply_interferometer(st, job.unitary, {0, 1, 2, 3});
    st = apply_interferometer(st, job.unitary, {4, 5, 6, 7});
    out[k] = st;
  }
  return out;
}

struct PatternDistribution {
  int modes = kDeviceModes;
  int cutoff = 0;
  std::map<Pattern, double> probs;  // patterns with total <= cutoff
  double tail = 0.0;                // 1 - sum(probs), the truncated mass
};

namespace detail {

inline void enumerate_patterns(const std::vector<int>& active, int modes,
                               int budget, std::size_t pos, Pattern& scratch,
                               std::vector<Pattern>& out) {
  if (pos == active.size()) {
    out.push_back(scratch);
    return;
  }
  // Leave room for later modes by iterating this mode's count up to budget.
  for (int c = 0; c <= budget; ++c) {
    scratch[active[pos]] = c;
    enumerate_patterns(active, modes, budget - c, pos + 1, scratch, out);
  }
  scratch[active[pos]] = 0;
}

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(hw == 0 ? 1 : std::min(hw, 8u));
}

// Distribution of one Gaussian state truncated at the total-photon cutoff.
// Only modes with nonzero mean photon number can fire, so enumeration runs
// over that subset. Each pattern is an independent hafnian; chunks are
// evaluated in parallel and results land in preassigned slots, keeping the
// result identical for any thread count.
inline PatternDistribution state_pattern_distribution(const GaussianState& st,
                                                      int cutoff,
                                                      int threads = 0) {
  PatternDistribution out;
  out.modes = st.modes;
  out.cutoff = cutoff;
  const PhotonMoments moments = photon_moments(st);
  std::vector<int> active;
  for (int m = 0; m < st.modes; ++m)
    if (moments.mean(m) > 1e-14) active.push_back(m);
  std::vector<Pattern> patterns;
  Pattern scratch(st.modes, 0);
  enumerate_patterns(active, st.modes, cutoff, 0, scratch, patterns);
  const FockProbabilityEvaluator eval(st);
  std::vector<double> probs(patterns.size(), 0.0);
  const int n_threads = resolve_threads(threads);
  if (n_threads <= 1 || patterns.size() < 64) {
    for (std::size_t i = 0; i < patterns.size(); ++i)
      probs[i] = eval.probability(patterns[i]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t]() {
        for (std::size_t i = t; i < patterns.size(); i += n_threads)
          probs[i] = eval.probability(patterns[i]);
      });
    }
    for (auto& th : pool) th.join();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    out.probs.emplace(std::move(patterns[i]), probs[i]);
    sum += probs[i];
  }
  out.tail = std::max(0.0, 1.0 - sum);
  return out;
}

inline std::vector<double> poisson_pmf(double lambda, int max_k) {
  std::vector<double> pmf(max_k + 1, 0.0);
  pmf[0] = std::exp(-lambda);
  for (int k = 1; k <= max_k; ++k) pmf[k] = pmf[k - 1] * lambda / k;
  return pmf;
}

// Convolution of two pattern distributions, truncated at the joint cutoff.
inline std::map<Pattern, double> convolve_truncated(
    const std::map<Pattern, double>& a, const std::map<Pattern, double>& b,
    int modes, int cutoff) {
  std::map<Pattern, double> out;
  Pattern sum(modes, 0);
  for (const auto& [sa, pa] : a) {
    const int ta = pattern_total(sa);
    for (const auto& [sb, pb] : b) {
      if (ta + pattern_total(sb) > cutoff) continue;
      for (int m = 0; m < modes; ++m) sum[m] = sa[m] + sb[m];
      out[sum] += pa * pb;
    }
  }
  return out;
}

// Folds one detector's Poisson noise into the joint distribution.
inline std::map<Pattern, double> convolve_poisson_mode(
    const std::map<Pattern, double>& a, int mode, double lambda, int cutoff) {
  if (lambda <= 0.0) return a;
  const std::vector<double> pmf = poisson_pmf(lambda, cutoff);
  std::map<Pattern, double> out;
  for (const auto& [s, p] : a) {
    const int total = pattern_total(s);
    Pattern shifted = s;
    for (int k = 0; total + k <= cutoff; ++k) {
      shifted[mode] = s[mode] + k;
      out[shifted] += p * pmf[k];
    }
  }
  return out;
}

}  // namespace detail

/// Exact detected-pattern distribution: the convolution of the two Schmidt
/// states and the per-mode Poisson noise, truncated at the total-photon
/// cutoff with the discarded mass recorded as the tail. Refuses cutoffs
/// above 8 on the 8-mode device (the hafnian count grows combinatorially).
inline PatternDistribution exact_pattern_distribution(const ChipSpec& chip,
                                                      const JobSpec& job,
                                                      int cutoff,
                                                      int threads = 0) {
  require(cutoff >= 0, "exact_pattern_distribution: cutoff must be >= 0");
  require(cutoff <= kDeviceCutoffCap,
          "exact_pattern_distribution: cutoff above 8 is refused on the "
          "8-mode device; the table size is combinatorial");
  const auto states = build_schmidt_states(chip, job);
  const PatternDistribution d1 =
      detail::state_pattern_distribution(states[0], cutoff, threads);
  const PatternDistribution d2 =
      detail::state_pattern_distribution(states[1], cutoff, threads);
  PatternDistribution out;
  out.modes = kDeviceModes;
  out.cutoff = cutoff;
  out.probs = detail::convolve_truncated(d1.probs, d2.probs, kDeviceModes, cutoff);
  for (int m = 0; m < kDeviceModes; ++m)
    out.probs = detail::convolve_poisson_mode(out.probs, m, chip.nbar[m], cutoff);
  double sum = 0.0;
  for (const auto& [s, p] : out.probs) sum += p;
  out.tail = std::max(0.0, 1.0 - sum);
  return out;
}

/// Distribution of the total detected photon number up to the cutoff (any
/// cutoff; totals need no pattern table). Sums to 1 - tail.
inline TotalPhotonDistribution total_photon_distribution(const ChipSpec& chip,
                                                         const JobSpec& job,
                                                         int cutoff) {
  require(cutoff >= 0, "total_photon_distribution: cutoff must be >= 0");
  const auto states = build_schmidt_states(chip, job);
  const TotalPhotonDistribution t1 = total_photon_distribution(states[0], cutoff);
  const TotalPhotonDistribution t2 = total_photon_distribution(states[1], cutoff);
  double lambda = 0.0;
  for (double n : chip.nbar) lambda += n;
  const std::vector<double> noise = detail::poisson_pmf(lambda, cutoff);
  TotalPhotonDistribution out;
  out.probs.assign(cutoff + 1, 0.0);
  for (int a = 0; a <= cutoff; ++a)
    for (int b = 0; a + b <= cutoff; ++b)
      for (int k = 0; a + b + k <= cutoff; ++k)
        out.probs[a + b + k] += t1.probs[a] * t2.probs[b] * noise[k];
  double sum = 0.0;
  for (double p : out.probs) sum += p;
  out.tail = std::max(0.0, 1.0 - sum);
  return out;
}

namespace detail {

// Deterministic substream seed for chunked sampling (splitmix64 finalizer):
// chunk results do not depend on how chunks are assigned to threads.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Top 53 bits of the generator output; uniform on [0, 1). Hand-rolled so the
// byte stream never depends on the standard library's distribution choices.
inline double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct CdfTable {
  std::vector<Pattern> patterns;
  std::vector<double> cdf;  // normalized, last entry exactly 1

  const Pattern& draw(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t i =
        std::min(static_cast<std::size_t>(it - cdf.begin()), patterns.size() - 1);
    return patterns[i];
  }
};

inline CdfTable make_cdf(const PatternDistribution& dist) {
  CdfTable t;
  t.patterns.reserve(dist.probs.size());
  t.cdf.reserve(dist.probs.size());
  double acc = 0.0;
  for (const auto& [s, p] : dist.probs) {
    acc += p;
    t.patterns.push_back(s);
    t.cdf.push_back(acc);
  }
  for (double& c : t.cdf) c /= acc;
  t.cdf.back() = 1.0;
  return t;
}

inline std::vector<double> poisson_cdf(double lambda) {
  std::vector<double> cdf;
  double pmf = std::exp(-lambda);
  double acc = pmf;
  cdf.push_back(acc);
  int k = 0;
  while (1.0 - acc > 1e-15 && k < 64) {
    ++k;
    pmf *= lambda / k;
    acc += pmf;
    cdf.push_back(acc);
  }
  cdf.back() = 1.0;
  return cdf;
}

inline int draw_index(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min(
      static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
}

}  // namespace detail

/// Monte Carlo samples from the device model: per shot, one inverse-CDF draw
/// from each truncated Schmidt-state table (renormalized) plus exact Poisson
/// noise per mode. Deterministic for a given seed, independent of thread
/// count (fixed-size chunks own derived substreams). Each state's truncated
/// tail must stay below 1e-2, otherwise the job's cutoff is too small.
inline std::vector<Pattern> sample(const ChipSpec& chip, const JobSpec& job_in,
                                   int threads = 0) {
  const JobSpec job = validated_job(job_in);
  chip.validate();
  require(job.total_cutoff <= kSampleCutoffCap,
          "sample: total_cutoff above 10 is refused on the 8-mode device");
  const auto states = build_schmidt_states(chip, job);
  std::array<detail::CdfTable, 2> tables;
  for (int k = 0; k < 2; ++k) {
    const PatternDistribution dist =
        detail::state_pattern_distribution(states[k], job.total_cutoff, threads);
    if (dist.tail >= 1e-2)
      throw ValidationError(
          "sample: truncated tail " + std::to_string(dist.tail) +
          " of Schmidt state " + std::to_string(k + 1) +
          " is not below 0.01; increase total_cutoff");
    tables[k] = detail::make_cdf(dist);
  }
  std::array<std::vector<double>, kDeviceModes> noise_cdf;
  for (int m = 0; m < kDeviceModes; ++m)
    noise_cdf[m] = detail::poisson_cdf(chip.nbar[m]);

  const std::uint64_t shots = job.shots;
  std::vector<Pattern> out(shots);
  constexpr std::uint64_t kChunk = 4096;
  const std::uint64_t n_chunks = (shots + kChunk - 1) / kChunk;
  const auto run_chunk = [&](std::uint64_t chunk) {
    std::mt19937_64 rng(detail::mix_seed(job.seed, chunk));
    const std::uint64_t begin = chunk * kChunk;
    const std::uint64_t end = std::min(shots, begin + kChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      const Pattern& s1 = tables[0].draw(detail::uniform_double(rng));
      const Pattern& s2 = tables[1].draw(detail::uniform_double(rng));
      Pattern s(kDeviceModes, 0);
      for (int m = 0; m < kDeviceModes; ++m) s[m] = s1[m] + s2[m];
      for (int m = 0; m < kDeviceModes; ++m)
        s[m] += detail::draw_index(noise_cdf[m], detail::uniform_double(rng));
      out[i] = std::move(s);
    }
  };
  const int n_threads = detail::resolve_threads(threads);
  if (n_threads <= 1 || n_chunks <= 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t]() {
        for (std::uint64_t c = t; c < n_chunks; c += n_threads) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace gbsim
