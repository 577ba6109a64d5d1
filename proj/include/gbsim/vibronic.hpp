#pragma once

// Vibronic absorption profiles on the device. A molecule is described by its
// four ground-state frequencies omega, four excited-state frequencies
// omega_prime (cm^-1) and the Duschinsky rotation U_D between the normal
// coordinates. The device programs the right factor U_R of the SVD of
//   J = Omega' U_D Omega^{-1},   Omega = diag(sqrt(omega)),
// drives one squeezer, and maps each detected pattern S to the transition
// frequency
//   omega(S) = sum_k omega'_k S_k - sum_k omega_k S_{4+k},
// accumulating probability mass into frequency bins (the vacuum outcome
// carries no transition and is excluded).

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"
#include "gbsim/matrix_kernels.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

struct VibronicInput {
  RVec omega;        // ground-state frequencies, 4 entries > 0
  RVec omega_prime;  // excited-state frequencies, 4 entries > 0
  RMat duschinsky;   // 4x4, orthogonal within 1e-3
  double squeezing = 1.0;
};

/// Validates and canonicalizes a molecule description; the Duschinsky matrix
/// is replaced by its orthogonal polar projection.
inline VibronicInput validated_vibronic(const VibronicInput& in) {
  VibronicInput out = in;
  require(out.omega.size() == kDevicePairs &&
              out.omega_prime.size() == kDevicePairs,
          "vibronic: four modes per electronic state required");
  for (int i = 0; i < kDevicePairs; ++i) {
    require(out.omega(i) > 0.0 && out.omega_prime(i) > 0.0,
            "vibronic: frequencies must be positive");
  }
  require(out.duschinsky.rows() == kDevicePairs &&
              out.duschinsky.cols() == kDevicePairs,
          "vibronic: Duschinsky matrix must be 4x4");
  const RMat gram = out.duschinsky.transpose() * out.duschinsky;
  const RMat eye = RMat::Identity(kDevicePairs, kDevicePairs);
  require((gram - eye).cwiseAbs().maxCoeff() <= 1e-3,
          "vibronic: Duschinsky matrix deviates from orthogonality beyond 1e-3");
  require(out.squeezing >= 0.0 && out.squeezing <= kMaxSqueezing,
          "vibronic: squeezing must lie in [0, 4]");
  out.duschinsky = polar_orthogonal_factor(out.duschinsky);
  return out;
}

struct VibronicJob {
  JobSpec job;
  RVec singular_values;  // of J, descending
};

/// Builds the device job for a molecule: unitary U_R from the SVD of J, and
/// the molecule's squeezing on the first squeezer pair.
inline VibronicJob vibronic_to_job(const VibronicInput& input_raw) {
  const VibronicInput input = validated_vibronic(input_raw);
  RMat omega_sqrt = RMat::Zero(kDevicePairs, kDevicePairs);
  RMat omega_prime_sqrt = RMat::Zero(kDevicePairs, kDevicePairs);
  for (int i = 0; i < kDevicePairs; ++i) {
    require(input.omega(i) > 0.0,
            "vibronic_to_job: frequency matrix must be nonsingular");
    omega_sqrt(i, i) = std::sqrt(input.omega(i));
    omega_prime_sqrt(i, i) = std::sqrt(input.omega_prime(i));
  }
  RMat omega_inv = omega_sqrt;
  for (int i = 0; i < kDevicePairs; ++i) omega_inv(i, i) = 1.0 / omega_sqrt(i, i);
  const RMat j = omega_prime_sqrt * input.duschinsky * omega_inv;
  const SingularValueDecomposition svd = singular_value_decomposition(j);
  VibronicJob out;
  out.singular_values = svd.values;
  out.job.unitary = svd.right.cast<Complex>();
  out.job.squeezing_override = std::vector<double>{input.squeezing, 0.0, 0.0, 0.0};
  out.job.squeezers_on = {true, false, false, false};
  return out;
}

/// Transition frequency of a detected pattern (cm^-1); excited-state quanta
/// add, ground-state quanta subtract.
inline double assign_frequency(const Pattern& s, const VibronicInput& input) {
  require(static_cast<int>(s.size()) == kDeviceModes,
          "assign_frequency: 8-mode pattern required");
  double freq = 0.0;
  for (int k = 0; k < kDevicePairs; ++k) {
    freq += input.omega_prime(k) * s[k];
    freq -= input.omega(k) * s[kDevicePairs + k];
  }
  return freq;
}

struct FCProfile {
  double bin_width = 100.0;
  std::map<int, double> mass;       // bin index -> probability mass
  std::map<int, double> std_error;  // sampled profiles only
  double vacuum_probability = 0.0;  // excluded from the bins
  double tail = 0.0;                // truncated mass (exact profiles)
  std::uint64_t shots = 0;          // sampled profiles only

  /// Lorentzian-broadened intensity at a frequency.
  double broadened(double omega, double gamma) const {
    double acc = 0.0;
    for (const auto& [bin, m] : mass) {
      const double center = (bin + 0.5) * bin_width;
      const double d = omega - center;
      acc += m * gamma * gamma / (d * d + gamma * gamma);
    }
    return acc;
  }
};

namespace detail {

inline int frequency_bin(double freq, double bin_width) {
  return static_cast<int>(std::floor(freq / bin_width));
}

inline bool is_vacuum(const Pattern& s) {
  for (int v : s)
    if (v != 0) return false;
  return true;
}

}  // namespace detail

/// Exact profile: bins the truncated pattern distribution by transition
/// frequency. Masses sum to 1 - vacuum_probability - tail.
inline FCProfile franck_condon_profile_exact(const ChipSpec& chip,
                                             const JobSpec& job,
                                             const VibronicInput& input_raw,
                                             double bin_width,
                                             int threads = 0) {
  require(bin_width > 0.0, "franck_condon_profile: bin width must be positive");
  const VibronicInput input = validated_vibronic(input_raw);
  const PatternDistribution dist =
      exact_pattern_distribution(chip, job, job.total_cutoff, threads);
  FCProfile profile;
  profile.bin_width = bin_width;
  profile.tail = dist.tail;
  for (const auto& [s, p] : dist.probs) {
    if (detail::is_vacuum(s)) {
      profile.vacuum_probability += p;
      continue;
    }
    profile.mass[detail::frequency_bin(assign_frequency(s, input), bin_width)] += p;
  }
  return profile;
}

/// Sampled profile: bin fractions over the shot count with binomial errors.
inline FCProfile franck_condon_profile_sampled(const ChipSpec& chip,
                                               const JobSpec& job,
                                               const VibronicInput& input_raw,
                                               double bin_width,
                                               int threads = 0) {
  require(bin_width > 0.0, "franck_condon_profile: bin width must be positive");
  require(job.shots > 0, "franck_condon_profile: sampled profile needs shots > 0");
  const VibronicInput input = validated_vibronic(input_raw);
  const std::vector<Pattern> samples = sample(chip, job, threads);
  FCProfile profile;
  profile.bin_width = bin_width;
  profile.shots = job.shots;
  std::map<int, std::uint64_t> counts;
  std::uint64_t vacuum = 0;
  for (const Pattern& s : samples) {
    if (detail::is_vacuum(s)) {
      ++vacuum;
      continue;
    }
    ++counts[detail::frequency_bin(assign_frequency(s, input), bin_width)];
  }
  const double n = static_cast<double>(job.shots);
  profile.vacuum_probability = vacuum / n;
  for (const auto& [bin, c] : counts) {
    const double f = c / n;
    profile.mass[bin] = f;
    profile.std_error[bin] = std::sqrt(f * (1.0 - f) / n);
  }
  return profile;
}

}  // namespace gbsim
