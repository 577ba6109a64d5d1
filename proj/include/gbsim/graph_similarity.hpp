#pragma once

// Graph similarity via orbit-probability feature vectors. An 8-vertex graph
// whose adjacency matrix has the bipartite block form A = [[0, C], [C^T, 0]]
// with symmetric 4x4 block C is encoded by eigendecomposing
// C = V diag(lambda) V^T: squeezer j runs at r_j = atanh|lambda_j| and the
// programmed unitary is V with an i phase on columns of negative eigenvalue,
// so that U diag(tanh r) U^T = C. Feature vectors collect orbit
// probabilities of the resulting distribution; isomorphic graphs (related by
// a simultaneous permutation of both blocks) give identical vectors when the
// chip is mode-symmetric.

#include <cmath>
#include <string>
#include <vector>

#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"
#include "gbsim/matrix_kernels.hpp"
#include "gbsim/statistics.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

struct GraphInput {
  RMat adjacency;  // 8x8
};

/// Validates the bipartite block structure and returns the symmetrized
/// off-diagonal block C. The bundled adjacency data is printed to four
/// decimals, so symmetry is enforced at 1e-3 and repaired by averaging.
inline RMat graph_c_block(const GraphInput& in) {
  require(in.adjacency.rows() == kDeviceModes &&
              in.adjacency.cols() == kDeviceModes,
          "graph: adjacency matrix must be 8x8");
  const RMat& a = in.adjacency;
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-3 * scale,
          "graph: adjacency matrix must be symmetric");
  const RMat sym = 0.5 * (a + a.transpose());
  require(sym.topLeftCorner(4, 4).cwiseAbs().maxCoeff() <= 1e-12 &&
              sym.bottomRightCorner(4, 4).cwiseAbs().maxCoeff() <= 1e-12,
          "graph: not bipartite across the squeezer pairs; the diagonal "
          "4x4 blocks must vanish");
  RMat c = sym.topRightCorner(4, 4);
  require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-3 * scale,
          "graph: the off-diagonal block must be symmetric for the "
          "eigendecomposition encoding");
  return 0.5 * (c + c.transpose());
}

struct GraphJob {
  JobSpec job;
  RVec eigenvalues;  // of C, by descending magnitude
};

/// Encodes a graph as a device job. Every nonzero eigenvalue is kept (no
/// threshold), preserving U diag(tanh r) U^T = C to 1e-8; magnitudes at or
/// above 1 are not encodable as squeezing.
inline GraphJob graph_to_job(const GraphInput& in) {
  const RMat c = graph_c_block(in);
  const Eigendecomposition eig = symmetric_eigendecomposition(c);
  GraphJob out;
  out.eigenvalues = eig.values;
  std::vector<double> r(kDevicePairs, 0.0);
  CMat u = eig.vectors.cast<Complex>();
  for (int j = 0; j < kDevicePairs; ++j) {
    const double lam = eig.values(j);
    if (std::abs(lam) >= 1.0)
      throw ValidationError(
          "graph: unencodable, eigenvalue magnitude " +
          std::to_string(std::abs(lam)) + " is not below 1");
    r[j] = std::atanh(std::abs(lam));
    if (lam < 0.0) u.col(j) *= Complex(0.0, 1.0);
  }
  out.job.unitary = u;
  out.job.squeezing_override = r;
  for (int j = 0; j < kDevicePairs; ++j)
    out.job.squeezers_on[j] = r[j] > 0.0;
  // Encoding invariant; a violation means the decomposition went wrong.
  CVec tanh_r(kDevicePairs);
  for (int j = 0; j < kDevicePairs; ++j) tanh_r(j) = std::tanh(r[j]);
  const CMat back = u * tanh_r.asDiagonal() * u.transpose();
  if ((back - c.cast<Complex>()).cwiseAbs().maxCoeff() > 1e-8)
    throw ComputationError("graph: encoding round-trip exceeded 1e-8");
  return out;
}

/// Simultaneous relabeling of both vertex blocks: block-diagonal permutation
/// P applied as P A P^T. The permutation is given on the four pair indices,
/// zero-based.
inline GraphInput permute_graph(const GraphInput& in,
                                const std::vector<int>& perm) {
  require(in.adjacency.rows() == kDeviceModes &&
              in.adjacency.cols() == kDeviceModes,
          "permute_graph: adjacency matrix must be 8x8");
  require(perm.size() == kDevicePairs,
          "permute_graph: permutation must list 4 vertices");
  std::vector<bool> seen(kDevicePairs, false);
  for (int v : perm) {
    require(v >= 0 && v < kDevicePairs,
            "permute_graph: permutation entries must lie in 0..3");
    require(!seen[v], "permute_graph: permutation entries must be distinct");
    seen[v] = true;
  }
  std::vector<int> full(kDeviceModes);
  for (int i = 0; i < kDevicePairs; ++i) {
    full[i] = perm[i];
    full[kDevicePairs + i] = kDevicePairs + perm[i];
  }
  GraphInput out;
  out.adjacency.resize(kDeviceModes, kDeviceModes);
  for (int i = 0; i < kDeviceModes; ++i)
    for (int j = 0; j < kDeviceModes; ++j)
      out.adjacency(full[i], full[j]) = in.adjacency(i, j);
  return out;
}

/// Exact feature vector: orbit probabilities of the truncated distribution.
inline RVec feature_vector(const PatternDistribution& dist,
                           const std::vector<Pattern>& orbits) {
  require(!orbits.empty(), "feature_vector: empty orbit list");
  RVec out(orbits.size());
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    require(pattern_total(orbits[i]) <= dist.cutoff,
            "feature_vector: orbit total exceeds the distribution cutoff");
    out(static_cast<int>(i)) = orbit_probability(dist, orbits[i]);
  }
  return out;
}

struct SampledFeatureVector {
  RVec values;
  RVec std_errors;
};

/// Sampled feature vector with binomial errors.
inline SampledFeatureVector feature_vector(const std::vector<Pattern>& samples,
                                           const std::vector<Pattern>& orbits) {
  require(!orbits.empty(), "feature_vector: empty orbit list");
  SampledFeatureVector out;
  out.values.resize(orbits.size());
  out.std_errors.resize(orbits.size());
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    const StatResult r = orbit_probability(samples, orbits[i]);
    out.values(static_cast<int>(i)) = r.value;
    out.std_errors(static_cast<int>(i)) = r.std_error;
  }
  return out;
}

/// Mode-symmetric chip for graph runs: per-mode losses are averaged so that
/// vertex relabelings act as exact mode permutations of the distribution, and
/// detector noise is dropped entirely. Noise is not part of the graph
/// embedding; excluding it keeps orbit features exactly isomorphism-invariant
/// and makes the empty graph map to the all-zero feature vector.
inline ChipSpec uniformized_chip(const ChipSpec& chip) {
  chip.validate();
  double eta = 0.0;
  for (int m = 0; m < kDeviceModes; ++m) eta += chip.eta[m];
  ChipSpec out = chip;
  out.eta.assign(kDeviceModes, eta / kDeviceModes);
  out.nbar.assign(kDeviceModes, 0.0);
  return out;
}

}  // namespace gbsim
