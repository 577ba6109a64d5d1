#pragma once

// Matrix functions behind Gaussian output probabilities: hafnian, permanent,
// index repetition, and the factorizations used by the problem encoders.
// The matching-enumeration hafnian and the expansion permanent are the
// reference kernels; the power-trace hafnian and Ryser permanent are the fast
// paths and every dispatch is cross-tested against the reference.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "gbsim/errors.hpp"
#include "gbsim/types.hpp"

namespace gbsim {

namespace detail {

inline double max_abs(const CMat& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline Complex hafnian_matchings_rec(const CMat& a, std::uint32_t used, int n) {
  int i = 0;
  while (i < n && ((used >> i) & 1u)) ++i;
  if (i == n) return Complex(1.0, 0.0);
  used |= 1u << i;
  Complex sum(0.0, 0.0);
  for (int j = i + 1; j < n; ++j) {
    if ((used >> j) & 1u) continue;
    if (a(i, j) == Complex(0.0, 0.0)) continue;
    sum += a(i, j) * hafnian_matchings_rec(a, used | (1u << j), n);
  }
  return sum;
}

// Sum over perfect matchings, (n-1)!! products. Exact and slow; the anchor
// everything faster is tested against.
inline Complex hafnian_matchings(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return Complex(1.0, 0.0);
  if (n % 2 != 0) return Complex(0.0, 0.0);
  return hafnian_matchings_rec(a, 0u, n);
}

// Power-trace hafnian: inclusion-exclusion over the m = n/2 index pairs
// (2i, 2i+1). For a pair subset S, the contribution is the z^m coefficient of
// exp(sum_j tr((X A_S)^j) z^j / (2j)) with X the in-pair swap, so the total
// cost is O(2^(n/2) poly(n)). Requires a symmetric input.
inline Complex hafnian_power_trace(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return Complex(1.0, 0.0);
  if (n % 2 != 0) return Complex(0.0, 0.0);
  const int m = n / 2;
  Complex total(0.0, 0.0);
  std::vector<int> idx;
  idx.reserve(n);
  std::vector<Complex> c(m + 1), g(m + 1);
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    idx.clear();
    for (int p = 0; p < m; ++p) {
      if ((mask >> p) & 1u) {
        idx.push_back(2 * p);
        idx.push_back(2 * p + 1);
      }
    }
    const int k = static_cast<int>(idx.size());
    // B = X A_S; pairs stay adjacent in the submatrix, so the swap is local.
    CMat b(k, k);
    for (int r = 0; r < k; ++r)
      for (int col = 0; col < k; ++col) b(r, col) = a(idx[r ^ 1], idx[col]);
    std::fill(c.begin(), c.end(), Complex(0.0, 0.0));
    CMat pw = b;
    for (int j = 1; j <= m; ++j) {
      if (j > 1) pw = pw * b;
      c[j] = pw.trace() / Complex(2.0 * j, 0.0);
    }
    // g = exp(sum_j c_j z^j) via k g_k = sum_j j c_j g_{k-j}.
    std::fill(g.begin(), g.end(), Complex(0.0, 0.0));
    g[0] = Complex(1.0, 0.0);
    for (int kk = 1; kk <= m; ++kk) {
      Complex s(0.0, 0.0);
      for (int j = 1; j <= kk; ++j) s += static_cast<double>(j) * c[j] * g[kk - j];
      g[kk] = s / static_cast<double>(kk);
    }
    const int parity = (m - std::popcount(mask)) % 2;
    total += (parity == 0 ? 1.0 : -1.0) * g[m];
  }
  return total;
}

// Symmetry gate shared by the hafnian entry points; tolerance is absolute,
// scaled by the matrix magnitude.
inline CMat symmetrized_checked(const CMat& a, double tol,
                                const std::string& who) {
  const double dev = max_abs(a - a.transpose());
  if (dev > tol * (1.0 + max_abs(a)))
    throw ValidationError(who + ": input must be symmetric within " +
                          std::to_string(tol));
  return 0.5 * (a + a.transpose());
}

// Hafnian with no dimension cap; used internally where the probability
// formula needs 2*sum(s) up to 24.
inline Complex hafnian_any(const CMat& sym) {
  return sym.rows() <= 10 ? hafnian_matchings(sym) : hafnian_power_trace(sym);
}

inline Complex permanent_expansion_rec(const CMat& a, std::uint32_t used,
                                       int row, int n) {
  if (row == n) return Complex(1.0, 0.0);
  Complex sum(0.0, 0.0);
  for (int j = 0; j < n; ++j) {
    if ((used >> j) & 1u) continue;
    if (a(row, j) == Complex(0.0, 0.0)) continue;
    sum += a(row, j) * permanent_expansion_rec(a, used | (1u << j), row + 1, n);
  }
  return sum;
}

inline Complex permanent_expansion(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return Complex(1.0, 0.0);
  return permanent_expansion_rec(a, 0u, 0, n);
}

// Ryser's formula with Gray-code updates of the per-row column sums,
// O(2^n n).
inline Complex permanent_ryser(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return Complex(1.0, 0.0);
  std::vector<Complex> rowsum(n, Complex(0.0, 0.0));
  Complex total(0.0, 0.0);
  const std::uint64_t limit = 1ull << n;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < limit; ++k) {
    const int bit = std::countr_zero(k);
    const std::uint64_t flipped = 1ull << bit;
    gray ^= flipped;
    const double dir = (gray & flipped) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) rowsum[i] += dir * a(i, bit);
    Complex prod(1.0, 0.0);
    for (int i = 0; i < n; ++i) prod *= rowsum[i];
    const int popc = std::popcount(gray);
    total += ((n - popc) % 2 == 0 ? 1.0 : -1.0) * prod;
  }
  return total;
}

}  // namespace detail

/// Hafnian of a symmetric matrix (dimension <= 20). The empty matrix gives 1,
/// odd dimensions give 0. Inputs asymmetric beyond 1e-10 are rejected;
/// accepted inputs are symmetrized as (A + A^T)/2 before evaluation.
inline Complex hafnian(const CMat& a) {
  require(a.rows() == a.cols(), "hafnian: matrix must be square");
  const int n = static_cast<int>(a.rows());
  require(n <= 20, "hafnian: dimension must be at most 20");
  if (n == 0) return Complex(1.0, 0.0);
  if (n % 2 != 0) return Complex(0.0, 0.0);
  return detail::hafnian_any(detail::symmetrized_checked(a, 1e-10, "hafnian"));
}

/// Permanent of a square matrix (dimension <= 20).
inline Complex permanent(const CMat& a) {
  require(a.rows() == a.cols(), "permanent: matrix must be square");
  const int n = static_cast<int>(a.rows());
  require(n <= 20, "permanent: dimension must be at most 20");
  if (n <= 8) return detail::permanent_expansion(a);
  return detail::permanent_ryser(a);
}

/// Row/column repetition with independent row and column multiplicities;
/// the (i,j) block of the result is an s[i] x t[j] tile of a(i,j).
inline CMat repeat_rows_cols(const CMat& a, const std::vector<int>& s,
                             const std::vector<int>& t) {
  require(static_cast<std::size_t>(a.rows()) == s.size(),
          "repeat_rows_cols: row multiplicities must match matrix rows");
  require(static_cast<std::size_t>(a.cols()) == t.size(),
          "repeat_rows_cols: column multiplicities must match matrix columns");
  for (int v : s) require(v >= 0, "repeat_rows_cols: multiplicities must be >= 0");
  for (int v : t) require(v >= 0, "repeat_rows_cols: multiplicities must be >= 0");
  std::vector<int> rows, cols;
  for (std::size_t i = 0; i < s.size(); ++i)
    rows.insert(rows.end(), s[i], static_cast<int>(i));
  for (std::size_t j = 0; j < t.size(); ++j)
    cols.insert(cols.end(), t[j], static_cast<int>(j));
  CMat out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = a(rows[r], cols[c]);
  return out;
}

/// Joint row+column repetition, the form entering the hafnian formula;
/// preserves symmetry.
inline CMat repeat_rows_cols(const CMat& a, const std::vector<int>& s) {
  return repeat_rows_cols(a, s, s);
}

struct HafnianPermanentPair {
  Complex hafnian_value;
  Complex permanent_value;

  double relative_gap() const {
    const double scale = 1.0 + std::abs(permanent_value);
    return std::abs(hafnian_value - permanent_value) / scale;
  }
};

/// Evaluates both sides of Haf([[0, C], [C^T, 0]]) = Per(C) for a square C of
/// dimension <= 8; callers compare via relative_gap().
inline HafnianPermanentPair block_hafnian_equals_permanent(const CMat& c) {
  require(c.rows() == c.cols(),
          "block_hafnian_equals_permanent: matrix must be square");
  const int n = static_cast<int>(c.rows());
  require(n <= 8, "block_hafnian_equals_permanent: dimension must be at most 8");
  CMat block = CMat::Zero(2 * n, 2 * n);
  block.topRightCorner(n, n) = c;
  block.bottomLeftCorner(n, n) = c.transpose();
  return {detail::hafnian_any(block), permanent(c)};
}

/// Max deviation of U^dag U from the identity, compared against tol.
inline bool is_unitary(const CMat& u, double tol) {
  if (u.rows() != u.cols() || u.rows() == 0) return false;
  const CMat gram = u.adjoint() * u;
  const CMat eye = CMat::Identity(u.rows(), u.cols());
  return detail::max_abs(gram - eye) <= tol;
}

struct Eigendecomposition {
  RVec values;   // sorted by descending |value|, ties broken descending
  RMat vectors;  // columns; first nonzero component made positive
};

/// Eigendecomposition of a real symmetric matrix with a deterministic
/// ordering and sign convention, so encoders built on it are reproducible.
/// Reconstruction V diag(values) V^T matches the input to 1e-8.
inline Eigendecomposition symmetric_eigendecomposition(const RMat& a,
                                                       double tol = 1e-10) {
  require(a.rows() == a.cols(),
          "symmetric_eigendecomposition: matrix must be square");
  const int n = static_cast<int>(a.rows());
  require(n >= 1, "symmetric_eigendecomposition: matrix must be nonempty");
  const double scale = 1.0 + (a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale,
          "symmetric_eigendecomposition: matrix must be symmetric");
  const RMat sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> solver(sym);
  if (solver.info() != Eigen::Success)
    throw ComputationError("symmetric_eigendecomposition: solver failed");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  const RVec& ev = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const double ax = std::abs(ev(x)), ay = std::abs(ev(y));
    if (ax != ay) return ax > ay;
    return ev(x) > ev(y);
  });
  Eigendecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values(k) = ev(order[k]);
    RVec v = solver.eigenvectors().col(order[k]);
    for (int i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    out.vectors.col(k) = v;
  }
  return out;
}

struct SingularValueDecomposition {
  RMat left;     // J = left * values.asDiagonal() * right
  RVec values;   // descending
  RMat right;    // the right factor itself, not its transpose
};

/// SVD of a real square matrix, returned as J = U_L Sigma U_R with the right
/// factor untransposed and signs fixed so the first nonzero entry of each
/// left column is positive.
inline SingularValueDecomposition singular_value_decomposition(const RMat& j) {
  require(j.rows() == j.cols(), "singular_value_decomposition: matrix must be square");
  require(j.rows() >= 1, "singular_value_decomposition: matrix must be nonempty");
  Eigen::JacobiSVD<RMat> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SingularValueDecomposition out;
  out.left = svd.matrixU();
  out.values = svd.singularValues();
  out.right = svd.matrixV().transpose();
  const int n = static_cast<int>(j.rows());
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(out.left(i, k)) > 1e-12) {
        if (out.left(i, k) < 0.0) {
          out.left.col(k) = -out.left.col(k);
          out.right.row(k) = -out.right.row(k);
        }
        break;
      }
    }
  }
  return out;
}

/// Closest unitary in Frobenius norm (polar factor U V^dag of the SVD).
inline CMat polar_unitary_factor(const CMat& a) {
  require(a.rows() == a.cols(), "polar_unitary_factor: matrix must be square");
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Closest orthogonal matrix to a real square matrix.
inline RMat polar_orthogonal_factor(const RMat& a) {
  require(a.rows() == a.cols(), "polar_orthogonal_factor: matrix must be square");
  Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace gbsim
