#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "gbsim/errors.hpp"
#include "gbsim/matrix_kernels.hpp"
#include "oracles.hpp"

using gbsim::CMat;
using gbsim::Complex;
using gbsim::RMat;
using gbsim::RVec;

namespace {

double rel_gap(Complex a, Complex b) {
  return std::abs(a - b) / (1.0 + std::abs(b));
}

}  // namespace

TEST_CASE("hafnian base cases", "[matrix_kernels]") {
  CHECK(gbsim::hafnian(CMat(0, 0)) == Complex(1.0, 0.0));
  CHECK(gbsim::hafnian(CMat::Zero(3, 3)) == Complex(0.0, 0.0));
  CMat one(1, 1);
  one(0, 0) = Complex(5.0, 1.0);
  CHECK(gbsim::hafnian(one) == Complex(0.0, 0.0));

  CMat two(2, 2);
  two << Complex(1.0, 0.0), Complex(2.0, -3.0), Complex(2.0, -3.0),
      Complex(4.0, 0.0);
  CHECK(gbsim::hafnian(two) == Complex(2.0, -3.0));
}

TEST_CASE("hafnian of all-ones is (2m-1)!!", "[matrix_kernels]") {
  for (int m : {1, 2, 3, 4, 6}) {
    const CMat ones = CMat::Ones(2 * m, 2 * m);
    const Complex h = gbsim::hafnian(ones);
    CHECK(std::abs(h - Complex(oracle::double_factorial_odd(m), 0.0)) < 1e-9);
  }
}

TEST_CASE("hafnian matches the permutation-sum oracle", "[matrix_kernels]") {
  for (int n : {2, 4, 6, 8}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const CMat a = oracle::random_symmetric(n, 97 * n + seed);
      const Complex lib = gbsim::hafnian(a);
      const Complex ref = oracle::hafnian_permutation_sum(a);
      INFO("n=" << n << " seed=" << seed);
      CHECK(rel_gap(lib, ref) < 1e-12);
    }
  }
}

TEST_CASE("power-trace path agrees with matching enumeration", "[matrix_kernels]") {
  // Public dispatch flips to the power-trace kernel above 10; cross the two
  // internal kernels directly at several sizes spanning the boundary.
  for (int n : {4, 8, 10, 12, 14}) {
    const CMat a = oracle::random_symmetric(n, 1000 + n);
    const Complex fast = gbsim::detail::hafnian_power_trace(a);
    const Complex slow = gbsim::detail::hafnian_matchings(a);
    INFO("n=" << n);
    CHECK(rel_gap(fast, slow) < 1e-11);
  }
}

TEST_CASE("hafnian input validation", "[matrix_kernels]") {
  CHECK_THROWS_AS(gbsim::hafnian(CMat::Zero(2, 3)), gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::hafnian(CMat::Zero(22, 22)), gbsim::ValidationError);
  CMat skew = CMat::Zero(4, 4);
  skew(0, 1) = Complex(1.0, 0.0);
  skew(1, 0) = Complex(-1.0, 0.0);
  CHECK_THROWS_AS(gbsim::hafnian(skew), gbsim::ValidationError);

  // Deviation within 1e-10 is allowed and symmetrized away.
  CMat nearly = oracle::random_symmetric(4, 7);
  nearly(0, 1) += Complex(1e-12, 0.0);
  CHECK_NOTHROW(gbsim::hafnian(nearly));
}

TEST_CASE("permanent matches the permutation-sum oracle", "[matrix_kernels]") {
  CHECK(gbsim::permanent(CMat(0, 0)) == Complex(1.0, 0.0));
  CMat two(2, 2);
  two << Complex(1.0, 0.0), Complex(2.0, 0.0), Complex(3.0, 0.0),
      Complex(4.0, 0.0);
  CHECK(std::abs(gbsim::permanent(two) - Complex(10.0, 0.0)) < 1e-12);
  CHECK(std::abs(gbsim::permanent(CMat::Identity(5, 5)) - Complex(1.0, 0.0)) <
        1e-12);

  for (int n : {3, 5, 8}) {
    const CMat a = oracle::random_complex(n, 300 + n);
    CHECK(rel_gap(gbsim::permanent(a), oracle::permanent_permutation_sum(a)) <
          1e-12);
  }
  CHECK_THROWS_AS(gbsim::permanent(CMat::Zero(21, 21)), gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::permanent(CMat::Zero(2, 3)), gbsim::ValidationError);
}

TEST_CASE("Ryser path agrees with the expansion path", "[matrix_kernels]") {
  for (int n : {9, 11}) {
    const CMat a = oracle::random_complex(n, 40 + n);
    const Complex ryser = gbsim::detail::permanent_ryser(a);
    const Complex expansion = gbsim::detail::permanent_expansion(a);
    CHECK(rel_gap(ryser, expansion) < 1e-10);
  }
}

TEST_CASE("block hafnian equals permanent", "[matrix_kernels]") {
  for (int n : {2, 3, 4, 6}) {
    const CMat c = oracle::random_complex(n, 777 + n);
    const auto pair = gbsim::block_hafnian_equals_permanent(c);
    CHECK(pair.relative_gap() < 1e-12);
    CHECK(rel_gap(pair.permanent_value, oracle::permanent_permutation_sum(c)) <
          1e-12);
  }
  CHECK_THROWS_AS(gbsim::block_hafnian_equals_permanent(CMat::Zero(9, 9)),
                  gbsim::ValidationError);
}

TEST_CASE("repeat_rows_cols tiles entries by multiplicity", "[matrix_kernels]") {
  CMat a(2, 2);
  a << Complex(1.0, 0.0), Complex(2.0, 0.0), Complex(3.0, 0.0),
      Complex(4.0, 0.0);
  const CMat r = gbsim::repeat_rows_cols(a, {2, 1}, {0, 3});
  REQUIRE(r.rows() == 3);
  REQUIRE(r.cols() == 3);
  CHECK(r(0, 0) == Complex(2.0, 0.0));
  CHECK(r(1, 2) == Complex(2.0, 0.0));
  CHECK(r(2, 1) == Complex(4.0, 0.0));

  // Joint repetition of a symmetric matrix stays symmetric.
  const CMat sym = oracle::random_symmetric(3, 11);
  const CMat rep = gbsim::repeat_rows_cols(sym, {2, 0, 1});
  CHECK((rep - rep.transpose()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(rep.rows() == 3);

  CHECK_THROWS_AS(gbsim::repeat_rows_cols(a, {1}), gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::repeat_rows_cols(a, {1, -1}), gbsim::ValidationError);
}

TEST_CASE("is_unitary", "[matrix_kernels]") {
  CHECK(gbsim::is_unitary(CMat::Identity(4, 4), 1e-12));
  CHECK(gbsim::is_unitary(oracle::random_unitary(4, 5), 1e-12));
  CHECK_FALSE(gbsim::is_unitary(2.0 * CMat::Identity(4, 4), 1e-6));
  CHECK_FALSE(gbsim::is_unitary(CMat::Zero(3, 4), 1e-6));
  CHECK_FALSE(gbsim::is_unitary(CMat(0, 0), 1e-6));
}

TEST_CASE("symmetric eigendecomposition conventions", "[matrix_kernels]") {
  RMat swap(2, 2);
  swap << 0.0, 1.0, 1.0, 0.0;
  const auto eig = gbsim::symmetric_eigendecomposition(swap);
  // |1| = |-1| ties break toward the positive eigenvalue.
  CHECK(eig.values(0) == Catch::Approx(1.0));
  CHECK(eig.values(1) == Catch::Approx(-1.0));
  CHECK(eig.vectors(0, 0) > 0.0);
  CHECK(eig.vectors(0, 1) > 0.0);

  const RMat a = oracle::random_real_symmetric(5, 21);
  const auto full = gbsim::symmetric_eigendecomposition(a);
  const RMat back =
      full.vectors * full.values.asDiagonal() * full.vectors.transpose();
  CHECK((back - a).cwiseAbs().maxCoeff() < 1e-8);
  for (int k = 1; k < 5; ++k)
    CHECK(std::abs(full.values(k - 1)) >= std::abs(full.values(k)) - 1e-12);

  RMat asym(2, 2);
  asym << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(gbsim::symmetric_eigendecomposition(asym),
                  gbsim::ValidationError);
}

TEST_CASE("singular value decomposition conventions", "[matrix_kernels]") {
  RMat d = RMat::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -2.0;
  const auto svd = gbsim::singular_value_decomposition(d);
  CHECK(svd.values(0) == Catch::Approx(3.0));
  CHECK(svd.values(1) == Catch::Approx(2.0));

  oracle::Rng rng(3);
  RMat j(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) j(i, k) = rng.symmetric();
  const auto full = gbsim::singular_value_decomposition(j);
  const RMat back = full.left * full.values.asDiagonal() * full.right;
  CHECK((back - j).cwiseAbs().maxCoeff() < 1e-12);
  for (int k = 1; k < 4; ++k) CHECK(full.values(k - 1) >= full.values(k));
  for (int k = 0; k < 4; ++k) {
    int lead = 0;
    while (lead < 4 && std::abs(full.left(lead, k)) <= 1e-12) ++lead;
    REQUIRE(lead < 4);
    CHECK(full.left(lead, k) > 0.0);
  }
}

TEST_CASE("polar factors project to the closest isometry", "[matrix_kernels]") {
  const CMat u = oracle::random_unitary(4, 9);
  CHECK((gbsim::polar_unitary_factor(u) - u).cwiseAbs().maxCoeff() < 1e-12);

  // A small perturbation projects back to something unitary and nearby.
  CMat bent = u;
  bent(0, 0) += Complex(5e-4, 0.0);
  const CMat proj = gbsim::polar_unitary_factor(bent);
  CHECK(gbsim::is_unitary(proj, 1e-12));
  CHECK((proj - u).cwiseAbs().maxCoeff() < 2e-3);

  const RMat o = gbsim::polar_orthogonal_factor(oracle::random_real_symmetric(3, 8));
  CHECK((o * o.transpose() - RMat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}
