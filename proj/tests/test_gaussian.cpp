#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gbsim/errors.hpp"
#include "gbsim/fitting.hpp"
#include "gbsim/gaussian.hpp"
#include "oracles.hpp"

using gbsim::CMat;
using gbsim::Complex;
using gbsim::GaussianState;
using gbsim::Pattern;
using gbsim::RVec;

namespace {

// Joint photon-number pmf of a two-mode squeezed vacuum with transmissivity
// eta on both arms, computed by an independent covariance pipeline
// (numpy-equivalent reference run): r = 1.1, eta = 0.15, counts 0..3.
constexpr double kLossyTmsvGrid[4][4] = {
    {0.668875167329, 0.10176162226, 0.0154818541198, 0.00235538508195},
    {0.10176162226, 0.0489216415795, 0.0125303390528, 0.00268034698894},
    {0.0154818541198, 0.0125303390528, 0.00512613863513, 0.00152408055267},
    {0.00235538508195, 0.00268034698894, 0.00152408055267, 0.000601368827154},
};

GaussianState lossy_tmsv_state(double r, double eta) {
  GaussianState st = gbsim::vacuum(2);
  st = gbsim::apply_two_mode_squeezing(st, 0, 1, r);
  st = gbsim::apply_loss(st, 0, eta);
  st = gbsim::apply_loss(st, 1, eta);
  return st;
}

}  // namespace

TEST_CASE("vacuum state", "[gaussian]") {
  const GaussianState st = gbsim::vacuum(3);
  CHECK(st.modes == 3);
  CHECK((st.sigma - 0.5 * CMat::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(gbsim::fock_probability(st, {0, 0, 0}) == Catch::Approx(1.0));
  CHECK(gbsim::fock_probability(st, {1, 0, 0}) == Catch::Approx(0.0).margin(1e-15));
  CHECK_THROWS_AS(gbsim::vacuum(0), gbsim::ValidationError);
}

TEST_CASE("two-mode squeezed vacuum closed form", "[gaussian]") {
  for (double r : {0.3, 0.8, 1.162}) {
    GaussianState st = gbsim::vacuum(2);
    st = gbsim::apply_two_mode_squeezing(st, 0, 1, r);
    for (int n = 0; n <= 5; ++n) {
      const double expected = oracle::tmsv_probability(r, n);
      const double got = gbsim::fock_probability(st, {n, n});
      INFO("r=" << r << " n=" << n);
      CHECK(std::abs(got - expected) <= 1e-8 * expected);
    }
    // Photons come in pairs; unbalanced patterns carry no weight.
    CHECK(gbsim::fock_probability(st, {0, 1}) == Catch::Approx(0.0).margin(1e-12));
    CHECK(gbsim::fock_probability(st, {2, 1}) == Catch::Approx(0.0).margin(1e-12));
  }
  GaussianState st = gbsim::vacuum(2);
  CHECK_THROWS_AS(gbsim::apply_two_mode_squeezing(st, 0, 0, 0.5),
                  gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::apply_two_mode_squeezing(st, 0, 2, 0.5),
                  gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::apply_two_mode_squeezing(st, 0, 1, 4.5),
                  gbsim::ValidationError);
}

TEST_CASE("lossy TMSV matches the reference grid", "[gaussian]") {
  const GaussianState st = lossy_tmsv_state(1.1, 0.15);
  const gbsim::FockProbabilityEvaluator eval(st);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      INFO("pattern (" << a << ", " << b << ")");
      CHECK(eval.probability({a, b}) ==
            Catch::Approx(kLossyTmsvGrid[a][b]).epsilon(1e-9));
    }
  }

  // The binomial-thinning series is a third, covariance-free route.
  const gbsim::RMat series = gbsim::lossy_tmsv_joint(1.1, 0.15, 3);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      CHECK(series(a, b) == Catch::Approx(kLossyTmsvGrid[a][b]).epsilon(1e-9));
}

TEST_CASE("loss channel properties", "[gaussian]") {
  GaussianState st = gbsim::vacuum(2);
  st = gbsim::apply_two_mode_squeezing(st, 0, 1, 0.9);
  const double mu = std::sinh(0.9) * std::sinh(0.9);

  const GaussianState full = gbsim::apply_loss(st, 0, 1.0);
  CHECK((full.sigma - st.sigma).cwiseAbs().maxCoeff() < 1e-14);

  const GaussianState half = gbsim::apply_loss(st, 0, 0.4);
  const auto moments = gbsim::photon_moments(half);
  CHECK(moments.mean(0) == Catch::Approx(0.4 * mu).epsilon(1e-12));
  CHECK(moments.mean(1) == Catch::Approx(mu).epsilon(1e-12));

  CHECK_THROWS_AS(gbsim::apply_loss(st, 0, 1.5), gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::apply_loss(st, 0, -0.1), gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::apply_loss(st, 5, 0.5), gbsim::ValidationError);
}

TEST_CASE("interferometer conserves total photon number", "[gaussian]") {
  GaussianState st = gbsim::vacuum(4);
  st = gbsim::apply_two_mode_squeezing(st, 0, 2, 0.8);
  const double mu = std::sinh(0.8) * std::sinh(0.8);

  CMat bs(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  bs << Complex(s, 0.0), Complex(s, 0.0), Complex(-s, 0.0), Complex(s, 0.0);
  const GaussianState mixed = gbsim::apply_interferometer(st, bs, {0, 1});
  const auto moments = gbsim::photon_moments(mixed);
  CHECK(moments.mean(0) == Catch::Approx(0.5 * mu).epsilon(1e-12));
  CHECK(moments.mean(1) == Catch::Approx(0.5 * mu).epsilon(1e-12));
  CHECK(moments.mean(2) == Catch::Approx(mu).epsilon(1e-12));
  CHECK(moments.mean(3) == Catch::Approx(0.0).margin(1e-14));

  CHECK_THROWS_AS(gbsim::apply_interferometer(st, 2.0 * bs, {0, 1}),
                  gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::apply_interferometer(st, bs, {0, 0}),
                  gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::apply_interferometer(st, bs, {0}),
                  gbsim::ValidationError);
}

TEST_CASE("photon moments of a TMSV", "[gaussian]") {
  GaussianState st = gbsim::vacuum(2);
  st = gbsim::apply_two_mode_squeezing(st, 0, 1, 0.7);
  const double mu = std::sinh(0.7) * std::sinh(0.7);
  const auto m = gbsim::photon_moments(st);
  CHECK(m.mean(0) == Catch::Approx(mu).epsilon(1e-12));
  // Thermal marginal: Var = mu (1 + mu). Cross covariance |cosh sinh|^2.
  CHECK(m.covariance(0, 0) == Catch::Approx(mu * (1.0 + mu)).epsilon(1e-12));
  const double cs = std::cosh(0.7) * std::sinh(0.7);
  CHECK(m.covariance(0, 1) == Catch::Approx(cs * cs).epsilon(1e-12));
}

TEST_CASE("fock probability validation", "[gaussian]") {
  const GaussianState st = gbsim::vacuum(2);
  const gbsim::FockProbabilityEvaluator eval(st);
  CHECK_THROWS_AS(eval.probability({1}), gbsim::ValidationError);
  CHECK_THROWS_AS(eval.probability({-1, 0}), gbsim::ValidationError);
  CHECK_THROWS_AS(eval.probability({7, 6}), gbsim::ValidationError);

  GaussianState bad = gbsim::vacuum(1);
  bad.sigma = -CMat::Identity(2, 2);
  CHECK_THROWS_AS(gbsim::FockProbabilityEvaluator(bad), gbsim::ComputationError);
}

TEST_CASE("pure state machinery agrees with the covariance route", "[gaussian]") {
  // Lossless 3-pair device: squeeze (i, i+3), send both blocks through u.
  const int m = 3;
  const CMat u = oracle::random_unitary(m, 31);
  RVec r(m);
  r << 1.0, 0.7, 0.4;

  GaussianState st = gbsim::vacuum(2 * m);
  for (int i = 0; i < m; ++i)
    st = gbsim::apply_two_mode_squeezing(st, i, i + m, r(i));
  st = gbsim::apply_interferometer(st, u, {0, 1, 2});
  st = gbsim::apply_interferometer(st, u, {3, 4, 5});
  const gbsim::FockProbabilityEvaluator eval(st);

  const CMat c = gbsim::pure_state_c_matrix(u, r);
  const double q_det_sqrt = gbsim::pure_q_det_sqrt(r);

  // All signal/idler splits with at most 2 photons per side.
  std::vector<Pattern> sides;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; a + b <= 2; ++b)
      for (int d = 0; a + b + d <= 2; ++d) sides.push_back({a, b, d});
  for (const Pattern& s : sides) {
    for (const Pattern& t : sides) {
      const double pure = gbsim::pure_pattern_probability(c, s, t, q_det_sqrt);
      Pattern joint = s;
      joint.insert(joint.end(), t.begin(), t.end());
      const double fock = eval.probability(joint);
      INFO("s=(" << s[0] << s[1] << s[2] << ") t=(" << t[0] << t[1] << t[2] << ")");
      CHECK(std::abs(pure - fock) <= 1e-10 * (1.0 + fock));
    }
  }

  CHECK(gbsim::pure_pattern_probability(c, {1, 0, 0}, {0, 0, 0}, q_det_sqrt) ==
        0.0);
  CHECK_THROWS_AS(
      gbsim::pure_pattern_probability(c, {11, 0, 0}, {11, 0, 0}, q_det_sqrt),
      gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::pure_state_c_matrix(2.0 * u, r), gbsim::ValidationError);
}

TEST_CASE("total photon distribution from the generating function", "[gaussian]") {
  GaussianState st = gbsim::vacuum(2);
  st = gbsim::apply_two_mode_squeezing(st, 0, 1, 1.0);
  const auto dist = gbsim::total_photon_distribution(st, 8);
  for (int n = 0; n <= 4; ++n) {
    CHECK(dist.probs[2 * n] ==
          Catch::Approx(oracle::tmsv_probability(1.0, n)).epsilon(1e-10));
  }
  for (int n = 1; n <= 7; n += 2)
    CHECK(dist.probs[n] == Catch::Approx(0.0).margin(1e-12));
  double sum = dist.tail;
  for (double p : dist.probs) sum += p;
  CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));

  // Against the pattern table of the lossy state: totals are marginals.
  const GaussianState lossy = lossy_tmsv_state(1.1, 0.15);
  const auto totals = gbsim::total_photon_distribution(lossy, 3);
  const gbsim::FockProbabilityEvaluator eval(lossy);
  for (int n = 0; n <= 3; ++n) {
    double expected = 0.0;
    for (int a = 0; a <= n; ++a) expected += eval.probability({a, n - a});
    CHECK(totals.probs[n] == Catch::Approx(expected).epsilon(1e-10));
  }
  CHECK_THROWS_AS(gbsim::total_photon_distribution(st, -1),
                  gbsim::ValidationError);
}
