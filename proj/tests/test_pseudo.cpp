#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "bekw/fit.hpp"
#include "bekw/pseudo.hpp"
#include "oracle.hpp"

using namespace bekw;

namespace {

// Expected log-density of the target family under the source law, evaluated
// entirely with the test-side tanh-sinh oracle.
double lambda_oracle(Model source, double sp1, double sp2, Model target, double tp1,
                     double tp2) {
  auto h = [&](double, double lx, double l1mx) {
    return target == Model::beta ? oracle::beta_log_density(tp1, tp2, lx, l1mx)
                                 : oracle::kw_log_density(tp1, tp2, lx);
  };
  return source == Model::beta ? oracle::expect_beta(sp1, sp2, h)
                               : oracle::expect_kw(sp1, sp2, h);
}

}  // namespace

TEST_CASE("pseudo-true anchors under a beta source") {
  // Frozen from the quadrature-normative solve (coordinate search on the
  // tanh-sinh oracle), 8 significant digits.
  const PseudoTruePair r1 = pseudo_kw_of_beta({0.5, 2.5});
  CHECK(r1.target_p1 == Catch::Approx(0.54845984).margin(1e-6));
  CHECK(r1.target_p2 == Catch::Approx(2.2117913).margin(1e-6));
  CHECK(r1.kkt_residual <= 1e-9);

  const PseudoTruePair r2 = pseudo_kw_of_beta({2.0, 2.5});
  CHECK(r2.target_p1 == Catch::Approx(1.7930958).margin(1e-6));
  CHECK(r2.target_p2 == Catch::Approx(2.6679393).margin(1e-6));
  CHECK(r2.kkt_residual <= 1e-9);
}

TEST_CASE("pseudo-true anchors under a Kumaraswamy source") {
  const PseudoTruePair r1 = pseudo_beta_of_kw({0.5, 2.5});
  CHECK(r1.target_p1 == Catch::Approx(0.44216381).margin(1e-6));
  CHECK(r1.target_p2 == Catch::Approx(2.9889254).margin(1e-6));
  CHECK(r1.kkt_residual <= 1e-9);

  const PseudoTruePair r2 = pseudo_beta_of_kw({2.0, 2.5});
  CHECK(r2.target_p1 == Catch::Approx(2.2376812).margin(1e-6));
  CHECK(r2.target_p2 == Catch::Approx(2.331138).margin(1e-6));
  CHECK(r2.kkt_residual <= 1e-9);
}

TEST_CASE("intersection sets are fixed points") {
  for (double other : {0.4, 1.0, 2.5, 7.0}) {
    const PseudoTruePair ra = pseudo_kw_of_beta({1.0, other});
    CHECK(ra.target_p1 == Catch::Approx(1.0).margin(1e-8));
    CHECK(ra.target_p2 == Catch::Approx(other).margin(1e-8));

    const PseudoTruePair rb = pseudo_kw_of_beta({other, 1.0});
    CHECK(rb.target_p1 == Catch::Approx(other).margin(1e-8));
    CHECK(rb.target_p2 == Catch::Approx(1.0).margin(1e-8));

    const PseudoTruePair rc = pseudo_beta_of_kw({1.0, other});
    CHECK(rc.target_p1 == Catch::Approx(1.0).margin(1e-8));
    CHECK(rc.target_p2 == Catch::Approx(other).margin(1e-8));

    const PseudoTruePair rd = pseudo_beta_of_kw({other, 1.0});
    CHECK(rd.target_p1 == Catch::Approx(other).margin(1e-8));
    CHECK(rd.target_p2 == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("lambda value matches the oracle and the quadrature gap is small") {
  const std::vector<std::pair<double, double>> grid = {
      {0.3, 0.4}, {0.3, 2.0}, {0.8, 5.0}, {2.5, 0.4}, {2.5, 2.0}};
  for (auto [p1, p2] : grid) {
    const PseudoTruePair rb = pseudo_kw_of_beta({p1, p2});
    INFO("beta source (" << p1 << "," << p2 << ")");
    CHECK(rb.kkt_residual <= 1e-9);
    CHECK(rb.quad_gap <= 1e-6);
    CHECK(rb.lambda_at_max ==
          Catch::Approx(lambda_oracle(Model::beta, p1, p2, Model::kumaraswamy,
                                      rb.target_p1, rb.target_p2))
              .margin(1e-8));

    const PseudoTruePair rk = pseudo_beta_of_kw({p1, p2});
    INFO("kumaraswamy source (" << p1 << "," << p2 << ")");
    CHECK(rk.kkt_residual <= 1e-9);
    CHECK(rk.quad_gap <= 1e-6);
    CHECK(rk.lambda_at_max ==
          Catch::Approx(lambda_oracle(Model::kumaraswamy, p1, p2, Model::beta,
                                      rk.target_p1, rk.target_p2))
              .margin(1e-8));
  }
}

TEST_CASE("KL optimality certificate under random perturbations") {
  RngState rng(777);
  auto check_optimal = [&](Model source, double sp1, double sp2) {
    const PseudoTruePair r = pseudo_true(source, sp1, sp2);
    const Model target = source == Model::beta ? Model::kumaraswamy : Model::beta;
    const double lam_star =
        lambda_oracle(source, sp1, sp2, target, r.target_p1, r.target_p2);
    for (int i = 0; i < 100; ++i) {
      const double d1 = 0.2 * rng.uniform01() - 0.1;
      const double d2 = 0.2 * rng.uniform01() - 0.1;
      const double q1 = std::max(1e-3, r.target_p1 + d1);
      const double q2 = std::max(1e-3, r.target_p2 + d2);
      const double lam = lambda_oracle(source, sp1, sp2, target, q1, q2);
      INFO("perturbation (" << q1 << "," << q2 << ") vs (" << r.target_p1 << ","
                            << r.target_p2 << ")");
      CHECK(lam_star >= lam - 1e-10);
    }
  };
  check_optimal(Model::beta, 0.7, 3.0);
  check_optimal(Model::kumaraswamy, 1.8, 2.2);
}

TEST_CASE("quasi-MLE consistency: misspecified fits approach the pseudo-true pair") {
  RngState rng(998877);
  const Sample from_beta = sample(Model::beta, 0.7, 3.0, 1000000, rng);
  const FitResult kw_fit = fit_kw(from_beta);
  const PseudoTruePair pb = pseudo_kw_of_beta({0.7, 3.0});
  CHECK(kw_fit.p1 == Catch::Approx(pb.target_p1).margin(0.02));
  CHECK(kw_fit.p2 == Catch::Approx(pb.target_p2).margin(0.02));

  const Sample from_kw = sample(Model::kumaraswamy, 1.8, 2.2, 1000000, rng);
  const FitResult beta_fit = fit_beta(from_kw);
  const PseudoTruePair pk = pseudo_beta_of_kw({1.8, 2.2});
  CHECK(beta_fit.p1 == Catch::Approx(pk.target_p1).margin(0.02));
  CHECK(beta_fit.p2 == Catch::Approx(pk.target_p2).margin(0.02));
}
