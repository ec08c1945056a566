#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "bekw/fit.hpp"

using namespace bekw;

namespace {

// Fixed 20-point fixture used across the fit/discrim suites.
const std::vector<double> kFixture = {
    0.083, 0.172, 0.219, 0.260, 0.287, 0.311, 0.344, 0.378, 0.409, 0.436,
    0.464, 0.497, 0.531, 0.568, 0.603, 0.642, 0.688, 0.733, 0.792, 0.864};

Sample fixture_sample() {
  Sample s;
  s.values = kFixture;
  return s;
}

// Golden-section maximization of f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double tol = 1e-7) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

// Brute-force MLE oracle: grid scan over (0, 20]^2 followed by
// coordinate-wise golden-section refinement of the log-likelihood.
std::pair<double, double> mle_oracle(Model m, const Sample& s) {
  double best1 = 1.0, best2 = 1.0, bestll = -1e300;
  for (int i = 1; i <= 40; ++i)
    for (int j = 1; j <= 40; ++j) {
      const double p1 = 0.5 * i, p2 = 0.5 * j;
      const double ll = loglik(m, p1, p2, s);
      if (ll > bestll) {
        bestll = ll;
        best1 = p1;
        best2 = p2;
      }
    }
  for (int sweep = 0; sweep < 60; ++sweep) {
    best1 = golden_max([&](double a) { return loglik(m, a, best2, s); },
                       std::max(1e-3, best1 - 1.0), std::min(20.0, best1 + 1.0));
    best2 = golden_max([&](double b) { return loglik(m, best1, b, s); },
                       std::max(1e-3, best2 - 1.0), std::min(20.0, best2 + 1.0));
  }
  return {best1, best2};
}

}  // namespace

TEST_CASE("fit_beta: consistency on a large simulated sample") {
  RngState rng(101);
  const Sample s = sample(Model::beta, 2.0, 3.0, 100000, rng);
  const FitResult r = fit_beta(s);
  CHECK(r.converged);
  CHECK(r.p1 == Catch::Approx(2.0).margin(0.05));
  CHECK(r.p2 == Catch::Approx(3.0).margin(0.05));
  CHECK(r.grad_norm <= 1e-9 * (1.0 + std::fabs(r.loglik_at_max)));
}

TEST_CASE("fit_kw: consistency on a large simulated sample") {
  RngState rng(202);
  const Sample s = sample(Model::kumaraswamy, 2.0, 2.5, 100000, rng);
  const FitResult r = fit_kw(s);
  CHECK(r.converged);
  CHECK(r.p1 == Catch::Approx(2.0).margin(0.05));
  CHECK(r.p2 == Catch::Approx(2.5).margin(0.05));
  CHECK(r.grad_norm <= 1e-9 * (1.0 + std::fabs(r.loglik_at_max)));
}

TEST_CASE("fit_beta: ascent over the moment start") {
  RngState rng(303);
  const Sample s = sample(Model::beta, 0.8, 4.0, 1000, rng);
  const FitResult r = fit_beta(s);
  double m = 0.0, v = 0.0;
  for (double x : s.values) m += x;
  m /= static_cast<double>(s.n());
  for (double x : s.values) v += (x - m) * (x - m);
  v /= static_cast<double>(s.n());
  const double f = m * (1.0 - m) / v - 1.0;
  CHECK(r.loglik_at_max >= loglik(Model::beta, m * f, (1.0 - m) * f, s));
}

TEST_CASE("fixture sample matches the brute-force oracle") {
  const Sample s = fixture_sample();
  const auto [oa, ob] = mle_oracle(Model::beta, s);
  const FitResult rb = fit_beta(s);
  CHECK(rb.converged);
  CHECK(rb.p1 == Catch::Approx(oa).margin(1e-4));
  CHECK(rb.p2 == Catch::Approx(ob).margin(1e-4));

  const auto [okalpha, okbeta] = mle_oracle(Model::kumaraswamy, s);
  const FitResult rk = fit_kw(s);
  CHECK(rk.converged);
  CHECK(rk.p1 == Catch::Approx(okalpha).margin(1e-4));
  CHECK(rk.p2 == Catch::Approx(okbeta).margin(1e-4));
}

TEST_CASE("fit_kw: profile identity holds at the solution") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    RngState rng(seed);
    const Sample s = sample(Model::kumaraswamy, 0.7 + 0.4 * seed, 1.8, 400, rng);
    const FitResult r = fit_kw(s);
    double S = 0.0;
    for (double v : s.values) S += std::log(-std::expm1(r.p1 * std::log(v)));
    const double n = static_cast<double>(s.n());
    CHECK(r.p2 * S == Catch::Approx(-n).epsilon(1e-9));
    // loglik_at_max is the actual log-likelihood at the returned params.
    CHECK(r.loglik_at_max ==
          Catch::Approx(loglik(Model::kumaraswamy, r.p1, r.p2, s)).epsilon(1e-10));
  }
}

TEST_CASE("fit_beta: reflection equivariance") {
  RngState rng(404);
  const Sample s = sample(Model::beta, 1.4, 3.7, 2000, rng);
  Sample flipped;
  flipped.values.reserve(s.n());
  for (double v : s.values) flipped.values.push_back(1.0 - v);
  const FitResult r = fit_beta(s);
  const FitResult rf = fit_beta(flipped);
  CHECK(rf.p1 == Catch::Approx(r.p2).margin(1e-6));
  CHECK(rf.p2 == Catch::Approx(r.p1).margin(1e-6));
}

TEST_CASE("fit: small and degenerate samples") {
  Sample two;
  two.values = {0.2, 0.5};
  const FitResult rb = fit_beta(two);
  CHECK(rb.converged);
  const FitResult rk = fit_kw(two);
  CHECK(rk.converged);

  Sample one;
  one.values = {0.4};
  CHECK_THROWS_AS(fit_beta(one), input_error);
  CHECK_THROWS_AS(fit_kw(one), input_error);

  Sample flat;
  flat.values = {0.4, 0.4, 0.4};
  CHECK_THROWS_AS(fit_beta(flat), input_error);
  CHECK_THROWS_AS(fit_kw(flat), input_error);

  Sample empty;
  CHECK_THROWS_AS(fit_beta(empty), input_error);
}

TEST_CASE("fit dispatch helper") {
  const Sample s = fixture_sample();
  CHECK(fit(Model::beta, s).model == Model::beta);
  CHECK(fit(Model::kumaraswamy, s).model == Model::kumaraswamy);
}
