#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "bekw/dist.hpp"
#include "bekw/specfun.hpp"
#include "oracle.hpp"

using namespace bekw;

namespace {
constexpr double kGamma = 0.57721566490153286061;
constexpr double kPi2_6 = 1.6449340668482264365;  // pi^2/6
}  // namespace

TEST_CASE("digamma known values and accuracy anchors") {
  CHECK(digamma(1.0) == Catch::Approx(-kGamma).epsilon(1e-14));
  CHECK(digamma(2.0) == Catch::Approx(1.0 - kGamma).epsilon(1e-14));
  CHECK(digamma(0.5) == Catch::Approx(-kGamma - 2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(digamma(1e-6) == Catch::Approx(-1000000.5772140199687).epsilon(1e-13));
  CHECK(digamma(1e6) == Catch::Approx(13.815510057964190771).epsilon(1e-13));
  CHECK(digamma(3.7) == Catch::Approx(1.1671535393615113859).epsilon(1e-13));
  CHECK_THROWS_AS(digamma(0.0), input_error);
  CHECK_THROWS_AS(digamma(-1.5), input_error);
}

TEST_CASE("trigamma known values and accuracy anchors") {
  CHECK(trigamma(1.0) == Catch::Approx(kPi2_6).epsilon(1e-14));
  CHECK(trigamma(0.5) == Catch::Approx(kPi2_6 * 3.0).epsilon(1e-14));
  CHECK(trigamma(2.0) == Catch::Approx(kPi2_6 - 1.0).epsilon(1e-14));
  CHECK(trigamma(1e-6) == Catch::Approx(1000000000001.6449317).epsilon(1e-13));
  CHECK(trigamma(1e6) == Catch::Approx(1.0000005000001666667e-6).epsilon(1e-13));
  CHECK(trigamma(3.7) == Catch::Approx(0.3100378576700383191).epsilon(1e-13));
  CHECK_THROWS_AS(trigamma(0.0), input_error);
}

TEST_CASE("digamma/trigamma recurrence and reflection on random points") {
  std::mt19937_64 gen(20260814);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const double x = unif(gen) * std::pow(10.0, (i % 5) - 2);
    if (x <= 0.0) continue;
    CHECK(digamma(x + 1.0) - digamma(x) == Catch::Approx(1.0 / x).epsilon(1e-11));
    CHECK(trigamma(x) - trigamma(x + 1.0) == Catch::Approx(1.0 / (x * x)).epsilon(1e-11));
  }
  for (int i = 0; i < 100; ++i) {
    const double x = unif(gen);
    const double s = std::sin(kPi * x);
    CHECK(digamma(1.0 - x) - digamma(x) ==
          Catch::Approx(kPi * std::cos(kPi * x) / s).margin(1e-9));
    CHECK(trigamma(x) + trigamma(1.0 - x) ==
          Catch::Approx(kPi * kPi / (s * s)).epsilon(1e-11));
  }
}

TEST_CASE("log_beta identities and integral cross-check") {
  CHECK(log_beta(1.0, 1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(log_beta(2.0, 3.0) == Catch::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
  CHECK(log_beta(0.5, 0.5) == Catch::Approx(std::log(kPi)).epsilon(1e-14));
  CHECK(log_beta(12.5, 700.25) == Catch::Approx(-63.260680726778260339).epsilon(1e-13));
  for (auto [a, b] : std::vector<std::pair<double, double>>{{2.5, 1.5}, {0.2, 3.0}}) {
    const double direct = oracle::integrate01(
        [a = a, b = b](double, double lx, double l1mx) {
          return std::exp((a - 1.0) * lx + (b - 1.0) * l1mx);
        });
    CHECK(std::exp(log_beta(a, b)) == Catch::Approx(direct).epsilon(1e-12));
  }
  CHECK_THROWS_AS(log_beta(0.0, 1.0), input_error);
}

TEST_CASE("regularized incomplete beta basics") {
  CHECK(reg_inc_beta(2.0, 5.0, 0.0) == 0.0);
  CHECK(reg_inc_beta(2.0, 5.0, 1.0) == 1.0);
  CHECK(reg_inc_beta(1.0, 1.0, 0.3) == Catch::Approx(0.3).epsilon(1e-14));
  CHECK(reg_inc_beta(2.0, 2.0, 0.5) == Catch::Approx(0.5).margin(1e-14));
  CHECK(reg_inc_beta(2.5, 3.5, 0.3) == Catch::Approx(0.29675298929566639864).margin(1e-12));
  CHECK(reg_inc_beta(0.2, 5.0, 0.7) == Catch::Approx(0.99981872020940121132).margin(1e-12));
  CHECK(reg_inc_beta(0.5, 2.0, 1e-4) == Catch::Approx(0.0149995).margin(1e-12));
  CHECK(reg_inc_beta(4.0, 0.3, 0.99) == Catch::Approx(0.58976393260403859461).margin(1e-12));
  CHECK_THROWS_AS(reg_inc_beta(1.0, 1.0, -0.1), input_error);
  CHECK_THROWS_AS(reg_inc_beta(0.0, 1.0, 0.5), input_error);
}

TEST_CASE("regularized incomplete beta symmetry and monotonicity") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> shp(0.1, 8.0), xx(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = shp(gen), b = shp(gen), x = xx(gen);
    CHECK(reg_inc_beta(a, b, x) + reg_inc_beta(b, a, 1.0 - x) ==
          Catch::Approx(1.0).margin(1e-12));
  }
  double prev = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const double v = reg_inc_beta(1.7, 0.4, i / 200.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("standard normal cdf and quantile") {
  CHECK(std_normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(std_normal_cdf(1.0) == Catch::Approx(0.84134474606854294859).margin(1e-12));
  CHECK(std_normal_cdf(-2.0) == Catch::Approx(0.0227501319481792072).margin(1e-12));
  CHECK(std_normal_quantile(0.8) == Catch::Approx(0.84162123357291420518).margin(1e-10));
  CHECK(std_normal_quantile(0.999) == Catch::Approx(3.0902323061678135415).margin(1e-10));

  // Independent bisection oracle on the cdf.
  auto bisect = [](double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (std_normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  for (double p : {0.001, 0.1, 0.3, 0.5, 0.7, 0.8, 0.95, 0.9999}) {
    CHECK(std_normal_quantile(p) == Catch::Approx(bisect(p)).margin(1e-10));
    CHECK(std_normal_cdf(std_normal_quantile(p)) == Catch::Approx(p).margin(1e-12));
  }
  CHECK_THROWS_AS(std_normal_quantile(0.0), input_error);
  CHECK_THROWS_AS(std_normal_quantile(1.0), input_error);
}

TEST_CASE("series closed forms") {
  auto F = eval_series(SeriesKind::F, 1, 1, 1);
  CHECK(F.converged);
  CHECK(F.value == Catch::Approx(1.0).margin(1e-10));

  auto G = eval_series(SeriesKind::G, 1, 1, 1);
  CHECK(G.converged);
  CHECK(G.value == Catch::Approx(-(kPi2_6 - 1.0)).margin(1e-10));

  auto M = eval_series(SeriesKind::M, 1, 1, 1);
  CHECK(M.converged);
  CHECK(M.value == Catch::Approx(-(2.0 - kPi2_6)).margin(1e-10));

  auto W = eval_series(SeriesKind::W, 1, 1, 1);
  CHECK(W.converged);
  CHECK(W.value == Catch::Approx(2.0).margin(1e-12));

  auto W2 = eval_series(SeriesKind::W, 1, 2, 1);
  CHECK(W2.converged);
  CHECK(W2.value == Catch::Approx(0.25).margin(1e-12));

  CHECK_THROWS_AS(eval_series(SeriesKind::F, -1, 1, 1), input_error);
  CHECK_THROWS_AS(eval_series(SeriesKind::F, 1, 1, 1, 0.0), input_error);
}

TEST_CASE("series high-precision anchors") {
  // Reference values from 60-digit Euler-Maclaurin summation of the series,
  // cross-checked against the equivalent integral identities (e.g.
  // F = -int_0^1 log(1-t^z) t^(x-1) (1-t)^(y-1) dt).  Margins allow 2e-10
  // absolute on top of the requested 1e-10 tail bound.
  struct Anchor {
    SeriesKind kind;
    double x, y, z, value;
  };
  const std::vector<Anchor> anchors = {
      {SeriesKind::F, 0.2, 0.2, 0.2, 36.397653677238892},
      {SeriesKind::F, 0.2, 5.0, 2.0, 0.026999593687325456},
      {SeriesKind::F, 5.0, 0.2, 0.5, 25.436761571709552},
      {SeriesKind::F, 1.0, 2.0, 0.5, 0.45833333333333333},
      {SeriesKind::F, 2.0, 2.5, 1.3, 0.060894247645894771},
      {SeriesKind::G, 0.2, 5.0, 2.0, -0.037389181197192530},
      {SeriesKind::M, 0.2, 5.0, 2.0, -0.035674867095086634},
      {SeriesKind::V, 1.0, 2.0, 0.5, -0.38512410184892535},
      {SeriesKind::W, 0.5, 2.5, 0.7, 0.23681044672360598},
  };
  for (const auto& an : anchors) {
    auto r = eval_series(an.kind, an.x, an.y, an.z, 1e-10);
    INFO("kind=" << static_cast<int>(an.kind) << " x=" << an.x << " y=" << an.y
                 << " z=" << an.z << " got " << r.value << " terms " << r.terms_used
                 << " bound " << r.tail_bound);
    CHECK(r.converged);
    CHECK(r.value == Catch::Approx(an.value).margin(2e-10));
    // The reported tail bound must actually cover the true error.
    CHECK(std::fabs(r.value - an.value) <= r.tail_bound + 1e-12);
  }
}

TEST_CASE("SeriesEval contract: floor, tail bound, convergence flag") {
  auto r = eval_series(SeriesKind::F, 2.0, 5.0, 1.0, 1e-10);
  CHECK(r.converged);
  CHECK(r.terms_used >= 50);
  CHECK(r.tail_bound >= 0.0);
  CHECK(r.tail_bound <= 1e-10);

  // A cap so small the sum cannot converge must be reported honestly.
  auto bad = eval_series(SeriesKind::F, 0.2, 0.2, 0.2, 1e-10, 60);
  CHECK_FALSE(bad.converged);
}

TEST_CASE("V series matches the quadrature identity oracle") {
  // V(x,y,z) = -B(x,y) * E_B(x,y)[ log(1-t) log(1-t^z) ].
  const double x = 1.0, y = 2.0, z = 0.5;
  const double e = oracle::expect_beta(x, y, [&](double, double lx, double l1mx) {
    const double l1mxz = std::log(-std::expm1(z * lx));
    return l1mx * l1mxz;
  });
  const double v = eval_series(SeriesKind::V, x, y, z).value;
  CHECK(v == Catch::Approx(-std::exp(log_beta(x, y)) * e).epsilon(1e-9));
}

TEST_CASE("W series matches the squared-log quadrature identity") {
  // E_B(x,y)[ log^2(1-t^z) ] = Gamma(x+y)/Gamma(x) * W(x,y,z).
  for (auto [x, y, z] : std::vector<std::array<double, 3>>{
           {0.5, 2.5, 0.7}, {1.0, 2.0, 1.0}, {2.0, 3.0, 0.5}}) {
    const double e = oracle::expect_beta(x, y, [&](double, double lx, double) {
      const double l1mxz = std::log(-std::expm1(z * lx));
      return l1mxz * l1mxz;
    });
    const double w = eval_series(SeriesKind::W, x, y, z).value;
    const double scale = std::exp(std::lgamma(x + y) - std::lgamma(x));
    INFO("x=" << x << " y=" << y << " z=" << z);
    CHECK(scale * w == Catch::Approx(e).epsilon(1e-7));
  }
}

TEST_CASE("G series: term recomputation and F-type envelope") {
  const double x = 0.7, y = 1.8, z = 1.1;
  auto r = eval_series(SeriesKind::G, x, y, z, 1e-10);
  REQUIRE(r.converged);
  double s = 0.0;
  const long kmax = 20000;
  for (long k = 1; k <= kmax; ++k) {
    const double term =
        (digamma(x + k * z) - digamma(x + y + k * z)) * std::exp(log_beta(x + k * z, y));
    // psi(u) - psi(u+y) is bounded by y * psi'(u): an F-type envelope.
    CHECK(std::fabs(term) <= y * trigamma(x + k * z) * std::exp(log_beta(x + k * z, y)) *
                                 (1.0 + 1e-12));
    s += term;
  }
  // A cap below the first remainder estimate returns the bare partial sum, so
  // the summed terms must reproduce it to rounding accuracy.
  auto partial = eval_series(SeriesKind::G, x, y, z, 1e-30, 60);
  CHECK_FALSE(partial.converged);
  double s60 = 0.0;
  for (long k = 60; k >= 1; --k)
    s60 += (digamma(x + k * z) - digamma(x + y * 1.0 + k * z)) *
           std::exp(log_beta(x + k * z, y));
  CHECK(partial.value == Catch::Approx(s60).margin(1e-13));
  // The full result sits within the envelope tail of the recomputed partial:
  // |sum_{k>K} term| <= sum_{k>K} y psi'(x+kz) B(x+kz,y) ~ a_K * K / (q-1).
  const double a_env = y * trigamma(x + kmax * z) * std::exp(log_beta(x + kmax * z, y));
  CHECK(s == Catch::Approx(r.value).margin(3.0 * a_env * kmax + 1e-9));
}

TEST_CASE("series vs library quadrature on the validation grid") {
  const std::vector<double> grid = {0.2, 0.5, 1.0, 2.0, 5.0};
  QuadratureSpec qs;
  for (double x : grid)
    for (double y : grid)
      for (double z : grid) {
        const double B = std::exp(log_beta(x, y));
        const double quad = expect_ctx(
            [&](const XCtx& c) { return -std::log(-std::expm1(z * c.lx)); },
            Model::beta, x, y, qs);
        auto fs = eval_series(SeriesKind::F, x, y, z, 1e-10);
        INFO("x=" << x << " y=" << y << " z=" << z << " series=" << fs.value
                  << " quad=" << quad * B);
        CHECK(fs.converged);
        CHECK(fs.value == Catch::Approx(quad * B).epsilon(1e-8));
      }
}

TEST_CASE("expect: uniform and closed-form identities") {
  QuadratureSpec qs;
  CHECK(expect([](double x) { return std::log(x); }, Model::beta, 1, 1, qs) ==
        Catch::Approx(-1.0).margin(1e-10));
  CHECK(expect([](double x) { return std::log(x); }, Model::beta, 2, 3, qs) ==
        Catch::Approx(digamma(2) - digamma(5)).margin(1e-10));
  CHECK(expect_ctx([](const XCtx& c) { return std::log(-std::expm1(2.0 * c.lx)); },
                   Model::kumaraswamy, 2.0, 2.5, qs) ==
        Catch::Approx(-0.4).margin(1e-10));
}

TEST_CASE("expect: linearity and endpoint-mode agreement") {
  QuadratureSpec qs;
  auto h1 = [](const XCtx& c) { return c.lx; };
  auto h2 = [](const XCtx& c) { return c.x * c.x; };
  const double e1 = expect_ctx(h1, Model::beta, 2.5, 1.5, qs);
  const double e2 = expect_ctx(h2, Model::beta, 2.5, 1.5, qs);
  const double e12 =
      expect_ctx([&](const XCtx& c) { return h1(c) + h2(c); }, Model::beta, 2.5, 1.5, qs);
  CHECK(e12 == Catch::Approx(e1 + e2).margin(3e-10));

  QuadratureSpec qq = qs;
  qq.endpoint_handling = QuadratureSpec::Endpoint::quantile_substitution;
  const double split = expect([](double x) { return std::log(x); }, Model::beta, 2, 3, qs);
  const double qsub = expect([](double x) { return std::log(x); }, Model::beta, 2, 3, qq);
  CHECK(split == Catch::Approx(qsub).margin(1e-9));

  // Singular-shape case against the independent oracle.
  const double lib = expect_ctx([](const XCtx& c) { return c.lx * c.lx; },
                                Model::beta, 0.2, 2.5, qs);
  const double orc = oracle::expect_beta(
      0.2, 2.5, [](double, double lx, double) { return lx * lx; });
  CHECK(lib == Catch::Approx(orc).epsilon(1e-9));
}

TEST_CASE("quadrature failure reporting") {
  QuadratureSpec qs;
  qs.max_subdivisions = 4;  // starve the subdivision budget
  CHECK_THROWS_AS(
      expect_ctx([](const XCtx& c) { return c.lx * c.lx * std::cos(500.0 * c.x); },
                 Model::beta, 0.2, 0.3, qs),
      accuracy_error);
}
