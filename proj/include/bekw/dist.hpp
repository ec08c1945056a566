#pragma once

// Beta and Kumaraswamy distribution objects: density, cdf, quantile,
// sampling, log-likelihood, and quadrature expectations against either law.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "bekw/errors.hpp"
#include "bekw/rng.hpp"
#include "bekw/specfun.hpp"

namespace bekw {

enum class Model { beta, kumaraswamy };

inline const char* model_name(Model m) {
  return m == Model::beta ? "beta" : "kumaraswamy";
}

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

struct KwParams {
  double alpha = 1.0;
  double beta = 1.0;
};

namespace detail {
inline void check_shapes(double p1, double p2, const char* who) {
  if (!(p1 > 0.0) || !(p2 > 0.0) || !std::isfinite(p1) || !std::isfinite(p2))
    throw input_error(std::string(who) + ": shape parameters must be positive and finite");
}
}  // namespace detail

struct Sample {
  std::vector<double> values;
  std::size_t n() const { return values.size(); }
};

inline void validate_sample(const Sample& s, const char* who) {
  if (s.values.empty()) throw input_error(std::string(who) + ": empty sample");
  for (double v : s.values)
    if (!(v > 0.0 && v < 1.0) || !std::isfinite(v))
      throw input_error(std::string(who) + ": sample values must lie strictly in (0,1)");
}

// Log-density evaluated from an XCtx so the end-panel quadrature keeps full
// accuracy; 1 - x^alpha goes through expm1 of alpha*log(x).
inline double log_density_ctx(Model m, double p1, double p2, const XCtx& c) {
  if (m == Model::beta) {
    return (p1 - 1.0) * c.lx + (p2 - 1.0) * c.l1mx - log_beta(p1, p2);
  }
  const double one_m_xa = -std::expm1(p1 * c.lx);
  return std::log(p1 * p2) + (p1 - 1.0) * c.lx + (p2 - 1.0) * std::log(one_m_xa);
}

inline double log_density(Model m, double p1, double p2, double x) {
  detail::check_shapes(p1, p2, "log_density");
  if (!(x > 0.0 && x < 1.0)) throw input_error("log_density: x must lie in (0,1)");
  XCtx c{x, std::log(x), std::log1p(-x), 0.0};
  return log_density_ctx(m, p1, p2, c);
}

inline double cdf(Model m, double p1, double p2, double x) {
  detail::check_shapes(p1, p2, "cdf");
  if (!(x >= 0.0 && x <= 1.0)) throw input_error("cdf: x must lie in [0,1]");
  if (m == Model::beta) return reg_inc_beta(p1, p2, x);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double xa = std::exp(p1 * std::log(x));
  return -std::expm1(p2 * std::log1p(-xa));
}

namespace detail {
// Safeguarded Newton (bisection fallback) on the regularized incomplete beta.
inline double beta_quantile(double a, double b, double p) {
  const double lB = log_beta(a, b);
  double lo = 0.0, hi = 1.0, x;
  // Tail-aware start: I_x ~ x^a/(aB) near 0 and mirrored near 1.
  if (p < 0.01) {
    x = std::exp((std::log(p) + std::log(a) + lB) / a);
    if (!(x > 0.0 && x < 1.0)) x = a / (a + b);
  } else if (p > 0.99) {
    const double u = std::exp((std::log1p(-p) + std::log(b) + lB) / b);
    x = (u > 0.0 && u < 1.0) ? 1.0 - u : a / (a + b);
  } else {
    x = a / (a + b);
  }
  double f = reg_inc_beta(a, b, x) - p;
  for (int it = 0; it < 200; ++it) {
    if (std::fabs(f) <= 1e-13) return x;
    if (f > 0.0) hi = x; else lo = x;
    const double ld = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lB;
    double xn = x - f / std::exp(ld);
    if (!(xn > lo && xn < hi) || !std::isfinite(xn)) xn = 0.5 * (lo + hi);
    if (xn == x) break;
    x = xn;
    f = reg_inc_beta(a, b, x) - p;
    if (hi - lo < 1e-300) break;
  }
  if (std::fabs(f) > 1e-9)
    throw accuracy_error("quantile: beta inverse cdf did not converge", x, std::fabs(f));
  return x;
}
}  // namespace detail

inline double quantile(Model m, double p1, double p2, double p) {
  detail::check_shapes(p1, p2, "quantile");
  if (!(p > 0.0 && p < 1.0)) throw input_error("quantile: p must lie in (0,1)");
  if (m == Model::kumaraswamy) {
    const double inner = -std::expm1(std::log1p(-p) / p2);
    return std::exp(std::log(inner) / p1);
  }
  return detail::beta_quantile(p1, p2, p);
}

// Inverse-cdf sampling for both families: one uniform per draw keeps parallel
// Monte Carlo replication counts aligned.  Draws outside (1e-300, 1-1e-300)
// are rejected and redrawn.
inline Sample sample(Model m, double p1, double p2, std::size_t n, RngState& rng) {
  detail::check_shapes(p1, p2, "sample");
  if (n < 1) throw input_error("sample: n must be >= 1");
  constexpr double kEps = 1e-300;
  Sample s;
  s.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x;
    do {
      double u;
      do {
        u = rng.uniform01();
      } while (u <= 0.0);
      x = quantile(m, p1, p2, u);
    } while (!(x > kEps && x < 1.0 - kEps));
    s.values.push_back(x);
  }
  return s;
}

// Log-likelihood via sufficient statistics (identical to summing log
// densities; the beta form is -n log B + (a-1) S_logx + (b-1) S_log1mx).
inline double loglik(Model m, double p1, double p2, const Sample& s) {
  detail::check_shapes(p1, p2, "loglik");
  validate_sample(s, "loglik");
  const double n = static_cast<double>(s.n());
  if (m == Model::beta) {
    double slx = 0.0, sl1x = 0.0;
    for (double v : s.values) {
      slx += std::log(v);
      sl1x += std::log1p(-v);
    }
    return -n * log_beta(p1, p2) + (p1 - 1.0) * slx + (p2 - 1.0) * sl1x;
  }
  double slx = 0.0, sl1xa = 0.0;
  for (double v : s.values) {
    const double lx = std::log(v);
    slx += lx;
    sl1xa += std::log(-std::expm1(p1 * lx));
  }
  return n * std::log(p1 * p2) + (p1 - 1.0) * slx + (p2 - 1.0) * sl1xa;
}

// Expectation E[h(X)] under the model law by adaptive quadrature.  The
// context-taking overload is the workhorse: h sees accurate log x / log(1-x)
// even in the endpoint panels.
template <class H>
inline QuadResult expect_ctx_result(H&& h, Model m, double p1, double p2,
                                    const QuadratureSpec& spec) {
  detail::check_shapes(p1, p2, "expect");
  if (spec.endpoint_handling == QuadratureSpec::Endpoint::quantile_substitution) {
    auto g = [&](double u) {
      XCtx c;
      c.x = quantile(m, p1, p2, u);
      c.lx = std::log(c.x);
      c.l1mx = std::log1p(-c.x);
      c.ljac = 0.0;
      return h(c);
    };
    return integrate_adaptive(g, 0.0, 1.0, spec.abs_tol, spec.rel_tol,
                              spec.max_subdivisions);
  }
  auto g = [&](const XCtx& c) {
    const double lw = log_density_ctx(m, p1, p2, c) + c.ljac;
    if (lw < -745.0) return 0.0;  // weight underflows; integrand is polylog-bounded
    return h(c) * std::exp(lw);
  };
  return integrate01(g, p1, p2, spec);
}

template <class H>
inline double expect_ctx(H&& h, Model m, double p1, double p2,
                         const QuadratureSpec& spec = {}) {
  QuadResult r = expect_ctx_result(h, m, p1, p2, spec);
  if (!r.converged)
    throw accuracy_error("expect: quadrature failed to reach tolerance", r.value,
                         r.error_estimate);
  return r.value;
}

inline double expect(const std::function<double(double)>& h, Model m, double p1,
                     double p2, const QuadratureSpec& spec = {}) {
  return expect_ctx([&](const XCtx& c) { return h(c.x); }, m, p1, p2, spec);
}

}  // namespace bekw
