#pragma once

// Special functions, adaptive quadrature, and the five auxiliary series used
// throughout the library.  Everything here is pure and reentrant.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "bekw/errors.hpp"

namespace bekw {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;

namespace detail {
// Thread-safe log-gamma: glibc's lgamma_r keeps the sign out of the global
// signgam.  Fallback shim for platforms without it would go here.
inline double log_gamma_signed(double x, int* sign) { return ::lgamma_r(x, sign); }
inline double log_gamma(double x) {
  int s;
  return ::lgamma_r(x, &s);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Digamma via upward recurrence to x >= 10, then the Bernoulli asymptotic
// series through x^-14 (relative error below 1e-13 on [1e-6, 1e6]).
inline double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw input_error("digamma: requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / x, r2 = r * r;
  double s = std::log(x) - 0.5 * r;
  s -= r2 * (1.0 / 12.0 +
             r2 * (-1.0 / 120.0 +
                   r2 * (1.0 / 252.0 +
                         r2 * (-1.0 / 240.0 +
                               r2 * (1.0 / 132.0 +
                                     r2 * (-691.0 / 32760.0 + r2 * (1.0 / 12.0)))))));
  return s + acc;
}

// Trigamma by the same scheme (asymptotic series through x^-15).
inline double trigamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw input_error("trigamma: requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / x, r2 = r * r;
  double s = r * (1.0 +
                  r * (0.5 +
                       r * (1.0 / 6.0 +
                            r2 * (-1.0 / 30.0 +
                                  r2 * (1.0 / 42.0 +
                                        r2 * (-1.0 / 30.0 +
                                              r2 * (5.0 / 66.0 +
                                                    r2 * (-691.0 / 2730.0 +
                                                          r2 * (7.0 / 6.0)))))))));
  return s + acc;
}

inline double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw input_error("log_beta: requires a > 0 and b > 0");
  return detail::log_gamma(a) + detail::log_gamma(b) - detail::log_gamma(a + b);
}

namespace detail {
// Stirling correction S(w) = lgamma(w) - [(w-1/2)ln w - w + ln(2pi)/2],
// truncation below 1e-15 for w >= 20.
inline double stirling_s(double w) {
  const double r2 = 1.0 / (w * w);
  return (1.0 / 12.0 +
          r2 * (-1.0 / 360.0 +
                r2 * (1.0 / 1260.0 + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0))))) /
         w;
}
// lgamma(A+y) - lgamma(A) without the catastrophic cancellation of the naive
// difference (absolute error eps*|lgamma| ~ 1e-8 by A ~ 1e7): expand the
// Stirling forms and keep only stable pieces,
//   (A-1/2) log1p(y/A) + y log(A+y) - y + S(A+y) - S(A).
inline double lgamma_diff(double A, double y) {
  if (A < 20.0) return log_gamma(A + y) - log_gamma(A);
  return (A - 0.5) * std::log1p(y / A) + y * std::log(A + y) - y + stirling_s(A + y) -
         stirling_s(A);
}
// psi(A+y) - psi(A) by the same route; T(w) is the Bernoulli tail of psi.
inline double digamma_diff(double A, double y) {
  if (A < 20.0) return digamma(A + y) - digamma(A);
  auto tail = [](double w) {
    const double r2 = 1.0 / (w * w);
    return r2 * (1.0 / 12.0 +
                 r2 * (-1.0 / 120.0 + r2 * (1.0 / 252.0 + r2 * (-1.0 / 240.0))));
  };
  return std::log1p(y / A) + 0.5 * y / (A * (A + y)) - (tail(A + y) - tail(A));
}
}  // namespace detail

namespace detail {
// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr double kFpMin = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw convergence_error("reg_inc_beta: continued fraction did not converge", h);
}
}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw input_error("reg_inc_beta: requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw input_error("reg_inc_beta: requires 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lbt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(lbt) * detail::beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(lbt) * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse normal cdf: rational initial guess (Acklam) polished by two Halley
// steps on erfc, giving full double accuracy away from the extreme tails.
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw input_error("std_normal_quantile: requires 0 < p < 1");
  static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
        (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double e = std_normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod 7-15 quadrature.

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_subdivisions = 2000;
  enum class Endpoint { split_near_endpoints, quantile_substitution };
  Endpoint endpoint_handling = Endpoint::split_near_endpoints;
};

struct QuadResult {
  double value = 0.0;
  double error_estimate = std::numeric_limits<double>::infinity();
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {
// 15-point Kronrod abscissae/weights and the embedded 7-point Gauss weights.
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767,
                                  0.3818300505051189, 0.4179591836734694};

template <class F>
inline void qk15(F&& f, double lo, double hi, double& val, double& err) {
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const double fc = f(c);
  double resk = kWgk[7] * fc, resg = kWg[3] * fc;
  double fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    fv1[j] = f(c - dx);
    fv2[j] = f(c + dx);
    resk += kWgk[j] * (fv1[j] + fv2[j]);
    if (j % 2 == 1) resg += kWg[j / 2] * (fv1[j] + fv2[j]);
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[7] * std::fabs(fc - reskh);
  double resabs = kWgk[7] * std::fabs(fc);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
    resabs += kWgk[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
  }
  val = resk * h;
  err = std::fabs((resk - resg) * h);
  resasc *= std::fabs(h);
  resabs *= std::fabs(h);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  err = std::max(err, 50.0 * DBL_EPSILON * resabs);
}

struct QuadPanel {
  double lo, hi, val, err;
  bool operator<(const QuadPanel& o) const { return err < o.err; }
};
}  // namespace detail

// Adaptive bisection driven by a worst-panel heap; never throws, reports the
// achieved error estimate and a convergence flag.
template <class F>
inline QuadResult integrate_adaptive(F&& f, double lo, double hi, double abs_tol,
                                     double rel_tol, int max_subdivisions) {
  QuadResult out;
  std::priority_queue<detail::QuadPanel> heap;
  detail::QuadPanel p{lo, hi, 0.0, 0.0};
  detail::qk15(f, lo, hi, p.val, p.err);
  double total = p.val, total_err = p.err;
  heap.push(p);
  int used = 1;
  while (std::isfinite(total_err) &&
         total_err > std::max(abs_tol, rel_tol * std::fabs(total)) &&
         used < max_subdivisions) {
    detail::QuadPanel worst = heap.top();
    heap.pop();
    total -= worst.val;
    total_err -= worst.err;
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= worst.lo || mid >= worst.hi) {  // panel at rounding width
      total += worst.val;
      total_err += worst.err;
      break;
    }
    detail::QuadPanel l{worst.lo, mid, 0.0, 0.0}, r{mid, worst.hi, 0.0, 0.0};
    detail::qk15(f, l.lo, l.hi, l.val, l.err);
    detail::qk15(f, r.lo, r.hi, r.val, r.err);
    total += l.val + r.val;
    total_err += l.err + r.err;
    heap.push(l);
    heap.push(r);
    ++used;
  }
  out.value = total;
  out.error_estimate = total_err;
  out.subdivisions = used;
  out.converged = std::isfinite(total_err) && std::isfinite(total) &&
                  total_err <= std::max(abs_tol, rel_tol * std::fabs(total));
  return out;
}

// Point on (0,1) handed to regularized integrands: x together with accurate
// log x and log(1-x) (the raw x may round to 0 or 1 in the end panels), plus
// the log-Jacobian of the endpoint change of variables, to be folded into the
// integrand's own exponential so that the x^(p-1)-type blow-up cancels.
struct XCtx {
  double x;
  double lx;
  double l1mx;
  double ljac;
};

// Integrate g over (0,1) where g(ctx) already contains all density factors.
// p0 and p1 are the power-law exponents of the integrand at 0 and 1: the end
// panels [0,1e-6] and [1-1e-6,1] are mapped by x = d*t^(1/p0) (resp. mirrored)
// so the singular factor is absorbed exactly.
template <class G>
inline QuadResult integrate01(G&& g, double p0, double p1, const QuadratureSpec& spec) {
  constexpr double kDelta = 1e-6;
  const double ld = std::log(kDelta);
  p0 = std::max(p0, 1e-8);
  p1 = std::max(p1, 1e-8);

  auto left = [&](double t) {
    const double lt = std::log(t);
    XCtx c;
    c.lx = ld + lt / p0;
    c.x = std::exp(c.lx);
    c.l1mx = std::log1p(-c.x);
    c.ljac = ld - std::log(p0) + (1.0 / p0 - 1.0) * lt;
    return g(c);
  };
  auto right = [&](double t) {
    const double lt = std::log(t);
    XCtx c;
    c.l1mx = ld + lt / p1;
    const double u = std::exp(c.l1mx);
    c.x = 1.0 - u;
    c.lx = std::log1p(-u);
    c.ljac = ld - std::log(p1) + (1.0 / p1 - 1.0) * lt;
    return g(c);
  };
  auto mid = [&](double t) {
    XCtx c;
    c.x = t;
    c.lx = std::log(t);
    c.l1mx = std::log1p(-t);
    c.ljac = 0.0;
    return g(c);
  };

  const double at = spec.abs_tol / 4.0;
  const int budget = std::max(spec.max_subdivisions / 4, 8);
  QuadResult parts[4];
  parts[0] = integrate_adaptive(left, 0.0, 1.0, at, spec.rel_tol, budget);
  parts[1] = integrate_adaptive(mid, kDelta, 0.5, at, spec.rel_tol, budget);
  parts[2] = integrate_adaptive(mid, 0.5, 1.0 - kDelta, at, spec.rel_tol, budget);
  parts[3] = integrate_adaptive(right, 0.0, 1.0, at, spec.rel_tol, budget);

  QuadResult out;
  out.value = 0.0;
  out.error_estimate = 0.0;
  out.converged = true;
  for (const auto& pr : parts) {
    out.value += pr.value;
    out.error_estimate += pr.error_estimate;
    out.subdivisions += pr.subdivisions;
    out.converged = out.converged && pr.converged;
  }
  // The per-part rel_tol test is against part values; re-check globally.
  if (!out.converged && std::isfinite(out.error_estimate) &&
      out.error_estimate <= std::max(spec.abs_tol, spec.rel_tol * std::fabs(out.value)))
    out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------
// The five auxiliary series.

enum class SeriesKind { F, G, M, V, W };

struct SeriesEval {
  double value = 0.0;
  long terms_used = 0;
  double tail_bound = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// eval_series(kind, x, y, z, tol): partial sums with compensated summation.
//
// Terms (k >= 1 for F/G/M/V, k >= 0 for W):
//   F: B(x+kz, y) / k
//   G: [psi(x+kz) - psi(x+y+kz)] B(x+kz, y)
//   M: [psi(x+kz) - psi(x+y+kz)] B(x+kz, y) / k
//   V: [psi(y) - psi(x+y+kz)] B(x+kz, y) / k
//   W: (-1)^k {[psi(1)-psi((x+k)/z+1)]^2 + psi'(1) - psi'((x+k)/z+1)}
//        / [Gamma(y-k) k! (x+k)]
//
// Tail control: F/G/M/V terms decay like a slowly varying factor times
// k^-(1+y) (M: k^-(2+y)); the quick analytic tail bound is the integral
// comparison sum_{j>K} |a_j| <= 1.5 |a_K| K / (q-1) with the decay exponent
// q fitted from a geometric checkpoint (documented safety factor 1.5), and
// it closes the sum on its own only when y is large enough for the plain
// tail to die by the 50-term floor.  For slow tails the terms extend to a
// smooth function a(t) of the index -- for W via the reflection formula
//   term_k = sin(pi y)/pi * Gamma(1+k-y) / (k! (x+k)) * h(k),  k > y,
// which is constant-sign past the Gamma pole lattice -- and the remainder is
// taken by Euler-Maclaurin in midpoint form,
//   sum_{k >= K} a(k) = int_{K-1/2}^inf a(t) dt + a'(K-1/2)/24 + O(a'''),
// with the integral mapped to (0,1] by t = (K-1/2)/u and evaluated by the
// adaptive rule (the u^(y-1) endpoint handled by the power substitution) and
// the derivative by central difference.  Remainder estimates at successive
// doubling checkpoints are differenced; agreement within tol certifies
// convergence and the difference is the reported tail bound.  For y within
// 1e-6 of a positive integer the W sum is finite (1/Gamma(y-k) vanishes for
// k >= y) and is evaluated exactly.
inline SeriesEval eval_series(SeriesKind kind, double x, double y, double z,
                              double tol = 1e-10, long max_terms = 1000000) {
  if (!(x > 0.0) || !(y > 0.0) || !(z > 0.0))
    throw input_error("eval_series: requires x, y, z > 0");
  if (!(tol > 0.0)) throw input_error("eval_series: requires tol > 0");

  const double psi_y = (kind == SeriesKind::V) ? digamma(y) : 0.0;
  const double psi_one = -kEulerGamma;
  const double psi1_one = kPi * kPi / 6.0;

  auto term = [&](long k) -> double {
    switch (kind) {
      case SeriesKind::F:
        return std::exp(log_beta(x + k * z, y)) / static_cast<double>(k);
      case SeriesKind::G:
        return (digamma(x + k * z) - digamma(x + y + k * z)) *
               std::exp(log_beta(x + k * z, y));
      case SeriesKind::M:
        return (digamma(x + k * z) - digamma(x + y + k * z)) *
               std::exp(log_beta(x + k * z, y)) / static_cast<double>(k);
      case SeriesKind::V:
        return (psi_y - digamma(x + y + k * z)) * std::exp(log_beta(x + k * z, y)) /
               static_cast<double>(k);
      case SeriesKind::W: {
        int sgn = 1;
        const double lg = detail::log_gamma_signed(y - k, &sgn);
        if (std::isinf(lg) && lg > 0.0) return 0.0;  // pole of Gamma: term vanishes
        const double u = (x + k) / z + 1.0;
        const double dpsi = psi_one - digamma(u);
        const double h = dpsi * dpsi + psi1_one - trigamma(u);
        const double lmag = -lg - detail::log_gamma(k + 1.0) - std::log(x + k);
        const double sign = ((k & 1L) ? -1.0 : 1.0) * sgn;
        return sign * std::exp(lmag) * h;
      }
    }
    return 0.0;
  };

  SeriesEval out;
  const long start = (kind == SeriesKind::W) ? 0 : 1;
  constexpr long kMinTerms = 50;

  // Finite W sum when y sits on (or within 1e-6 of) the positive integers.
  if (kind == SeriesKind::W && std::fabs(y - std::round(y)) < 1e-6 && std::round(y) >= 1.0) {
    const long m = static_cast<long>(std::round(y));
    double s = 0.0, comp = 0.0;
    for (long k = 0; k < m; ++k) {
      const double a = term(k);
      const double t = s + a;
      comp += (std::fabs(s) >= std::fabs(a)) ? (s - t) + a : (a - t) + s;
      s = t;
    }
    out.value = s + comp;
    out.terms_used = m;
    out.tail_bound = 0.0;
    out.converged = true;
    return out;
  }

  double sum = 0.0, comp = 0.0;
  double prev1 = 0.0, prev2 = 0.0;  // |a_{k-1}|, |a_{k-2}|
  std::vector<std::pair<long, double>> snaps;  // geometric |a_k| checkpoints

  // Plain-phase tail estimate at term index k with |a_k| = aa.  Integral
  // comparison for the polynomial tails, term-ratio bound for W.
  auto plain_tail = [&](long k, double aa) -> double {
    if (aa == 0.0) return 0.0;
    double tail = std::numeric_limits<double>::infinity();
    if (kind == SeriesKind::W) {
      double r = 0.0;
      if (prev1 > 0.0) r = std::max(r, aa / prev1);
      if (prev2 > 0.0 && prev1 > 0.0) r = std::max(r, prev1 / prev2);
      if (r > 0.0 && r < 1.0) tail = 1.5 * aa * r / (1.0 - r);
    } else {
      // Fit the decay exponent q from the checkpoint nearest k/2.
      for (auto it = snaps.rbegin(); it != snaps.rend(); ++it) {
        if (it->first <= k / 2 && it->second > 0.0) {
          const double q =
              std::log(it->second / aa) / std::log(static_cast<double>(k) / it->first);
          if (q > 1.0) tail = 1.5 * aa * static_cast<double>(k) / (q - 1.0);
          break;
        }
      }
    }
    return tail;
  };

  // Smooth continuation a(t) of the terms, split as a signed slowly varying
  // factor times exp(log-magnitude) so the u-substituted integrand below can
  // fold all large exponents together before exponentiating.
  auto smooth_parts = [&](double t, double lt, double* lmag, double* fac) {
    switch (kind) {
      case SeriesKind::F:
        *lmag = detail::log_gamma(y) - detail::lgamma_diff(x + t * z, y) - lt;
        *fac = 1.0;
        break;
      case SeriesKind::G:
        *lmag = detail::log_gamma(y) - detail::lgamma_diff(x + t * z, y);
        *fac = -detail::digamma_diff(x + t * z, y);
        break;
      case SeriesKind::M:
        *lmag = detail::log_gamma(y) - detail::lgamma_diff(x + t * z, y) - lt;
        *fac = -detail::digamma_diff(x + t * z, y);
        break;
      case SeriesKind::V:
        *lmag = detail::log_gamma(y) - detail::lgamma_diff(x + t * z, y) - lt;
        *fac = psi_y - digamma(x + y + t * z);
        break;
      case SeriesKind::W: {
        const double u = (x + t) / z + 1.0;
        const double dpsi = psi_one - digamma(u);
        *lmag = -detail::lgamma_diff(1.0 + t - y, y) - std::log(x + t);
        *fac = std::sin(kPi * y) / kPi * (dpsi * dpsi + psi1_one - trigamma(u));
        break;
      }
    }
  };
  auto a_smooth = [&](double t) {
    double lmag, fac;
    smooth_parts(t, std::log(t), &lmag, &fac);
    return fac * std::exp(lmag);
  };

  // Euler-Maclaurin remainder sum_{k >= k_next} a(k) (midpoint form).  The
  // tail integral maps to (0,1) by t = Kt/u followed by u = v^max(1,1/y),
  // which turns the u^(y-1) endpoint power into a bounded factor; everything
  // large stays in log space until a single exp.
  auto em_remainder = [&](long k_next, double* rem, double* rem_err) -> bool {
    const double Kt = static_cast<double>(k_next) - 0.5;
    if (kind == SeriesKind::W && Kt < y + 2.0) return false;
    const double lK = std::log(Kt);
    const double c = std::max(1.0, 1.0 / y);
    auto g = [&](double v) {
      if (v <= 0.0 || v >= 1.0) return 0.0;
      const double lv = std::log(v);
      const double lt = lK - c * lv;
      if (lt > 690.0) return 0.0;  // beyond double range; integrand ~ 0 there
      double lmag, fac;
      smooth_parts(std::exp(lt), lt, &lmag, &fac);
      return fac * std::exp(lmag + lK - 2.0 * c * lv + std::log(c) + (c - 1.0) * lv);
    };
    const QuadResult integral = integrate_adaptive(g, 0.0, 1.0, 1e-13, 1e-13, 800);
    if (!integral.converged) return false;
    const double h = 0.005 * Kt;
    const double aprime = (a_smooth(Kt + h) - a_smooth(Kt - h)) / (2.0 * h);
    *rem = integral.value + aprime / 24.0;
    *rem_err = integral.error_estimate + 1e-13;
    return std::isfinite(*rem);
  };

  double cand_prev = 0.0, cand_best = 0.0, cand_err_prev = 0.0;
  double cand_bound = std::numeric_limits<double>::infinity();
  bool have_cand = false;
  long k = start, count = 0;

  for (; count < max_terms; ++k, ++count) {
    const double a = term(k);
    if (!std::isfinite(a))
      throw accuracy_error(
          "eval_series: non-finite term encountered; use the quadrature route",
          sum + comp, std::numeric_limits<double>::infinity());
    const double t = sum + a;
    comp += (std::fabs(sum) >= std::fabs(a)) ? (sum - t) + a : (a - t) + sum;
    sum = t;
    const double aa = std::fabs(a);

    const bool snapshot = (count & (count + 1)) == 0;  // count = 2^m - 1
    if (snapshot) snaps.emplace_back(k, aa);

    if (count + 1 >= kMinTerms && aa < tol * std::max(std::fabs(sum), 1e-300)) {
      const double tail = plain_tail(k, aa);
      if (tail <= tol) {
        out.value = sum + comp;
        out.terms_used = count + 1;
        out.tail_bound = tail;
        out.converged = true;
        return out;
      }
    }

    if (snapshot && count >= 63) {
      double rem, rem_err;
      if (em_remainder(k + 1, &rem, &rem_err)) {
        const double cand = (sum + comp) + rem;
        if (have_cand) {
          // Successive remainders shrink geometrically, so the candidate gap
          // dominates the truncation error; add both quadrature error
          // estimates and a rounding floor for the summation itself.
          const double bound = std::fabs(cand - cand_prev) + cand_err_prev +
                               rem_err + 2e-13 * (1.0 + std::fabs(cand));
          if (bound < cand_bound) {
            cand_bound = bound;
            cand_best = cand;
          }
          if (bound <= tol) {
            out.value = cand;
            out.terms_used = count + 1;
            out.tail_bound = bound;
            out.converged = true;
            return out;
          }
        }
        have_cand = true;
        cand_prev = cand;
        cand_err_prev = rem_err;
      }
    }

    prev2 = prev1;
    prev1 = aa;
  }

  // Term budget spent: report the better of the plain bound and the last
  // remainder estimate, honestly non-converged unless the bound clears tol.
  const double tail_plain = plain_tail(k - 1, prev1);
  if (cand_bound < tail_plain) {
    out.value = cand_best;
    out.tail_bound = cand_bound;
  } else {
    out.value = sum + comp;
    out.tail_bound = tail_plain;
  }
  out.terms_used = count;
  out.converged = out.tail_bound <= tol;
  return out;
}

}  // namespace bekw
