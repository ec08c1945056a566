#pragma once

// Hellinger and Kolmogorov-Smirnov distances between a beta and a
// Kumaraswamy law.  The Hellinger value reported is the squared-distance
// convention H = 1 - int sqrt(f g) = (1/2) int (sqrt f - sqrt g)^2, bounded
// in [0,1].  Quadrature is normative; the binomial-expansion series is
// evaluated as a cross-check whenever its terms decay, and the gap recorded.

#include <algorithm>
#include <cmath>

#include "bekw/dist.hpp"
#include "bekw/errors.hpp"
#include "bekw/specfun.hpp"

namespace bekw {

struct DistanceReport {
  double hellinger = 0.0;   // squared-Hellinger convention, in [0,1]
  double ks = 0.0;          // sup |F - G|
  double ks_argmax = 0.5;   // location of the supremum
  enum class Method { series, quadrature };
  Method hellinger_method = Method::quadrature;  // series = cross-check available
  double series_quadrature_gap = 0.0;
};

namespace detail {

// Binomial expansion of int sqrt(f_B f_K):
//   sqrt(alpha beta / B(a,b)) * sum_k (-1)^k C((beta-1)/2, k)
//                                    * B((a+(2k+1)alpha)/2, (b+1)/2).
// The signed coefficient follows the recurrence c_0 = 1,
// c_{k+1} = c_k (k - w)/(k + 1) with w = (beta-1)/2, which terminates
// exactly when w is a nonnegative integer.  Terms decay like a power law
// k^{-1-w-(b+1)/2}; the tail past k is bounded by |t_k| k/(s-1) with the
// local decay exponent s fitted from consecutive term ratios, and the sum is
// accepted once that bound certifies 1e-8 in distance units.  Returns false
// when no such certificate is reached by k = 10^4 (the slow-decay regimes,
// including (beta-1)/2 < 0, are untrustworthy in fixed precision).
inline bool hellinger_series(double a, double b, double alpha, double beta,
                             double* out) {
  const double w = 0.5 * (beta - 1.0);
  const double scale = std::sqrt(alpha * beta / std::exp(log_beta(a, b)));
  double coef = 1.0;  // (-1)^k C(w,k)
  double sum = 0.0;
  double prev_abs = 0.0;
  for (long k = 0; k < 10000; ++k) {
    const double term =
        coef * std::exp(log_beta(0.5 * (a + (2 * k + 1) * alpha), 0.5 * (b + 1.0)));
    sum += term;
    const double t = std::fabs(term);
    if (k >= 16 && t > 0.0 && t < prev_abs) {
      const double s = std::log(prev_abs / t) /
                       std::log(static_cast<double>(k) / (k - 1.0));
      if (s > 1.05 && scale * t * k / (s - 1.0) <= 1e-8) {
        *out = 1.0 - scale * sum;
        return true;
      }
    }
    prev_abs = t;
    coef *= (static_cast<double>(k) - w) / (k + 1.0);
    if (coef == 0.0) {  // integer w: the expansion terminates exactly
      *out = 1.0 - scale * sum;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Squared Hellinger distance by quadrature (normative).
inline double hellinger(const BetaParams& bp, const KwParams& kp,
                        const QuadratureSpec& spec = {}) {
  detail::check_shapes(bp.a, bp.b, "hellinger");
  detail::check_shapes(kp.alpha, kp.beta, "hellinger");
  auto g = [&](const XCtx& c) {
    const double l = 0.5 * (log_density_ctx(Model::beta, bp.a, bp.b, c) +
                            log_density_ctx(Model::kumaraswamy, kp.alpha, kp.beta, c)) +
                     c.ljac;
    return l < -745.0 ? 0.0 : std::exp(l);
  };
  // sqrt(f_B f_K) ~ x^{(a+alpha)/2 - 1} at 0 and ~ (1-x)^{(b+beta)/2 - 1} at 1.
  const QuadResult r =
      integrate01(g, 0.5 * (bp.a + kp.alpha), 0.5 * (bp.b + kp.beta), spec);
  if (!r.converged)
    throw accuracy_error("hellinger: quadrature failed to reach tolerance", r.value,
                         r.error_estimate);
  return std::clamp(1.0 - r.value, 0.0, 1.0);
}

struct KsResult {
  double ks = 0.0;
  double argmax = 0.5;
};

// Kolmogorov-Smirnov distance: 1e5-point grid scan, then golden-section
// refinement of |F - G| on the bracketing interval (absolute accuracy 1e-8).
inline KsResult ks_distance(const BetaParams& bp, const KwParams& kp) {
  detail::check_shapes(bp.a, bp.b, "ks_distance");
  detail::check_shapes(kp.alpha, kp.beta, "ks_distance");
  auto gap = [&](double x) {
    return std::fabs(cdf(Model::beta, bp.a, bp.b, x) -
                     cdf(Model::kumaraswamy, kp.alpha, kp.beta, x));
  };
  const int grid_n = 100000;
  double best = 0.0;
  int besti = 1;
  for (int i = 1; i < grid_n; ++i) {
    const double d = gap(static_cast<double>(i) / grid_n);
    if (d > best) {
      best = d;
      besti = i;
    }
  }
  double lo = (besti - 1.0) / grid_n;
  double hi = (besti + 1.0) / grid_n;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = gap(x1), f2 = gap(x2);
  while (hi - lo > 1e-9) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2; x2 = lo + r * (hi - lo); f2 = gap(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1; x1 = hi - r * (hi - lo); f1 = gap(x1);
    }
  }
  KsResult out;
  out.argmax = 0.5 * (lo + hi);
  out.ks = gap(out.argmax);
  return out;
}

inline DistanceReport distance_report(const BetaParams& bp, const KwParams& kp,
                                      const QuadratureSpec& spec = {}) {
  DistanceReport out;
  out.hellinger = hellinger(bp, kp, spec);
  double series_val;
  if (detail::hellinger_series(bp.a, bp.b, kp.alpha, kp.beta, &series_val)) {
    out.hellinger_method = DistanceReport::Method::series;
    out.series_quadrature_gap = std::fabs(series_val - out.hellinger);
  }
  const KsResult k = ks_distance(bp, kp);
  out.ks = k.ks;
  out.ks_argmax = k.argmax;
  return out;
}

}  // namespace bekw
