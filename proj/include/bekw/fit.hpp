#pragma once

// Maximum-likelihood estimation for the beta and Kumaraswamy families.
// Beta: damped Newton on the digamma score equations with the trigamma
// Jacobian.  Kumaraswamy: the second shape is profiled out exactly
// (beta_hat = -n / sum log(1 - x_i^alpha)), leaving a one-dimensional
// safeguarded Newton in alpha.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "bekw/dist.hpp"
#include "bekw/errors.hpp"
#include "bekw/specfun.hpp"

namespace bekw {

struct FitResult {
  Model model = Model::beta;
  double p1 = 1.0;  // a (beta) or alpha (kumaraswamy)
  double p2 = 1.0;  // b (beta) or beta (kumaraswamy)
  double loglik_at_max = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = std::numeric_limits<double>::infinity();
};

namespace detail {

inline constexpr double kShapeLo = 1e-6;
inline constexpr double kShapeHi = 1e6;
inline constexpr int kFitMaxIter = 500;

struct SampleStats {
  double n, mean_lx, mean_l1x, mean, var;
};

inline SampleStats sample_stats(const Sample& s, const char* who) {
  validate_sample(s, who);
  if (s.n() < 2) throw input_error(std::string(who) + ": need at least 2 observations");
  SampleStats st{};
  st.n = static_cast<double>(s.n());
  double sx = 0.0, sxx = 0.0;
  for (double v : s.values) {
    st.mean_lx += std::log(v);
    st.mean_l1x += std::log1p(-v);
    sx += v;
    sxx += v * v;
  }
  st.mean_lx /= st.n;
  st.mean_l1x /= st.n;
  st.mean = sx / st.n;
  st.var = std::max(0.0, sxx / st.n - st.mean * st.mean);
  if (st.var < 1e-14)
    throw input_error(std::string(who) +
                      ": sample is numerically constant; the score equations "
                      "have no finite solution");
  return st;
}

struct BetaScoreResult {
  double a = 1.0, b = 1.0;
  double potential = 0.0;  // -log B(a,b) + (a-1) mlx + (b-1) ml1x at (a,b)
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Damped Newton for the beta score system psi(a) - psi(a+b) = mlx,
// psi(b) - psi(a+b) = ml1x, i.e. the stationary point of the strictly
// concave potential -log B + (a-1) mlx + (b-1) ml1x.  Shared by the MLE
// (empirical means) and the pseudo-true solve (population means).
// stop(potential, grad_norm) decides convergence.
template <class StopFn>
inline BetaScoreResult solve_beta_score(double mlx, double ml1x, double a0, double b0,
                                        StopFn&& stop) {
  auto potential_ab = [&](double a, double b) {
    return -log_beta(a, b) + (a - 1.0) * mlx + (b - 1.0) * ml1x;
  };
  double a = std::clamp(a0, 1e-3, 1e3), b = std::clamp(b0, 1e-3, 1e3);
  BetaScoreResult out;
  double pot = potential_ab(a, b);
  for (int it = 0; it < kFitMaxIter; ++it) {
    const double psab = digamma(a + b);
    const double g1 = mlx - (digamma(a) - psab);
    const double g2 = ml1x - (digamma(b) - psab);
    out.iterations = it;
    out.grad_norm = std::hypot(g1, g2);
    if (stop(pot, out.grad_norm)) {
      out.converged = true;
      break;
    }
    // Newton direction from the information matrix (positive definite for
    // the beta family: psi'(a)psi'(b) > psi'(a+b)(psi'(a)+psi'(b))).
    const double tab = trigamma(a + b);
    const double h11 = trigamma(a) - tab, h22 = trigamma(b) - tab;
    const double det = h11 * h22 - tab * tab;
    double da, db;
    if (det > 0.0 && std::isfinite(det)) {
      da = (h22 * g1 + tab * g2) / det;
      db = (tab * g1 + h11 * g2) / det;
    } else {  // fall back to scaled gradient ascent
      da = g1 / (h11 + tab);
      db = g2 / (h22 + tab);
    }
    // Backtracking line search inside the parameter box.  Acceptance is
    // monotone up to a rounding-level slack: near the flat top of the
    // concave potential a full Newton step can lose one ulp, and rejecting
    // it would halve the step until it underflows to a no-op.
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      const double an = a + step * da, bn = b + step * db;
      if (!(an > kShapeLo && an < kShapeHi && bn > kShapeLo && bn < kShapeHi)) continue;
      if (an == a && bn == b) break;  // step underflowed: no representable move
      const double potn = potential_ab(an, bn);
      if (std::isfinite(potn) && potn >= pot - 4e-16 * (1.0 + std::fabs(pot))) {
        a = an;
        b = bn;
        pot = potn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled; re-test the criterion below
  }
  out.a = a;
  out.b = b;
  out.potential = pot;
  if (!out.converged) {
    const double psab = digamma(a + b);
    out.grad_norm = std::hypot(mlx - (digamma(a) - psab), ml1x - (digamma(b) - psab));
    out.converged = stop(pot, out.grad_norm);
  }
  return out;
}

}  // namespace detail

inline FitResult fit_beta(const Sample& s) {
  using namespace detail;
  const SampleStats st = sample_stats(s, "fit_beta");
  const double n = st.n;

  // Method-of-moments start: m(1-m)/v - 1 > 0 for any non-degenerate sample
  // in (0,1); guard defensively anyway.
  const double f = st.mean * (1.0 - st.mean) / st.var - 1.0;
  const double a0 = (f > 0.0) ? st.mean * f : 1.0;
  const double b0 = (f > 0.0) ? (1.0 - st.mean) * f : 1.0;

  // Iterate well past the acceptance tolerance (Newton is quadratic, so the
  // extra accuracy costs one or two steps).  The likelihood-ratio statistic
  // in its expanded form cancels the score terms only at the exact
  // stationary point, so a gradient left at the acceptance level would leak
  // into T_n at the same magnitude.
  const BetaScoreResult r = solve_beta_score(
      st.mean_lx, st.mean_l1x, a0, b0,
      [n](double pot, double grad) { return n * grad <= 1e-13 * (1.0 + n * std::fabs(pot)); });

  FitResult out;
  out.model = Model::beta;
  out.p1 = r.a;
  out.p2 = r.b;
  out.loglik_at_max = n * r.potential;
  out.iterations = r.iterations;
  out.grad_norm = n * r.grad_norm;
  out.converged =
      out.grad_norm <= 1e-9 * (1.0 + std::fabs(out.loglik_at_max));
  if (!out.converged)
    throw convergence_error("fit_beta: Newton iteration did not converge",
                            out.loglik_at_max);
  return out;
}

inline FitResult fit_kw(const Sample& s) {
  using namespace detail;
  const SampleStats st = sample_stats(s, "fit_kw");
  const double n = st.n;
  const double sum_lx = n * st.mean_lx;

  // S(alpha) = sum log(1-x_i^alpha) < 0, T = S', U = T' (all per profile).
  auto stu = [&](double alpha, double* S, double* T, double* U) {
    double sS = 0.0, sT = 0.0, sU = 0.0;
    for (double v : s.values) {
      const double lx = std::log(v);
      const double em = -std::expm1(alpha * lx);  // 1 - x^alpha in (0,1)
      const double xa = 1.0 - em;
      const double r = xa / em;
      sS += std::log(em);
      sT -= lx * r;
      sU -= lx * lx * r / em;
    }
    *S = sS;
    *T = sT;
    *U = sU;
  };
  auto beta_of = [&](double S) { return -n / S; };
  // Profile score g(alpha) = n/alpha + sum log x + (beta_hat - 1) T.
  auto g_of = [&](double alpha, double* gp) {
    double S, T, U;
    stu(alpha, &S, &T, &U);
    const double bh = beta_of(S);
    const double g = n / alpha + sum_lx + (bh - 1.0) * T;
    if (gp) *gp = -n / (alpha * alpha) + (n * T / (S * S)) * T + (bh - 1.0) * U;
    return g;
  };

  // Bracket the root: g(alpha->0+) = +inf; expand upward from 1 until the
  // sign flips, then three bisection sweeps before Newton takes over.
  double lo = kShapeLo, hi = 1.0;
  double ghi = g_of(hi, nullptr);
  while (ghi > 0.0 && hi < kShapeHi) {
    lo = hi;
    hi = std::min(hi * 4.0, kShapeHi);
    ghi = g_of(hi, nullptr);
  }
  if (ghi > 0.0)
    throw convergence_error("fit_kw: alpha root not bracketed inside the parameter box",
                            hi);
  for (int i = 0; i < 3; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g_of(mid, nullptr) > 0.0) lo = mid; else hi = mid;
  }

  FitResult out;
  out.model = Model::kumaraswamy;
  double alpha = 0.5 * (lo + hi);
  int it = 0;
  for (; it < kFitMaxIter; ++it) {
    double S, T, U;
    stu(alpha, &S, &T, &U);
    const double bh = beta_of(S);
    const double g = n / alpha + sum_lx + (bh - 1.0) * T;
    const double gp = -n / (alpha * alpha) + (n * T / (S * S)) * T + (bh - 1.0) * U;
    if (g > 0.0) lo = alpha; else hi = alpha;
    // Likelihood-scaled exit (a fixed |g| <= c*n cut is too loose when the
    // maximized log-likelihood is O(1), as for near-uniform data), aimed two
    // orders below the acceptance tolerance so the profile score is
    // negligible in downstream likelihood-ratio evaluations.
    const double ll = n * std::log(alpha * bh) + (alpha - 1.0) * sum_lx + (bh - 1.0) * S;
    if (std::fabs(g) <= 5e-12 * (1.0 + std::fabs(ll)) || hi - lo <= 1e-15 * hi) break;
    double an = alpha - g / gp;
    if (!(an > lo && an < hi) || !std::isfinite(an)) an = 0.5 * (lo + hi);
    if (an == alpha) break;
    alpha = an;
  }
  out.iterations = it;

  double S, T, U;
  stu(alpha, &S, &T, &U);
  const double beta = beta_of(S);
  out.p1 = alpha;
  out.p2 = beta;
  out.loglik_at_max =
      n * std::log(alpha * beta) + (alpha - 1.0) * sum_lx + (beta - 1.0) * S;
  // Full two-parameter gradient at the solution; the beta component
  // n/beta + S vanishes identically under the profile.
  const double ga = n / alpha + sum_lx + (beta - 1.0) * T;
  const double gb = n / beta + S;
  out.grad_norm = std::hypot(ga, gb);
  out.converged = out.grad_norm <= 1e-9 * (1.0 + std::fabs(out.loglik_at_max));
  if (!out.converged)
    throw convergence_error("fit_kw: alpha iteration did not converge",
                            out.loglik_at_max);
  return out;
}

inline FitResult fit(Model m, const Sample& s) {
  return m == Model::beta ? fit_beta(s) : fit_kw(s);
}

}  // namespace bekw
