#pragma once

// Pseudo-true (quasi-MLE limit) parameters of the misspecified family: the
// parameter pair of the other family maximizing the expected log-density
// under the source law.  Both directions reduce to low-dimensional root
// finding on digamma/series expressions; every solve is certified against
// the quadrature evaluation of the expected log-density.

#include <algorithm>
#include <cmath>

#include "bekw/dist.hpp"
#include "bekw/errors.hpp"
#include "bekw/fit.hpp"
#include "bekw/specfun.hpp"

namespace bekw {

struct PseudoTruePair {
  Model source_model = Model::beta;
  double source_p1 = 1.0, source_p2 = 1.0;
  double target_p1 = 1.0, target_p2 = 1.0;  // the other family's shapes
  double lambda_at_max = 0.0;               // per-observation expected log-density
  double kkt_residual = 0.0;                // stationarity residual at the solution
  double quad_gap = 0.0;                    // |series lambda - quadrature lambda|
};

// Expected log-density of `target` under `source` by quadrature (normative).
inline double lambda_quadrature(Model source, double sp1, double sp2, Model target,
                                double tp1, double tp2,
                                const QuadratureSpec& spec = {}) {
  return expect_ctx([&](const XCtx& c) { return log_density_ctx(target, tp1, tp2, c); },
                    source, sp1, sp2, spec);
}

namespace detail {

inline constexpr double kIntersectionTol = 1e-10;

// Quadrature-only fallback maximizer: coordinate golden-section sweeps on the
// expected log-density, used when the series route disagrees with quadrature.
inline void lambda_quad_maximize(Model source, double sp1, double sp2, Model target,
                                 double* tp1, double* tp2) {
  auto lam = [&](double u, double v) {
    return lambda_quadrature(source, sp1, sp2, target, u, v);
  };
  auto golden = [&](auto f, double lo, double hi) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    while (hi - lo > 1e-9 * (1.0 + hi)) {
      if (f1 < f2) {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + r * (hi - lo); f2 = f(x2);
      } else {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - r * (hi - lo); f1 = f(x1);
      }
    }
    return 0.5 * (lo + hi);
  };
  double u = *tp1, v = *tp2;
  for (int sweep = 0; sweep < 40; ++sweep) {
    const double u_prev = u, v_prev = v;
    u = golden([&](double t) { return lam(t, v); }, std::max(kShapeLo, 0.2 * u),
               std::min(kShapeHi, 5.0 * u));
    v = golden([&](double t) { return lam(u, t); }, std::max(kShapeLo, 0.2 * v),
               std::min(kShapeHi, 5.0 * v));
    if (std::fabs(u - u_prev) < 1e-8 * (1.0 + u) && std::fabs(v - v_prev) < 1e-8 * (1.0 + v))
      break;
  }
  *tp1 = u;
  *tp2 = v;
}

}  // namespace detail

// Pseudo-true Kumaraswamy parameters under a beta source law.  The second
// shape profiles out exactly, beta_t(alpha) = B(a,b) / F(a,b,alpha); the
// remaining stationarity condition in alpha,
//   1/alpha + psi(a) - psi(a+b) - ((beta_t - 1)/B) G(a,b,alpha) = 0,
// is solved by bisection-safeguarded secant on (1e-6, 1e6).
inline PseudoTruePair pseudo_kw_of_beta(const BetaParams& p) {
  detail::check_shapes(p.a, p.b, "pseudo_kw_of_beta");
  PseudoTruePair out;
  out.source_model = Model::beta;
  out.source_p1 = p.a;
  out.source_p2 = p.b;

  const double elx = digamma(p.a) - digamma(p.a + p.b);  // E[log X]
  const double B = std::exp(log_beta(p.a, p.b));

  // Families coincide on a=1 (X^1 route) and b=1; the stationarity equation
  // degenerates there, so short-circuit to the exact fixed point.
  if (std::fabs(p.a - 1.0) < detail::kIntersectionTol ||
      std::fabs(p.b - 1.0) < detail::kIntersectionTol) {
    out.target_p1 = p.a;
    out.target_p2 = p.b;
    out.lambda_at_max = std::log(p.a * p.b) + (p.a - 1.0) * elx -
                        (p.b - 1.0) * eval_series(SeriesKind::F, p.a, p.b, p.a).value / B;
    out.quad_gap = std::fabs(
        out.lambda_at_max -
        lambda_quadrature(Model::beta, p.a, p.b, Model::kumaraswamy, p.a, p.b));
    return out;
  }

  auto F_of = [&](double alpha) {
    return eval_series(SeriesKind::F, p.a, p.b, alpha, 1e-11).value;
  };
  auto beta_of = [&](double F) { return B / F; };
  auto h_of = [&](double alpha) {
    const double F = F_of(alpha);
    const double G = eval_series(SeriesKind::G, p.a, p.b, alpha, 1e-11).value;
    return 1.0 / alpha + elx - ((beta_of(F) - 1.0) / B) * G;
  };

  // h(0+) = +inf; expand upward until the sign flips.
  double lo = detail::kShapeLo, hi = 1.0, hhi = h_of(hi);
  while (hhi > 0.0 && hi < detail::kShapeHi) {
    lo = hi;
    hi = std::min(hi * 4.0, detail::kShapeHi);
    hhi = h_of(hi);
  }
  if (hhi > 0.0)
    throw convergence_error(
        "pseudo_kw_of_beta: stationarity root not bracketed inside the parameter box",
        hi);
  // Illinois-damped regula falsi: halving the retained endpoint value when
  // the same side repeats avoids stagnation against the huge h(1e-6).
  double hlo = h_of(lo);
  double alpha = 0.5 * (lo + hi), h = h_of(alpha);
  int side = 0;
  for (int it = 0; it < 200 && std::fabs(h) > 1e-11; ++it) {
    if (h > 0.0) {
      lo = alpha;
      hlo = h;
      if (side == +1) hhi *= 0.5;
      side = +1;
    } else {
      hi = alpha;
      hhi = h;
      if (side == -1) hlo *= 0.5;
      side = -1;
    }
    if (hi - lo < 1e-15 * hi) break;
    double an = (lo * hhi - hi * hlo) / (hhi - hlo);
    if (!(an > lo && an < hi) || !std::isfinite(an)) an = 0.5 * (lo + hi);
    alpha = an;
    h = h_of(alpha);
  }

  const double F = F_of(alpha);
  const double beta_t = beta_of(F);
  out.target_p1 = alpha;
  out.target_p2 = beta_t;
  out.kkt_residual = std::fabs(h);  // d(lambda)/d(beta) vanishes by the profile
  out.lambda_at_max =
      std::log(alpha * beta_t) + (alpha - 1.0) * elx - (beta_t - 1.0) * F / B;
  out.quad_gap = std::fabs(out.lambda_at_max -
                           lambda_quadrature(Model::beta, p.a, p.b, Model::kumaraswamy,
                                             alpha, beta_t));
  if (out.quad_gap > 1e-6) {
    // Series and quadrature disagree: the quadrature maximizer is authoritative.
    detail::lambda_quad_maximize(Model::beta, p.a, p.b, Model::kumaraswamy,
                                 &out.target_p1, &out.target_p2);
    out.lambda_at_max = lambda_quadrature(Model::beta, p.a, p.b, Model::kumaraswamy,
                                          out.target_p1, out.target_p2);
  }
  return out;
}

// Pseudo-true beta parameters under a Kumaraswamy source law.  The system
//   psi(a_t+b_t) - psi(a_t) + (1/alpha)[psi(1) - psi(beta+1)] = 0
//   psi(a_t+b_t) - psi(b_t) - beta F(1,beta,1/alpha) = 0
// is the beta score system with population moments E[log X], E[log(1-X)],
// solved by the shared damped-Newton kernel from (a_t,b_t) = (alpha,beta).
inline PseudoTruePair pseudo_beta_of_kw(const KwParams& p) {
  detail::check_shapes(p.alpha, p.beta, "pseudo_beta_of_kw");
  PseudoTruePair out;
  out.source_model = Model::kumaraswamy;
  out.source_p1 = p.alpha;
  out.source_p2 = p.beta;

  if (std::fabs(p.alpha - 1.0) < detail::kIntersectionTol ||
      std::fabs(p.beta - 1.0) < detail::kIntersectionTol) {
    out.target_p1 = p.alpha;
    out.target_p2 = p.beta;
    out.lambda_at_max = lambda_quadrature(Model::kumaraswamy, p.alpha, p.beta,
                                          Model::beta, p.alpha, p.beta);
    return out;
  }

  // Population moments under Kumaraswamy: X^alpha ~ Beta(1,beta).
  const double mlx = (digamma(1.0) - digamma(p.beta + 1.0)) / p.alpha;
  const double ml1x =
      -p.beta * eval_series(SeriesKind::F, 1.0, p.beta, 1.0 / p.alpha, 1e-11).value;

  const detail::BetaScoreResult r =
      detail::solve_beta_score(mlx, ml1x, p.alpha, p.beta,
                               [](double, double grad) { return grad <= 1e-11; });
  if (!r.converged)
    throw convergence_error("pseudo_beta_of_kw: Newton iteration did not converge",
                            r.potential);
  // Maximizer certificate: the potential Hessian is negative definite exactly
  // when the information determinant is positive.
  const double tab = trigamma(r.a + r.b);
  const double h11 = trigamma(r.a) - tab, h22 = trigamma(r.b) - tab;
  if (!(h11 > 0.0 && h11 * h22 - tab * tab > 0.0))
    throw convergence_error("pseudo_beta_of_kw: stationary point is not a maximum", r.a);

  out.target_p1 = r.a;
  out.target_p2 = r.b;
  out.kkt_residual = r.grad_norm;
  out.lambda_at_max = r.potential;
  out.quad_gap = std::fabs(out.lambda_at_max -
                           lambda_quadrature(Model::kumaraswamy, p.alpha, p.beta,
                                             Model::beta, r.a, r.b));
  if (out.quad_gap > 1e-6) {
    detail::lambda_quad_maximize(Model::kumaraswamy, p.alpha, p.beta, Model::beta,
                                 &out.target_p1, &out.target_p2);
    out.lambda_at_max = lambda_quadrature(Model::kumaraswamy, p.alpha, p.beta,
                                          Model::beta, out.target_p1, out.target_p2);
  }
  return out;
}

inline PseudoTruePair pseudo_true(Model source, double p1, double p2) {
  return source == Model::beta ? pseudo_kw_of_beta(BetaParams{p1, p2})
                               : pseudo_beta_of_kw(KwParams{p1, p2});
}

}  // namespace bekw
