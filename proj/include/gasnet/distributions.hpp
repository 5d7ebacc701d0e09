#pragma once

namespace gasnet {

/// Regularized lower/upper incomplete gamma P(a,x), Q(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chi2_cdf(double x, double dof);
double chi2_sf(double x, double dof);
/// upper quantile: x with P[X > x] = tail
double chi2_isf(double tail, double dof);

/// Survival function of the noncentral chi-squared (dof k, noncentrality lam),
/// Poisson-weighted series of central survivals, abs. accuracy ~1e-12.
double ncx2_sf(double x, double k, double lam);
double ncx2_cdf(double x, double k, double lam);

/// Marcum Q_w(a, b): survival of the noncentral chi-squared with 2w dof and
/// noncentrality a^2, evaluated at b^2.
double marcum_q(double w, double a, double b);
/// b solving Q_w(a, b) = d for d in (0,1).
double marcum_q_inverse(double w, double a, double d);

}  // namespace gasnet
