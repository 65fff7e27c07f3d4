#pragma once

namespace satrack {

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
double gamma_p(double a, double x);

/// Chi-square CDF with `dof` degrees of freedom.
double chi2_cdf(int dof, double x);

/// Inverse chi-square CDF: q such that chi2_cdf(dof, q) == prob (within 1e-10).
/// dof must be in 1..10 and prob in (0, 1).
double chi2_quantile(int dof, double prob);

}  // namespace satrack
