#pragma once

#include <cstddef>
#include <vector>

namespace caviar::stats {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal inverse CDF (Wichura's PPND16 rational approximation,
// absolute error below 1e-9 over (0,1)). Throws std::domain_error outside (0,1).
double normal_quantile(double p);

// CDF of the chi-squared distribution with dof degrees of freedom,
// computed through the regularized lower incomplete gamma function.
double chi_squared_cdf(double x, double dof);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Two-sided exact binomial test of rate = p given k successes in n trials
// (sums all outcomes with point probability <= that of k).
double binomial_two_sided_pvalue(int k, int n, double p);

// Lower empirical theta-quantile: the order statistic at 1-based index
// ceil(theta * n), clamped to [1, n]. Does not modify the input.
double lower_quantile(const std::vector<double>& x, double theta);

// Median of |x_i|.
double median_abs(const std::vector<double>& x);

}  // namespace caviar::stats
