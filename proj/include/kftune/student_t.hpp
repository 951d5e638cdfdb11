#pragma once

namespace kftune {

/// Density of the standard Student-t distribution with v degrees of freedom.
double student_t_pdf(double z, double v);

/// CDF of the standard Student-t distribution with v degrees of freedom.
/// Saturates to 0/1 in the far tails.
double student_t_cdf(double z, double v);

/// Lower-tail quantile of the chi-square distribution with dof degrees of freedom.
double chi2_quantile(double p, double dof);

}  // namespace kftune
