#pragma once

namespace adaptrial::special {

/// Standard normal CDF via erfc; keeps full relative accuracy in the lower tail.
double std_normal_cdf(double z);

/// Inverse of std_normal_cdf on (0, 1). Acklam's rational approximation
/// polished with one Halley step, relative error below 1e-15 in the body.
double std_normal_quantile(double p);

/// log of the location-scale Student-t density with `nu` degrees of freedom,
/// location `mu` and squared scale `sigma_sq`.
double log_t_density(double t, double nu, double mu, double sigma_sq);

}  // namespace adaptrial::special
