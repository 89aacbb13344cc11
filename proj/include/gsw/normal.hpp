#pragma once

namespace gsw {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile: Wichura's AS241 (PPND16) rational
/// approximation followed by one Newton step; absolute error below 1e-14
/// on [1e-300, 1 - 1e-16]. Throws InvalidInput outside (0, 1).
double normal_quantile(double prob);

}  // namespace gsw
