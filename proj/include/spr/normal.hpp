#pragma once

namespace spr {

/// Standard normal distribution function.
double normal_cdf(double z);

/// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);

} // namespace spr
