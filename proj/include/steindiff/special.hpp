#pragma once

#include <cmath>

namespace steindiff {

inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;
inline constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / kSqrt2Pi;
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

/// Upper tail P(Z > z), accurate for large z.
inline double normal_sf(double z) {
    return 0.5 * std::erfc(z / kSqrt2);
}

/// Phi(zhi) - Phi(zlo) without the cancellation that a naive difference of
/// CDF values suffers when both arguments sit in the same tail.
inline double normal_cdf_diff(double zlo, double zhi) {
    if (zlo > zhi) return -normal_cdf_diff(zhi, zlo);
    if (zlo >= 0.0) return normal_sf(zlo) - normal_sf(zhi);
    if (zhi <= 0.0) return normal_cdf(zhi) - normal_cdf(zlo);
    return normal_cdf(zhi) - normal_cdf(zlo);
}

}  // namespace steindiff
