#pragma once

#include "steindiff/density.hpp"

#include <optional>
#include <span>

namespace steindiff {

struct DistanceReport {
    double kolmogorov = 0.0;
    double wasserstein1 = 0.0;
    std::optional<double> total_variation;  // densities only
};

/// sup |F_A - F_B|, int |F_A - F_B|, and half the L1 gap of the densities.
DistanceReport reference_distances(const TargetDensity& a, const TargetDensity& b);

/// Empirical CDF of the sample against the closed-form CDF (one-sample
/// Kolmogorov-Smirnov statistic and exact integrated CDF gap). Total
/// variation is not defined for samples and is left empty.
DistanceReport reference_distances(std::span<const double> sample, const TargetDensity& target);

double ks_statistic(std::span<const double> sample, const TargetDensity& target);
/// Same, for a sample that is already sorted ascending.
double ks_statistic_sorted(std::span<const double> sorted, const TargetDensity& target);

}  // namespace steindiff
