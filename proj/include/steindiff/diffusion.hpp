#pragma once

#include "steindiff/density.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace steindiff {

/// Drift b with a single sign change at `sign_change`: positive below it,
/// negative above it, and centered so that the integral of b against the
/// target density vanishes.
struct DriftSpec {
    std::function<double(double)> b;
    double sign_change = 0.0;
    bool linear = false;  // b(x) = -(x - center)
    double center = 0.0;
};

/// The drift used throughout the worked examples: b(x) = -(x - center).
DriftSpec linear_drift(double center);

enum class CoefficientKind { closed_form, numeric };

struct ModelValidation {
    double min_a = 0.0;            // over the 512-point interior check grid
    double argmin_a = 0.0;
    double inf_a_estimate = 0.0;   // includes near-endpoint probes
    double mean_a = 0.0;           // E a(X) over the truncated support
    bool a_positive = false;

    bool drift_sign_ok = false;
    double drift_centering = 0.0;  // |int b p|
    bool drift_centering_ok = false;
    bool b_nonincreasing_near_ends = false;

    // Endpoint growth of a: a/(x-l), a/(u-x) at finite ends, a itself at
    // infinite ends. These are the sup-norm machinery hypotheses for the
    // derivative-norm route.
    double lower_end_limit = 0.0;
    double upper_end_limit = 0.0;
    bool lower_end_ok = false;
    bool upper_end_ok = false;

    bool c2_route_available = false;  // inf a bounded away from zero
    bool c4_route_available = false;  // endpoint growth conditions hold

    bool ok() const { return a_positive && drift_sign_ok && drift_centering_ok; }
    std::string summary() const;
};

/// Cumulative integrals of a weight function against the target density over
/// the model grid: prefix[i] + suffix[i] = total for every node.
struct CumulativeAgainstDensity {
    std::vector<double> prefix;  // int over (l, x_i]
    std::vector<double> suffix;  // int over [x_i, u)
    double total = 0.0;
};

namespace detail {
struct ModelImpl;
}

/// Ergodic diffusion dX = b(X)dt + sqrt(a(X))dW with invariant density p.
/// Immutable after construction; copies share state.
class DiffusionModel {
public:
    double a(double x) const;
    /// a(x)p(x); for numeric models this is 2 int_l^x b p, which stays
    /// well-conditioned where p degenerates.
    double ap(double x) const;
    double b(double x) const;

    const TargetDensity& density() const;
    const DriftSpec& drift() const;
    CoefficientKind kind() const;

    /// Quantile-spaced working grid (equal cdf increments on the truncated
    /// support).
    const std::vector<double>& grid() const;
    const std::vector<double>& grid_cdf() const;
    double median() const;
    std::size_t median_index() const;

    ModelValidation validate() const;

    CumulativeAgainstDensity cumulative_against_density(
        const std::function<double(double)>& weight) const;
    /// Cached cumulative mass (weight = 1).
    const CumulativeAgainstDensity& mass_cumulative() const;

    void export_csv(const std::string& path) const;  // x, a, b, p

private:
    friend struct detail::ModelImpl;
    explicit DiffusionModel(std::shared_ptr<const detail::ModelImpl> impl);
    std::shared_ptr<const detail::ModelImpl> impl_;
};

/// a(x) = 2 int_l^x b p / p(x) from cached cumulative-integral tables plus
/// local panel refinement. Default drift is b(x) = -(x - mean).
DiffusionModel build_coefficient_numeric(const TargetDensity& density, DriftSpec drift);
DiffusionModel build_coefficient_numeric(const TargetDensity& density);

/// The closed-form (a, b) pair for the seven built-in families.
DiffusionModel closed_form_coefficient(const TargetDensity& density);
DiffusionModel closed_form_coefficient(Family family, std::span<const double> params);
DiffusionModel closed_form_coefficient(Family family, std::initializer_list<double> params);

/// p(x) = p(c) a(c) / a(x) * exp(int_c^x 2b/a) rebuilt from the coefficients.
class ReconstructedDensity {
public:
    ReconstructedDensity(const DiffusionModel& model, double c, double p_c);
    double operator()(double x) const;
    double valid_lower() const { return valid_lower_; }
    double valid_upper() const { return valid_upper_; }
    bool range_limited() const { return range_limited_; }

private:
    DiffusionModel model_;
    std::vector<double> exponent_;  // int_c^x 2b/a at grid nodes
    std::vector<char> node_valid_;
    double c_, p_c_, a_c_;
    double valid_lower_, valid_upper_;
    bool range_limited_ = false;
};

ReconstructedDensity reconstruct_density(const DiffusionModel& model, double c, double p_c);

}  // namespace steindiff
