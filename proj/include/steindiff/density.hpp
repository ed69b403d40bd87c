#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace steindiff {

/// Open support interval (l, u); endpoints may be infinite, never NaN.
struct SupportInterval {
    double lower;
    double upper;

    bool contains(double x) const { return x > lower && x < upper; }
    bool lower_finite() const;
    bool upper_finite() const;
};

enum class Family {
    normal,
    gamma,
    uniform,
    beta,
    lognormal,
    pareto,
    laplace,
    tabulated,
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);

namespace detail {
class DensityBackend;
}

/// Immutable target law: density, distribution function, moments and the
/// partial first moment used by the diffusion construction. Copies share the
/// backend; safe for concurrent reads.
class TargetDensity {
public:
    const SupportInterval& support() const;
    Family family() const;
    const std::vector<double>& params() const;
    std::string describe() const;

    double pdf(double x) const;
    double log_pdf(double x) const;
    double cdf(double x) const;
    double quantile(double u) const;

    double mean() const;
    double variance() const;

    /// Integral of y p(y) over (l, x]; equals the mean at x = u.
    double partial_first_moment(double x) const;

    /// Quadrature working range: the 1e-12 and 1-1e-12 quantiles (the grid
    /// range for tabulated laws). All cached tables live on this range.
    double lower_trunc() const;
    double upper_trunc() const;

    static TargetDensity make_family(Family f, std::span<const double> params);
    static TargetDensity make_family(Family f, std::initializer_list<double> params);
    /// Family with the parameters used throughout the worked examples
    /// (chi-square(1) for gamma, pareto(2), laplace(1), ...).
    static TargetDensity make_default(Family f);

    static TargetDensity make_tabulated(std::vector<double> grid, std::vector<double> values);
    static TargetDensity load_tabulated_csv(const std::string& path);

private:
    friend class detail::DensityBackend;
    explicit TargetDensity(std::shared_ptr<const detail::DensityBackend> impl);
    std::shared_ptr<const detail::DensityBackend> impl_;
};

/// (pdf(x), cdf(x)) in one call.
std::pair<double, double> eval_pdf_cdf(const TargetDensity& density, double x);

}  // namespace steindiff
