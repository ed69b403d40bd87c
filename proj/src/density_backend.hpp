#pragma once

#include "steindiff/density.hpp"

#include <memory>
#include <stdexcept>
#include <vector>

namespace steindiff::detail {

class DensityBackend {
public:
    virtual ~DensityBackend() = default;

    virtual double pdf(double x) const = 0;
    virtual double log_pdf(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double quantile(double u) const = 0;
    virtual double mean() const = 0;
    virtual double variance() const = 0;
    virtual double partial_first_moment(double x) const = 0;
    virtual std::string describe() const = 0;

    const SupportInterval& support() const { return support_; }
    Family family() const { return family_; }
    const std::vector<double>& params() const { return params_; }
    double lower_trunc() const { return lower_trunc_; }
    double upper_trunc() const { return upper_trunc_; }

    static TargetDensity wrap(std::shared_ptr<const DensityBackend> b) {
        return TargetDensity(std::move(b));
    }

protected:
    void check_finite_arg(double x) const {
        if (std::isnan(x)) throw std::domain_error("density evaluation: NaN argument");
    }
    void init_trunc() {
        lower_trunc_ = quantile(1e-12);
        upper_trunc_ = quantile(1.0 - 1e-12);
    }

    SupportInterval support_{0.0, 1.0};
    Family family_ = Family::tabulated;
    std::vector<double> params_;
    double lower_trunc_ = 0.0;
    double upper_trunc_ = 1.0;
};

std::shared_ptr<const DensityBackend> make_tabulated_backend(std::vector<double> grid,
                                                             std::vector<double> values);

}  // namespace steindiff::detail
