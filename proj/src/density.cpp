#include "steindiff/density.hpp"

#include "density_backend.hpp"
#include "steindiff/special.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace steindiff {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_quantile(double u) {
    if (u <= 0.0) return -kInf;
    if (u >= 1.0) return kInf;
    return -kSqrt2 * boost::math::erfc_inv(2.0 * u);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("make_family: " + what);
}
}  // namespace

bool SupportInterval::lower_finite() const { return std::isfinite(lower); }
bool SupportInterval::upper_finite() const { return std::isfinite(upper); }

std::string family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::gamma: return "gamma";
        case Family::uniform: return "uniform";
        case Family::beta: return "beta";
        case Family::lognormal: return "lognormal";
        case Family::pareto: return "pareto";
        case Family::laplace: return "laplace";
        case Family::tabulated: return "tabulated";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    for (Family f : {Family::normal, Family::gamma, Family::uniform, Family::beta,
                     Family::lognormal, Family::pareto, Family::laplace, Family::tabulated}) {
        if (family_name(f) == name) return f;
    }
    throw std::invalid_argument("unknown density family: " + name);
}

namespace detail {
namespace {

class NormalBackend final : public DensityBackend {
public:
    NormalBackend(double mu, double sigma) : mu_(mu), sigma_(sigma) {
        require(std::isfinite(mu) && std::isfinite(sigma), "normal: parameters must be finite");
        require(sigma > 0.0, "normal: sigma must be > 0");
        family_ = Family::normal;
        params_ = {mu, sigma};
        support_ = {-kInf, kInf};
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (!std::isfinite(x)) return 0.0;
        return normal_pdf((x - mu_) / sigma_) / sigma_;
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        const double z = (x - mu_) / sigma_;
        return -0.5 * z * z - std::log(sigma_ * kSqrt2Pi);
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        return normal_cdf((x - mu_) / sigma_);
    }
    double quantile(double u) const override { return mu_ + sigma_ * normal_quantile(u); }
    double mean() const override { return mu_; }
    double variance() const override { return sigma_ * sigma_; }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        if (x == kInf) return mu_;
        const double z = (x - mu_) / sigma_;
        return mu_ * normal_cdf(z) - sigma_ * normal_pdf(z);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "normal(mu=" << mu_ << ", sigma=" << sigma_ << ")";
        return os.str();
    }

private:
    double mu_, sigma_;
};

class GammaBackend final : public DensityBackend {
public:
    GammaBackend(double shape, double rate) : shape_(shape), rate_(rate) {
        require(std::isfinite(shape) && std::isfinite(rate), "gamma: parameters must be finite");
        require(shape > 0.0, "gamma: shape must be > 0");
        require(rate > 0.0, "gamma: rate must be > 0");
        family_ = Family::gamma;
        params_ = {shape, rate};
        support_ = {0.0, kInf};
        log_norm_ = shape * std::log(rate) - std::lgamma(shape);
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
        return std::exp(log_pdf(x));
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        if (!(x > 0.0)) return -kInf;
        return log_norm_ + (shape_ - 1.0) * std::log(x) - rate_ * x;
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x == kInf) return 1.0;
        return boost::math::gamma_p(shape_, rate_ * x);
    }
    double quantile(double u) const override {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return kInf;
        return boost::math::gamma_p_inv(shape_, u) / rate_;
    }
    double mean() const override { return shape_ / rate_; }
    double variance() const override { return shape_ / (rate_ * rate_); }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x == kInf) return mean();
        return mean() * boost::math::gamma_p(shape_ + 1.0, rate_ * x);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "gamma(shape=" << shape_ << ", rate=" << rate_ << ")";
        return os.str();
    }

private:
    double shape_, rate_, log_norm_;
};

class UniformBackend final : public DensityBackend {
public:
    UniformBackend(double a, double b) : a_(a), b_(b) {
        require(std::isfinite(a) && std::isfinite(b), "uniform: endpoints must be finite");
        require(a < b, "uniform: lower endpoint must be below upper");
        family_ = Family::uniform;
        params_ = {a, b};
        support_ = {a, b};
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        return support_.contains(x) ? 1.0 / (b_ - a_) : 0.0;
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        return support_.contains(x) ? -std::log(b_ - a_) : -kInf;
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        return (x - a_) / (b_ - a_);
    }
    double quantile(double u) const override { return a_ + (b_ - a_) * u; }
    double mean() const override { return 0.5 * (a_ + b_); }
    double variance() const override { return (b_ - a_) * (b_ - a_) / 12.0; }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        const double t = std::min(std::max(x, a_), b_);
        return 0.5 * (t * t - a_ * a_) / (b_ - a_);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "uniform(" << a_ << ", " << b_ << ")";
        return os.str();
    }

private:
    double a_, b_;
};

class BetaBackend final : public DensityBackend {
public:
    BetaBackend(double alpha, double beta) : alpha_(alpha), beta_(beta) {
        require(std::isfinite(alpha) && std::isfinite(beta), "beta: parameters must be finite");
        require(alpha > 0.0 && beta > 0.0, "beta: both shape parameters must be > 0");
        family_ = Family::beta;
        params_ = {alpha, beta};
        support_ = {0.0, 1.0};
        log_norm_ = std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (!support_.contains(x)) return 0.0;
        return std::exp(log_pdf(x));
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        if (!support_.contains(x)) return -kInf;
        return log_norm_ + (alpha_ - 1.0) * std::log(x) + (beta_ - 1.0) * std::log1p(-x);
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        return boost::math::ibeta(alpha_, beta_, x);
    }
    double quantile(double u) const override {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return boost::math::ibeta_inv(alpha_, beta_, u);
    }
    double mean() const override { return alpha_ / (alpha_ + beta_); }
    double variance() const override {
        const double s = alpha_ + beta_;
        return alpha_ * beta_ / (s * s * (s + 1.0));
    }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return mean();
        return mean() * boost::math::ibeta(alpha_ + 1.0, beta_, x);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "beta(alpha=" << alpha_ << ", beta=" << beta_ << ")";
        return os.str();
    }

private:
    double alpha_, beta_, log_norm_;
};

class LogNormalBackend final : public DensityBackend {
public:
    LogNormalBackend(double delta, double sigma) : delta_(delta), sigma_(sigma) {
        require(std::isfinite(delta) && std::isfinite(sigma), "lognormal: parameters must be finite");
        require(sigma > 0.0, "lognormal: sigma must be > 0");
        family_ = Family::lognormal;
        params_ = {delta, sigma};
        support_ = {0.0, kInf};
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
        const double z = (std::log(x) - delta_) / sigma_;
        return normal_pdf(z) / (sigma_ * x);
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        if (!(x > 0.0)) return -kInf;
        const double lx = std::log(x);
        const double z = (lx - delta_) / sigma_;
        return -0.5 * z * z - lx - std::log(sigma_ * kSqrt2Pi);
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x == kInf) return 1.0;
        return normal_cdf((std::log(x) - delta_) / sigma_);
    }
    double quantile(double u) const override {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return kInf;
        return std::exp(delta_ + sigma_ * normal_quantile(u));
    }
    double mean() const override { return std::exp(delta_ + 0.5 * sigma_ * sigma_); }
    double variance() const override {
        const double s2 = sigma_ * sigma_;
        return std::expm1(s2) * std::exp(2.0 * delta_ + s2);
    }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x == kInf) return mean();
        const double z = (std::log(x) - delta_) / sigma_;
        return mean() * normal_cdf(z - sigma_);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "lognormal(delta=" << delta_ << ", sigma=" << sigma_ << ")";
        return os.str();
    }

private:
    double delta_, sigma_;
};

// Pareto with density alpha (1+x)^(-alpha-1) on (0, inf); mean 1/(alpha-1).
class ParetoBackend final : public DensityBackend {
public:
    explicit ParetoBackend(double alpha) : alpha_(alpha) {
        require(std::isfinite(alpha), "pareto: alpha must be finite");
        require(alpha > 1.0, "pareto: alpha must be > 1 (finite mean)");
        family_ = Family::pareto;
        params_ = {alpha};
        support_ = {0.0, kInf};
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (!(x >= 0.0) || !std::isfinite(x)) return x == 0.0 ? alpha_ : 0.0;
        if (x == 0.0) return 0.0;  // open support
        return alpha_ * std::pow(1.0 + x, -alpha_ - 1.0);
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        if (!(x > 0.0)) return -kInf;
        return std::log(alpha_) - (alpha_ + 1.0) * std::log1p(x);
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x == kInf) return 1.0;
        return -std::expm1(-alpha_ * std::log1p(x));
    }
    double quantile(double u) const override {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return kInf;
        return std::expm1(-std::log1p(-u) / alpha_);
    }
    double mean() const override { return 1.0 / (alpha_ - 1.0); }
    double variance() const override {
        if (alpha_ <= 2.0) return kInf;
        return alpha_ / ((alpha_ - 1.0) * (alpha_ - 1.0) * (alpha_ - 2.0));
    }
    double partial_first_moment(double x) const override {
        // int_0^x y alpha (1+y)^(-alpha-1) dy
        //   = 1/(alpha-1) - (1+x)^(-alpha) (x + (1+x)/(alpha-1))
        check_finite_arg(x);
        if (x <= 0.0) return 0.0;
        if (x == kInf) return mean();
        const double tail = std::exp(-alpha_ * std::log1p(x));
        return mean() - tail * (x + (1.0 + x) / (alpha_ - 1.0));
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "pareto(alpha=" << alpha_ << ")";
        return os.str();
    }

private:
    double alpha_;
};

class LaplaceBackend final : public DensityBackend {
public:
    explicit LaplaceBackend(double alpha) : alpha_(alpha) {
        require(std::isfinite(alpha), "laplace: alpha must be finite");
        require(alpha > 0.0, "laplace: alpha must be > 0");
        family_ = Family::laplace;
        params_ = {alpha};
        support_ = {-kInf, kInf};
        init_trunc();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (!std::isfinite(x)) return 0.0;
        return 0.5 * alpha_ * std::exp(-alpha_ * std::abs(x));
    }
    double log_pdf(double x) const override {
        check_finite_arg(x);
        return std::log(0.5 * alpha_) - alpha_ * std::abs(x);
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x < 0.0) return 0.5 * std::exp(alpha_ * x);
        return 1.0 - 0.5 * std::exp(-alpha_ * x);
    }
    double quantile(double u) const override {
        if (u <= 0.0) return -kInf;
        if (u >= 1.0) return kInf;
        if (u < 0.5) return std::log(2.0 * u) / alpha_;
        return -std::log(2.0 * (1.0 - u)) / alpha_;
    }
    double mean() const override { return 0.0; }
    double variance() const override { return 2.0 / (alpha_ * alpha_); }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        if (x == -kInf) return 0.0;
        if (x == kInf) return 0.0;
        if (x < 0.0) return 0.5 * std::exp(alpha_ * x) * (x - 1.0 / alpha_);
        return -0.5 * std::exp(-alpha_ * x) * (x + 1.0 / alpha_);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "laplace(alpha=" << alpha_ << ")";
        return os.str();
    }

private:
    double alpha_;
};

}  // namespace
}  // namespace detail

TargetDensity::TargetDensity(std::shared_ptr<const detail::DensityBackend> impl)
    : impl_(std::move(impl)) {}

const SupportInterval& TargetDensity::support() const { return impl_->support(); }
Family TargetDensity::family() const { return impl_->family(); }
const std::vector<double>& TargetDensity::params() const { return impl_->params(); }
std::string TargetDensity::describe() const { return impl_->describe(); }
double TargetDensity::pdf(double x) const { return impl_->pdf(x); }
double TargetDensity::log_pdf(double x) const { return impl_->log_pdf(x); }
double TargetDensity::cdf(double x) const { return impl_->cdf(x); }
double TargetDensity::quantile(double u) const {
    if (std::isnan(u) || u < 0.0 || u > 1.0)
        throw std::domain_error("quantile: probability must lie in [0,1]");
    return impl_->quantile(u);
}
double TargetDensity::mean() const { return impl_->mean(); }
double TargetDensity::variance() const { return impl_->variance(); }
double TargetDensity::partial_first_moment(double x) const {
    if (std::isnan(x)) throw std::domain_error("partial_first_moment: NaN argument");
    const auto& s = impl_->support();
    if (x < s.lower || x > s.upper)
        throw std::domain_error("partial_first_moment: argument outside [l,u]");
    return impl_->partial_first_moment(x);
}
double TargetDensity::lower_trunc() const { return impl_->lower_trunc(); }
double TargetDensity::upper_trunc() const { return impl_->upper_trunc(); }

TargetDensity TargetDensity::make_family(Family f, std::span<const double> params) {
    auto arg = [&](std::size_t i, double fallback) {
        return i < params.size() ? params[i] : fallback;
    };
    auto expect = [&](std::size_t n) {
        if (params.size() > n)
            throw std::invalid_argument("make_family: too many parameters for " + family_name(f));
    };
    using detail::DensityBackend;
    switch (f) {
        case Family::normal:
            expect(2);
            return DensityBackend::wrap(
                std::make_shared<detail::NormalBackend>(arg(0, 0.0), arg(1, 1.0)));
        case Family::gamma:
            expect(2);
            return DensityBackend::wrap(
                std::make_shared<detail::GammaBackend>(arg(0, 0.5), arg(1, 0.5)));
        case Family::uniform:
            expect(2);
            return DensityBackend::wrap(
                std::make_shared<detail::UniformBackend>(arg(0, 0.0), arg(1, 1.0)));
        case Family::beta:
            expect(2);
            return DensityBackend::wrap(
                std::make_shared<detail::BetaBackend>(arg(0, 0.5), arg(1, 1.0)));
        case Family::lognormal:
            expect(2);
            return DensityBackend::wrap(
                std::make_shared<detail::LogNormalBackend>(arg(0, 0.0), arg(1, 1.0)));
        case Family::pareto:
            expect(1);
            return DensityBackend::wrap(std::make_shared<detail::ParetoBackend>(arg(0, 2.0)));
        case Family::laplace:
            expect(1);
            return DensityBackend::wrap(std::make_shared<detail::LaplaceBackend>(arg(0, 1.0)));
        case Family::tabulated:
            throw std::invalid_argument("make_family: use make_tabulated for tabulated densities");
    }
    throw std::invalid_argument("make_family: unknown family");
}

TargetDensity TargetDensity::make_family(Family f, std::initializer_list<double> params) {
    return make_family(f, std::span<const double>(params.begin(), params.size()));
}

TargetDensity TargetDensity::make_default(Family f) {
    return make_family(f, std::span<const double>{});
}

TargetDensity TargetDensity::make_tabulated(std::vector<double> grid, std::vector<double> values) {
    return detail::DensityBackend::wrap(
        detail::make_tabulated_backend(std::move(grid), std::move(values)));
}

std::pair<double, double> eval_pdf_cdf(const TargetDensity& density, double x) {
    if (std::isnan(x)) throw std::domain_error("eval_pdf_cdf: NaN argument");
    return {density.pdf(x), density.cdf(x)};
}

}  // namespace steindiff
