#include "steindiff/diffusion.hpp"

#include "steindiff/io.hpp"
#include "steindiff/quadrature.hpp"
#include "steindiff/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace steindiff {

namespace {

constexpr std::size_t kGridSize = 4096;

const QuadratureOptions kPanelOpts{1e-14, 1e-10, 60, false};
const QuadratureOptions kLocalOpts{1e-14, 1e-10, 40, false};

}  // namespace

DriftSpec linear_drift(double center) {
    DriftSpec d;
    d.b = [center](double x) { return -(x - center); };
    d.sign_change = center;
    d.linear = true;
    d.center = center;
    return d;
}

namespace detail {

struct ModelImpl {
    TargetDensity density;
    DriftSpec drift;
    CoefficientKind kind;
    std::function<double(double)> a_closed;  // closed_form kind only

    std::vector<double> x;  // quantile-spaced nodes
    std::vector<double> u;  // cdf levels of the nodes
    std::size_t median_idx = 0;
    double median_x = 0.0;

    CumulativeAgainstDensity mass;  // weight = 1

    // Numeric kind: cumulative drift integrals G(x) = int_l^x b p.
    std::vector<double> g_prefix;
    std::vector<double> g_suffix;  // int_{x_i}^u b p
    double total_bp = 0.0;

    static DiffusionModel wrap(std::shared_ptr<const ModelImpl> impl) {
        return DiffusionModel(std::move(impl));
    }

    ModelImpl(TargetDensity d, DriftSpec dr, CoefficientKind k)
        : density(std::move(d)), drift(std::move(dr)), kind(k) {
        build_grid();
        mass = cumulative([](double) { return 1.0; });
    }

    void build_grid() {
        x.resize(kGridSize);
        u.resize(kGridSize);
        const double ulo = density.cdf(density.lower_trunc());
        const double uhi = density.cdf(density.upper_trunc());
        for (std::size_t i = 0; i < kGridSize; ++i) {
            u[i] = ulo + (uhi - ulo) * static_cast<double>(i) / (kGridSize - 1);
            x[i] = density.quantile(u[i]);
            if (i > 0 && !(x[i] > x[i - 1]))
                x[i] = std::nextafter(x[i - 1], std::numeric_limits<double>::infinity());
        }
        median_x = density.quantile(0.5);
        median_idx = static_cast<std::size_t>(
            std::lower_bound(x.begin(), x.end(), median_x) - x.begin());
        median_idx = std::min(median_idx, kGridSize - 1);
    }

    std::size_t panel_of(double xv) const {
        const auto it = std::upper_bound(x.begin(), x.end(), xv);
        const std::size_t i = static_cast<std::size_t>(it - x.begin());
        return std::min(std::max<std::size_t>(i, 1) - 1, x.size() - 2);
    }

    // Per-panel integrals of weight*p in x-space plus the two tail slivers in
    // quantile space (where endpoint degeneracies are absorbed by the
    // quantile map), assembled into prefix and suffix sums.
    CumulativeAgainstDensity cumulative(const std::function<double(double)>& weight) const {
        const std::size_t n = x.size();
        std::vector<double> panel(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            panel[i] = integrate(
                [&](double y) { return weight(y) * density.pdf(y); }, x[i], x[i + 1], kPanelOpts);
        }
        double sliver_lo = 0.0, sliver_hi = 0.0;
        if (u.front() > 0.0)
            sliver_lo = integrate([&](double t) { return weight(density.quantile(t)); }, 0.0,
                                  u.front(), kLocalOpts);
        if (u.back() < 1.0)
            sliver_hi = integrate([&](double t) { return weight(density.quantile(t)); }, u.back(),
                                  1.0, kLocalOpts);

        CumulativeAgainstDensity out;
        out.prefix.resize(n);
        out.suffix.resize(n);
        out.prefix[0] = sliver_lo;
        for (std::size_t i = 0; i + 1 < n; ++i) out.prefix[i + 1] = out.prefix[i] + panel[i];
        out.suffix[n - 1] = sliver_hi;
        for (std::size_t i = n - 1; i > 0; --i) out.suffix[i - 1] = out.suffix[i] + panel[i - 1];
        out.total = out.prefix[n - 1] + out.suffix[n - 1];
        return out;
    }

    void build_drift_tables() {
        const std::size_t n = x.size();
        std::vector<double> panel(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            panel[i] = integrate(
                [&](double y) { return drift.b(y) * density.pdf(y); }, x[i], x[i + 1], kPanelOpts);
        }
        // Tail slivers: exact via the partial first moment for linear drift,
        // quantile-space quadrature otherwise.
        double sliver_lo = 0.0, sliver_hi = 0.0;
        if (drift.linear) {
            sliver_lo = drift.center * u.front() - density.partial_first_moment(x.front());
            sliver_hi = drift.center * (1.0 - u.back()) -
                        (density.mean() - density.partial_first_moment(x.back()));
        } else {
            if (u.front() > 0.0)
                sliver_lo = integrate([&](double t) { return drift.b(density.quantile(t)); }, 0.0,
                                      u.front(), kLocalOpts);
            if (u.back() < 1.0)
                sliver_hi = integrate([&](double t) { return drift.b(density.quantile(t)); },
                                      u.back(), 1.0, kLocalOpts);
        }
        g_prefix.resize(n);
        g_suffix.resize(n);
        g_prefix[0] = sliver_lo;
        for (std::size_t i = 0; i + 1 < n; ++i) g_prefix[i + 1] = g_prefix[i] + panel[i];
        g_suffix[n - 1] = sliver_hi;
        for (std::size_t i = n - 1; i > 0; --i) g_suffix[i - 1] = g_suffix[i] + panel[i - 1];
        total_bp = g_prefix[n - 1] + g_suffix[n - 1];
    }

    // G(x) = int_l^x b p, accumulated from the nearer end of the support so
    // relative accuracy survives in both tails (the total integral is zero).
    double cumulative_bp(double xv) const {
        const double xc = std::clamp(xv, x.front(), x.back());
        const std::size_t k = panel_of(xc);
        auto seg = [&](double lo, double hi) {
            if (lo >= hi) return 0.0;
            return integrate(
                [&](double y) { return drift.b(y) * density.pdf(y); }, lo, hi, kLocalOpts);
        };
        if (xc <= median_x) return g_prefix[k] + seg(x[k], xc);
        return -(g_suffix[k + 1] + seg(xc, x[k + 1]));
    }

    double a_value(double xv) const {
        if (std::isnan(xv)) throw std::domain_error("a(x): NaN argument");
        if (kind == CoefficientKind::closed_form) return a_closed(xv);
        const double xc = std::clamp(xv, x.front(), x.back());
        const double g = cumulative_bp(xc);
        const double p = density.pdf(xc);
        if (p >= 1e-300) return 2.0 * g / p;
        if (!(g > 0.0)) return 0.0;
        return std::exp(std::log(2.0 * g) - density.log_pdf(xc));
    }

    double ap_value(double xv) const {
        if (kind == CoefficientKind::numeric) return 2.0 * cumulative_bp(xv);
        return a_closed(xv) * density.pdf(xv);
    }
};

}  // namespace detail

DiffusionModel::DiffusionModel(std::shared_ptr<const detail::ModelImpl> impl)
    : impl_(std::move(impl)) {}

double DiffusionModel::a(double x) const { return impl_->a_value(x); }
double DiffusionModel::ap(double x) const { return impl_->ap_value(x); }
double DiffusionModel::b(double x) const { return impl_->drift.b(x); }
const TargetDensity& DiffusionModel::density() const { return impl_->density; }
const DriftSpec& DiffusionModel::drift() const { return impl_->drift; }
CoefficientKind DiffusionModel::kind() const { return impl_->kind; }
const std::vector<double>& DiffusionModel::grid() const { return impl_->x; }
const std::vector<double>& DiffusionModel::grid_cdf() const { return impl_->u; }
double DiffusionModel::median() const { return impl_->median_x; }
std::size_t DiffusionModel::median_index() const { return impl_->median_idx; }

CumulativeAgainstDensity DiffusionModel::cumulative_against_density(
    const std::function<double(double)>& weight) const {
    return impl_->cumulative(weight);
}

const CumulativeAgainstDensity& DiffusionModel::mass_cumulative() const { return impl_->mass; }

namespace {

std::function<double(double)> closed_form_a(const TargetDensity& density) {
    const auto& prm = density.params();
    switch (density.family()) {
        case Family::normal: {
            const double s2 = prm[1] * prm[1];
            return [s2](double) { return 2.0 * s2; };
        }
        case Family::gamma: {
            const double rate = prm[1];
            return [rate](double x) { return 2.0 * x / rate; };
        }
        case Family::uniform: {
            const double a0 = prm[0], b0 = prm[1];
            return [a0, b0](double x) { return (x - a0) * (b0 - x); };
        }
        case Family::beta: {
            const double s = prm[0] + prm[1];
            return [s](double x) { return 2.0 * x * (1.0 - x) / s; };
        }
        case Family::lognormal: {
            const double delta = prm[0], sigma = prm[1];
            const double m = std::exp(delta + 0.5 * sigma * sigma);
            TargetDensity d = density;
            return [delta, sigma, m, d](double x) {
                if (!(x > 0.0)) return 0.0;
                const double z = (std::log(x) - delta) / sigma;
                const double diff = normal_cdf_diff(z - sigma, z);
                if (diff > 0.0 && std::isfinite(diff))
                    return 2.0 * m * std::exp(std::log(diff) - d.log_pdf(x));
                // both CDF arguments in one far tail: Mills-ratio estimate of
                // the dominant increment
                const double t = z > 0.0 ? z - sigma : -z;
                const double log_diff = -0.5 * t * t - std::log(t * kSqrt2Pi);
                return 2.0 * m * std::exp(log_diff - d.log_pdf(x));
            };
        }
        case Family::pareto: {
            const double alpha = prm[0];
            return [alpha](double x) { return 2.0 * x * (1.0 + x) / (alpha - 1.0); };
        }
        case Family::laplace: {
            const double alpha = prm[0];
            return [alpha](double x) { return 2.0 * (1.0 + alpha * std::abs(x)) / (alpha * alpha); };
        }
        case Family::tabulated:
            break;
    }
    throw std::invalid_argument(
        "closed_form_coefficient: no closed form for this density; use build_coefficient_numeric");
}

void check_drift(const TargetDensity& density, const DriftSpec& drift) {
    if (!drift.b) throw std::invalid_argument("drift: missing evaluator");
    const double k = drift.sign_change;
    if (!(k > density.support().lower && k < density.support().upper))
        throw std::invalid_argument("drift: sign-change point must lie inside the support");
    const double ulo = density.cdf(density.lower_trunc());
    const double uhi = density.cdf(density.upper_trunc());
    const double delta = 1e-9 * (1.0 + std::abs(k));
    for (int i = 0; i < 512; ++i) {
        const double xv = density.quantile(ulo + (uhi - ulo) * (i + 0.5) / 512.0);
        const double bv = drift.b(xv);
        if (xv < k - delta && !(bv > 0.0))
            throw std::invalid_argument("drift: b must be positive below the sign-change point");
        if (xv > k + delta && !(bv < 0.0))
            throw std::invalid_argument("drift: b must be negative above the sign-change point");
    }
}

}  // namespace

DiffusionModel build_coefficient_numeric(const TargetDensity& density, DriftSpec drift) {
    check_drift(density, drift);
    auto impl =
        std::make_shared<detail::ModelImpl>(density, std::move(drift), CoefficientKind::numeric);
    impl->build_drift_tables();
    if (std::abs(impl->total_bp) > 1e-8)
        throw std::invalid_argument("drift: int b p = " + format_g17(impl->total_bp) +
                                    " is not centered (tolerance 1e-8)");
    DiffusionModel model = detail::ModelImpl::wrap(impl);
    for (std::size_t i = 0; i < impl->x.size(); i += 8) {
        if (!(model.a(impl->x[i]) > 0.0))
            throw std::invalid_argument("diffusion coefficient: a <= 0 at x = " +
                                        format_g17(impl->x[i]));
    }
    return model;
}

DiffusionModel build_coefficient_numeric(const TargetDensity& density) {
    return build_coefficient_numeric(density, linear_drift(density.mean()));
}

DiffusionModel closed_form_coefficient(const TargetDensity& density) {
    auto a = closed_form_a(density);  // throws before building tables if unsupported
    auto impl = std::make_shared<detail::ModelImpl>(density, linear_drift(density.mean()),
                                                    CoefficientKind::closed_form);
    impl->a_closed = std::move(a);
    return detail::ModelImpl::wrap(impl);
}

DiffusionModel closed_form_coefficient(Family family, std::span<const double> params) {
    return closed_form_coefficient(TargetDensity::make_family(family, params));
}

DiffusionModel closed_form_coefficient(Family family, std::initializer_list<double> params) {
    return closed_form_coefficient(TargetDensity::make_family(family, params));
}

std::string ModelValidation::summary() const {
    std::ostringstream os;
    os << "a_positive=" << (a_positive ? "yes" : "no") << " min_a=" << min_a
       << " inf_a=" << inf_a_estimate << " E[a(X)]=" << mean_a
       << " drift_sign=" << (drift_sign_ok ? "ok" : "FAIL") << " centering=" << drift_centering
       << " lower_end=" << lower_end_limit << (lower_end_ok ? "(ok)" : "(fail)")
       << " upper_end=" << upper_end_limit << (upper_end_ok ? "(ok)" : "(fail)")
       << " C2_route=" << (c2_route_available ? "yes" : "no")
       << " C4_route=" << (c4_route_available ? "yes" : "no");
    return os.str();
}

ModelValidation DiffusionModel::validate() const {
    const auto& impl = *impl_;
    ModelValidation v;
    const auto& xs = impl.x;
    const std::size_t n = xs.size();
    const std::size_t stride = n / 512;

    v.min_a = std::numeric_limits<double>::infinity();
    v.a_positive = true;
    for (std::size_t i = stride / 2; i < n; i += stride) {
        const double av = a(xs[i]);
        if (av < v.min_a) {
            v.min_a = av;
            v.argmin_a = xs[i];
        }
        if (!(av > 0.0)) v.a_positive = false;
    }

    double mean_a = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        mean_a +=
            integrate_panel([&](double y) { return a(y) * density().pdf(y); }, xs[i], xs[i + 1]);
    v.mean_a = mean_a;

    const double k = impl.drift.sign_change;
    const double delta = 1e-9 * (1.0 + std::abs(k));
    v.drift_sign_ok = true;
    for (std::size_t i = stride / 2; i < n; i += stride) {
        const double bv = b(xs[i]);
        if (xs[i] < k - delta && !(bv > 0.0)) v.drift_sign_ok = false;
        if (xs[i] > k + delta && !(bv < 0.0)) v.drift_sign_ok = false;
    }

    if (impl.kind == CoefficientKind::numeric) {
        v.drift_centering = std::abs(impl.total_bp);
    } else {
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            total += integrate_panel([&](double y) { return b(y) * density().pdf(y); }, xs[i],
                                     xs[i + 1]);
        if (impl.drift.linear) {
            total += impl.drift.center * impl.u.front() -
                     density().partial_first_moment(xs.front());
            total += impl.drift.center * (1.0 - impl.u.back()) -
                     (density().mean() - density().partial_first_moment(xs.back()));
        }
        v.drift_centering = std::abs(total);
    }
    v.drift_centering_ok = v.drift_centering <= 1e-8;

    v.b_nonincreasing_near_ends = true;
    const std::size_t tail = 32 * stride;
    for (std::size_t i = 1; i < tail; ++i) {
        if (b(xs[i]) > b(xs[i - 1]) + 1e-12 * (1.0 + std::abs(b(xs[i]))))
            v.b_nonincreasing_near_ends = false;
        const std::size_t j = n - 1 - i;
        if (b(xs[j]) > b(xs[j + 1]) + 1e-12 * (1.0 + std::abs(b(xs[j]))))
            v.b_nonincreasing_near_ends = false;
    }

    const auto& sup = density().support();
    auto probe = [&](bool upper) {
        double value = 0.0;
        bool ok = true;
        for (int j = 4; j <= 11; ++j) {
            const double q = std::pow(10.0, -j);
            const double xv = density().quantile(upper ? 1.0 - q : q);
            double metric;
            if (upper)
                metric = sup.upper_finite() ? a(xv) / (sup.upper - xv) : a(xv);
            else
                metric = sup.lower_finite() ? a(xv) / (xv - sup.lower) : a(xv);
            value = metric;
            if (j >= 8 && !(metric > 1e-9)) ok = false;
        }
        return std::pair<double, bool>(value, ok);
    };
    std::tie(v.lower_end_limit, v.lower_end_ok) = probe(false);
    std::tie(v.upper_end_limit, v.upper_end_ok) = probe(true);

    v.inf_a_estimate = std::min({v.min_a, a(xs.front()), a(xs.back())});
    const double a_med = a(impl.median_x);
    v.c2_route_available = v.inf_a_estimate > std::max(1e-10, 1e-6 * a_med);
    v.c4_route_available = v.lower_end_ok && v.upper_end_ok && v.b_nonincreasing_near_ends;
    return v;
}

void DiffusionModel::export_csv(const std::string& path) const {
    CsvWriter csv({"x", "a", "b", "p"});
    for (double xv : grid()) csv.add_row({xv, a(xv), b(xv), density().pdf(xv)});
    csv.write(path);
}

ReconstructedDensity::ReconstructedDensity(const DiffusionModel& model, double c, double p_c)
    : model_(model), c_(c), p_c_(p_c) {
    const auto& sup = model.density().support();
    if (!(c > sup.lower && c < sup.upper))
        throw std::invalid_argument("reconstruct_density: c must lie strictly inside the support");
    if (!(p_c > 0.0)) throw std::invalid_argument("reconstruct_density: p(c) must be positive");
    a_c_ = model.a(c);

    const auto& xs = model.grid();
    const std::size_t n = xs.size();
    exponent_.assign(n, 0.0);
    node_valid_.assign(n, 1);

    auto seg = [&](double lo, double hi, bool& ok) {
        if (lo >= hi) return 0.0;
        const auto r = integrate_full(
            [&](double y) { return 2.0 * model_.b(y) / model_.a(y); }, lo, hi, kLocalOpts);
        ok = ok && r.converged;
        return r.value;
    };

    const std::size_t kc = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(xs.begin(), xs.end(), c) - xs.begin(),
                                 static_cast<std::ptrdiff_t>(n - 1)));
    bool ok = true;
    double acc = 0.0;
    for (std::size_t i = kc; i < n; ++i) {
        acc += seg(i == kc ? c : xs[i - 1], xs[i], ok);
        exponent_[i] = acc;
        node_valid_[i] = ok ? 1 : 0;
    }
    ok = true;
    acc = 0.0;
    for (std::size_t i = kc; i-- > 0;) {
        acc -= seg(xs[i], i + 1 == kc ? c : xs[i + 1], ok);
        exponent_[i] = acc;
        node_valid_[i] = ok ? 1 : 0;
    }

    valid_lower_ = xs.front();
    valid_upper_ = xs.back();
    for (std::size_t i = 0; i < n; ++i)
        if (node_valid_[i]) {
            valid_lower_ = xs[i];
            break;
        }
    for (std::size_t i = n; i-- > 0;)
        if (node_valid_[i]) {
            valid_upper_ = xs[i];
            break;
        }
    range_limited_ = valid_lower_ > xs.front() || valid_upper_ < xs.back();
}

double ReconstructedDensity::operator()(double x) const {
    if (std::isnan(x)) throw std::domain_error("reconstructed density: NaN argument");
    if (x < valid_lower_ || x > valid_upper_)
        throw std::domain_error("reconstructed density: x outside the reconstructed range [" +
                                format_g17(valid_lower_) + ", " + format_g17(valid_upper_) + "]");
    if (x == c_) return p_c_;
    const auto& xs = model_.grid();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k =
        std::min(static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin(), 1) - 1),
                 xs.size() - 2);
    const std::size_t anchor = (x - xs[k] <= xs[k + 1] - x) ? k : k + 1;
    auto integrand = [&](double y) { return 2.0 * model_.b(y) / model_.a(y); };
    const double local = x >= xs[anchor] ? integrate(integrand, xs[anchor], x, kLocalOpts)
                                         : -integrate(integrand, x, xs[anchor], kLocalOpts);
    return p_c_ * a_c_ / model_.a(x) * std::exp(exponent_[anchor] + local);
}

ReconstructedDensity reconstruct_density(const DiffusionModel& model, double c, double p_c) {
    return ReconstructedDensity(model, c, p_c);
}

}  // namespace steindiff
