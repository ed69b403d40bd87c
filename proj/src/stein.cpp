#include "steindiff/stein.hpp"

#include "steindiff/io.hpp"
#include "steindiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace steindiff {

namespace {
const QuadratureOptions kLocalOpts{1e-14, 1e-10, 40, false};
constexpr double kCbrtEps = 6.0554544523933429e-6;  // cbrt(machine epsilon)

double bump_profile(double t) {
    const double s = 1.0 - t * t;
    return s > 0.0 ? std::exp(1.0 - 1.0 / s) : 0.0;
}

double bump_max_slope() {
    // max |d/dt exp(1 - 1/(1-t^2))|, scanned once.
    static const double value = [] {
        double best = 0.0;
        for (int i = 1; i < 4000; ++i) {
            const double t = i / 4000.0;
            const double s = 1.0 - t * t;
            best = std::max(best, bump_profile(t) * 2.0 * t / (s * s));
        }
        return best;
    }();
    return value;
}

double quintic_step(double s) {  // 0 -> 0, 1 -> 1, C^2
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}
}  // namespace

TestFunction constant_function(double value) {
    TestFunction tf;
    tf.f = [value](double) { return value; };
    tf.cls = TestFunctionClass::c0;
    tf.sup_norm = std::abs(value);
    tf.lip_norm = 0.0;
    tf.name = "const(" + format_g17(value) + ")";
    return tf;
}

TestFunction identity_function(const DiffusionModel& model) {
    const double lo = model.grid().front();
    const double hi = model.grid().back();
    TestFunction tf;
    tf.f = [lo, hi](double x) { return std::clamp(x, lo, hi); };
    tf.cls = TestFunctionClass::c0_1;
    tf.sup_norm = std::max(std::abs(lo), std::abs(hi));
    tf.lip_norm = 1.0;
    tf.name = "identity";
    return tf;
}

TestFunction bump_function(double center, double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("bump_function: width must be positive");
    TestFunction tf;
    tf.f = [center, half_width](double x) { return bump_profile((x - center) / half_width); };
    tf.cls = TestFunctionClass::c0_1;
    tf.sup_norm = 1.0;
    tf.lip_norm = bump_max_slope() / half_width;
    tf.scale_hint = half_width;
    tf.name = "bump(" + format_g17(center) + ")";
    return tf;
}

TestFunction smoothed_indicator(double z, double width) {
    if (!(width > 0.0))
        throw std::invalid_argument("smoothed_indicator: width must be positive");
    TestFunction tf;
    tf.f = [z, width](double x) { return 1.0 - quintic_step((x - z) / width + 0.5); };
    tf.cls = TestFunctionClass::indicator_smoothed;
    tf.sup_norm = 1.0;
    tf.lip_norm = 1.875 / width;  // quintic max slope 15/8
    tf.scale_hint = width;
    tf.name = "indicator(" + format_g17(z) + ")";
    return tf;
}

double mean_of(const TestFunction& f, const TargetDensity& density) {
    QuadratureOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-10;
    const double m = integrate([&](double y) { return f.f(y) * density.pdf(y); },
                               density.lower_trunc(), density.upper_trunc(), opt);
    return m;
}

struct SteinSolution::Impl {
    DiffusionModel model;
    std::function<double(double)> f;
    double m_f = 0.0;
    // combination[i] = int (f - m_f) p over the lower tail up to x_i;
    // tail[i] the mirrored upper-tail integral. combination + tail ~ 0.
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> g;
    std::vector<double> g_prime;
    double norm_g = 0.0, norm_ag = 0.0, norm_gp = 0.0;

    Impl(const TestFunction& tf, const DiffusionModel& m) : model(m), f(tf.f) {
        const auto cum_f = model.cumulative_against_density(f);
        const auto& mass = model.mass_cumulative();
        m_f = cum_f.total / mass.total;

        const std::size_t n = model.grid().size();
        lower.resize(n);
        upper.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            lower[i] = cum_f.prefix[i] - m_f * mass.prefix[i];
            upper[i] = cum_f.suffix[i] - m_f * mass.suffix[i];
        }

        const auto& xs = model.grid();
        const std::size_t mid = model.median_index();
        g.resize(n);
        g_prime.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ap = model.ap(xs[i]);
            if (!(std::abs(ap) > 0.0))
                throw std::runtime_error("stein solve: a p vanishes at interior grid point x = " +
                                         format_g17(xs[i]));
            g[i] = (i <= mid ? 2.0 * lower[i] : -2.0 * upper[i]) / ap;
            const double av = model.a(xs[i]);
            g_prime[i] = 2.0 * (f(xs[i]) - m_f - model.b(xs[i]) * g[i]) / av;
            norm_g = std::max(norm_g, std::abs(g[i]));
            norm_ag = std::max(norm_ag, std::abs(av * g_prime[i]));
            norm_gp = std::max(norm_gp, std::abs(g_prime[i]));
        }
    }

    double local_weighted(double lo, double hi) const {
        if (lo >= hi) return 0.0;
        return integrate([&](double y) { return (f(y) - m_f) * model.density().pdf(y); }, lo, hi,
                         kLocalOpts);
    }

    std::size_t panel_of(double x) const {
        const auto& xs = model.grid();
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        return std::min(std::max<std::size_t>(i, 1) - 1, xs.size() - 2);
    }

    double lower_integral(double x) const {
        const std::size_t k = panel_of(x);
        return lower[k] + local_weighted(model.grid()[k], x);
    }
    double upper_integral(double x) const {
        const std::size_t k = panel_of(x);
        return upper[k + 1] + local_weighted(x, model.grid()[k + 1]);
    }

    double eval_lower(double x) const { return 2.0 * lower_integral(x) / model.ap(x); }
    double eval_upper(double x) const { return -2.0 * upper_integral(x) / model.ap(x); }
    double eval(double x) const { return x <= model.median() ? eval_lower(x) : eval_upper(x); }
};

const std::vector<double>& SteinSolution::grid() const { return impl_->model.grid(); }
const std::vector<double>& SteinSolution::g() const { return impl_->g; }
const std::vector<double>& SteinSolution::g_prime() const { return impl_->g_prime; }
double SteinSolution::m_f() const { return impl_->m_f; }
double SteinSolution::norm_g() const { return impl_->norm_g; }
double SteinSolution::norm_ag_prime() const { return impl_->norm_ag; }
double SteinSolution::norm_g_prime() const { return impl_->norm_gp; }
double SteinSolution::eval_g(double x) const { return impl_->eval(x); }
double SteinSolution::eval_g_lower(double x) const { return impl_->eval_lower(x); }
double SteinSolution::eval_g_upper(double x) const { return impl_->eval_upper(x); }

void SteinSolution::export_csv(const std::string& path, const DiffusionModel& model,
                               const TestFunction& f) const {
    CsvWriter csv({"x", "g", "g_prime", "residual"});
    const auto& xs = grid();
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double x = xs[i];
        const double res =
            f.f(x) - m_f() - 0.5 * model.a(x) * impl_->g_prime[i] - model.b(x) * impl_->g[i];
        csv.add_row({x, impl_->g[i], impl_->g_prime[i], res});
    }
    csv.write(path);
}

SteinSolution solve_stein(const TestFunction& f, const DiffusionModel& model) {
    SteinSolution sol;
    sol.impl_ = std::make_shared<SteinSolution::Impl>(f, model);
    return sol;
}

double derivative_via_identity(const SteinSolution& sol, const DiffusionModel& model,
                               const TestFunction& f, double x) {
    const auto& xs = model.grid();
    if (!(x > xs.front() && x < xs.back()))
        throw std::domain_error("derivative_via_identity: x must lie strictly inside the "
                                "working range");
    const double a = model.a(x);
    if (!(a > 0.0))
        throw std::domain_error("derivative_via_identity: a(x) vanishes at x = " + format_g17(x));
    return 2.0 * (f.f(x) - sol.m_f() - model.b(x) * sol.eval_g(x)) / a;
}

double stein_residual(const SteinSolution& sol, const DiffusionModel& model,
                      const TestFunction& f) {
    const auto& xs = model.grid();
    const double m_f = sol.m_f();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double x = xs[i];
        double h = kCbrtEps * (1.0 + std::abs(x));
        h = std::min(h, 2e-4 * f.scale_hint);
        h = std::min(h, 0.45 * std::min(x - xs[i - 1], xs[i + 1] - x));
        const double gp = (sol.eval_g(x + h) - sol.eval_g(x - h)) / (2.0 * h);
        const double res =
            std::abs(f.f(x) - m_f - 0.5 * model.a(x) * gp - model.b(x) * sol.eval_g(x));
        worst = std::max(worst, res);
    }
    return worst;
}

std::vector<TestFunction> test_function_library(const DiffusionModel& model) {
    const auto& density = model.density();
    std::vector<TestFunction> lib;
    lib.reserve(32);
    const double ulo = model.grid_cdf().front();
    const double uhi = model.grid_cdf().back();
    auto level = [&](double t) { return ulo + (uhi - ulo) * t; };
    for (int i = 0; i < 16; ++i) {
        const double uc = (i + 0.5) / 16.0;
        const double c = density.quantile(level(uc));
        const double left = density.quantile(level(i / 16.0));
        const double right = density.quantile(level((i + 1) / 16.0));
        lib.push_back(bump_function(c, std::min(c - left, right - c)));
    }
    const double qrange = density.quantile(0.999) - density.quantile(0.001);
    const double width = 1e-3 * qrange;
    for (int i = 0; i < 16; ++i) {
        const double z = density.quantile(level((i + 0.5) / 16.0));
        lib.push_back(smoothed_indicator(z, width));
    }
    return lib;
}

NormConstants estimate_norm_constants(const DiffusionModel& model, TestFunctionClass cls) {
    const ModelValidation v = model.validate();
    if (cls == TestFunctionClass::c0 || cls == TestFunctionClass::indicator_smoothed) {
        if (!v.b_nonincreasing_near_ends)
            throw std::runtime_error(
                "estimate_norm_constants: drift is not non-increasing near the support ends");
        if (!v.c2_route_available)
            throw std::runtime_error(
                "estimate_norm_constants: inf a = " + format_g17(v.inf_a_estimate) +
                " vanishes, so the sup-norm (Kolmogorov) route is unavailable; use the "
                "Lipschitz-class route instead");
    } else {
        if (!v.c4_route_available)
            throw std::runtime_error(
                "estimate_norm_constants: endpoint growth condition fails (lower " +
                format_g17(v.lower_end_limit) + ", upper " + format_g17(v.upper_end_limit) +
                "), so the derivative-norm route is unavailable");
    }

    NormConstants out;
    out.inf_a = v.inf_a_estimate;
    out.c2_route = v.c2_route_available;
    out.c4_route = v.c4_route_available;
    for (const auto& tf : test_function_library(model)) {
        const SteinSolution sol = solve_stein(tf, model);
        const double r1 = sol.norm_g() / tf.sup_norm;
        const double r2 = sol.norm_ag_prime() / tf.sup_norm;
        if (r1 > out.c1_hat) {
            out.c1_hat = r1;
            out.c1_argmax = tf.name;
        }
        if (r2 > out.c2_hat) {
            out.c2_hat = r2;
            out.c2_argmax = tf.name;
        }
        if (tf.lip_norm) {
            const double r4 = sol.norm_g_prime() / (tf.sup_norm + *tf.lip_norm);
            if (r4 > out.c4_hat) {
                out.c4_hat = r4;
                out.c4_argmax = tf.name;
            }
        }
    }
    return out;
}

}  // namespace steindiff
