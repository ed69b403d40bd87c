#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace steindiff {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_depth = 64;
    bool throw_on_failure = true;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK dqk15).
inline constexpr double kGk15Nodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kGk15WeightsK[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double kGk15WeightsG[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

template <class F>
struct Gk15Panel {
    double value;
    double error;
};

template <class F>
Gk15Panel<F> gk15(F&& f, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);

    const double fc = f(center);
    double result_gauss = kGk15WeightsG[3] * fc;
    double result_kronrod = kGk15WeightsK[7] * fc;
    double resabs = std::abs(result_kronrod);

    double fv[15];
    fv[7] = fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kGk15Nodes[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        const double sum = f1 + f2;
        result_kronrod += kGk15WeightsK[j] * sum;
        resabs += kGk15WeightsK[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) result_gauss += kGk15WeightsG[j / 2] * sum;
    }

    const double mean = 0.5 * result_kronrod;
    double resasc = kGk15WeightsK[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) {
        resasc += kGk15WeightsK[j] *
                  (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
    }

    result_kronrod *= half;
    result_gauss *= half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);

    double err = std::abs(result_kronrod - result_gauss);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(err, 50.0 * eps * resabs);
    return {result_kronrod, err};
}

template <class F>
void adapt(F& f, double lo, double hi, const QuadratureOptions& opt, int depth,
           QuadratureResult& acc) {
    const auto panel = gk15(f, lo, hi);
    acc.evaluations += 15;
    const double local_tol =
        std::max(opt.abs_tol, opt.rel_tol * std::abs(panel.value));
    if (panel.error <= local_tol || depth >= opt.max_depth ||
        hi - lo < std::numeric_limits<double>::epsilon() * (std::abs(lo) + std::abs(hi))) {
        acc.value += panel.value;
        acc.error += panel.error;
        if (panel.error > local_tol) acc.converged = false;
        return;
    }
    const double mid = 0.5 * (lo + hi);
    adapt(f, lo, mid, opt, depth + 1, acc);
    adapt(f, mid, hi, opt, depth + 1, acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7,K15) integration of f over the finite
/// interval [lo, hi].
template <class F>
QuadratureResult integrate_full(F&& f, double lo, double hi,
                                const QuadratureOptions& opt = {}) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw QuadratureError("integrate: invalid finite interval");
    QuadratureResult acc;
    if (lo == hi) return acc;
    detail::adapt(f, lo, hi, opt, 0, acc);
    if (!acc.converged && opt.throw_on_failure)
        throw QuadratureError("integrate: failed to reach tolerance");
    return acc;
}

template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureOptions& opt = {}) {
    return integrate_full(std::forward<F>(f), lo, hi, opt).value;
}

/// Single non-adaptive K15 panel; used for short refinement segments whose
/// integrand is already resolved.
template <class F>
double integrate_panel(F&& f, double lo, double hi) {
    if (lo == hi) return 0.0;
    const double sign = lo < hi ? 1.0 : -1.0;
    if (sign < 0) std::swap(lo, hi);
    return sign * detail::gk15(f, lo, hi).value;
}

}  // namespace steindiff
