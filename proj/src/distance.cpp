#include "steindiff/distance.hpp"

#include "steindiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace steindiff {

namespace {

// Union of both quantile grids over the truncated ranges, sorted.
std::vector<double> merged_grid(const TargetDensity& a, const TargetDensity& b) {
    std::vector<double> xs;
    xs.reserve(2 * 4097);
    for (const TargetDensity* d : {&a, &b}) {
        const double ulo = d->cdf(d->lower_trunc());
        const double uhi = d->cdf(d->upper_trunc());
        for (int i = 0; i <= 4096; ++i)
            xs.push_back(d->quantile(ulo + (uhi - ulo) * i / 4096.0));
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

// int_alpha^beta F dx via integration by parts with the partial first moment.
double cdf_area(const TargetDensity& d, double alpha, double beta) {
    return beta * d.cdf(beta) - alpha * d.cdf(alpha) -
           (d.partial_first_moment(beta) - d.partial_first_moment(alpha));
}

// int over the upper tail of (1 - F).
double upper_tail_mean(const TargetDensity& d, double x) {
    return d.mean() - d.partial_first_moment(x) - x * (1.0 - d.cdf(x));
}

// int over the lower tail of F.
double lower_tail_mean(const TargetDensity& d, double x) {
    return x * d.cdf(x) - d.partial_first_moment(x);
}

}  // namespace

DistanceReport reference_distances(const TargetDensity& a, const TargetDensity& b) {
    const auto xs = merged_grid(a, b);
    DistanceReport out;

    for (double x : xs)
        out.kolmogorov = std::max(out.kolmogorov, std::abs(a.cdf(x) - b.cdf(x)));

    QuadratureOptions opt{1e-12, 1e-9, 30, false};
    double w1 = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        w1 += integrate([&](double x) { return std::abs(a.cdf(x) - b.cdf(x)); }, xs[i], xs[i + 1],
                        opt);
    // Tail contributions assuming no CDF crossing beyond the working range.
    w1 += std::abs(lower_tail_mean(a, xs.front()) - lower_tail_mean(b, xs.front()));
    w1 += std::abs(upper_tail_mean(a, xs.back()) - upper_tail_mean(b, xs.back()));
    out.wasserstein1 = w1;

    double tv = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        tv += integrate([&](double x) { return std::abs(a.pdf(x) - b.pdf(x)); }, xs[i], xs[i + 1],
                        opt);
    tv += (1.0 - a.cdf(xs.back())) + (1.0 - b.cdf(xs.back()));
    tv += a.cdf(xs.front()) + b.cdf(xs.front());
    out.total_variation = 0.5 * tv;
    return out;
}

double ks_statistic_sorted(std::span<const double> sorted, const TargetDensity& target) {
    const std::size_t n = sorted.size();
    if (n == 0) throw std::invalid_argument("ks_statistic: empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = target.cdf(sorted[i]);
        d = std::max(d, f - static_cast<double>(i) / n);
        d = std::max(d, static_cast<double>(i + 1) / n - f);
    }
    return d;
}

double ks_statistic(std::span<const double> sample, const TargetDensity& target) {
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    return ks_statistic_sorted(sorted, target);
}

DistanceReport reference_distances(std::span<const double> sample, const TargetDensity& target) {
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n == 0) throw std::invalid_argument("reference_distances: empty sample");

    DistanceReport out;
    out.kolmogorov = ks_statistic_sorted(xs, target);

    // Exact int |ECDF - F|: between consecutive order statistics the ECDF is
    // the constant c = (i+1)/n, and |c - F| integrates in closed form after
    // splitting at the crossing x* = Q(c).
    double w1 = lower_tail_mean(target, xs.front());
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double c = static_cast<double>(i + 1) / n;
        const double lo = xs[i], hi = xs[i + 1];
        if (lo >= hi) continue;
        auto piece = [&](double alpha, double beta) {
            // int |c - F| assuming no crossing inside (alpha, beta)
            return std::abs(c * (beta - alpha) - cdf_area(target, alpha, beta));
        };
        const double flo = target.cdf(lo), fhi = target.cdf(hi);
        if ((flo - c) * (fhi - c) >= 0.0) {
            w1 += piece(lo, hi);
        } else {
            const double mid = std::clamp(target.quantile(c), lo, hi);
            w1 += piece(lo, mid) + piece(mid, hi);
        }
    }
    w1 += upper_tail_mean(target, xs.back());
    out.wasserstein1 = w1;
    return out;
}

}  // namespace steindiff
