#include "density_backend.hpp"
#include "steindiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace steindiff::detail {
namespace {

// Fritsch-Carlson slopes: shape-preserving, so the interpolant of
// nonnegative data stays nonnegative.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), delta(n - 1), d(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0)
            s = 0.0;
        else if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0))
            s = 3.0 * d0;
        return s;
    };
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

class TabulatedBackend final : public DensityBackend {
public:
    TabulatedBackend(std::vector<double> grid, std::vector<double> values)
        : x_(std::move(grid)), y_(std::move(values)) {
        validate();
        slopes_ = pchip_slopes(x_, y_);

        const std::size_t n = x_.size();
        cum_mass_.assign(n, 0.0);
        cum_moment_.assign(n, 0.0);
        QuadratureOptions opt;
        opt.abs_tol = 1e-14;
        opt.rel_tol = 1e-12;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            cum_mass_[i + 1] =
                cum_mass_[i] + integrate([&](double t) { return raw_pdf(t); }, x_[i], x_[i + 1], opt);
            cum_moment_[i + 1] =
                cum_moment_[i] +
                integrate([&](double t) { return t * raw_pdf(t); }, x_[i], x_[i + 1], opt);
        }
        const double total = cum_mass_.back();
        if (!(total > 0.0) || !std::isfinite(total))
            throw std::invalid_argument("make_tabulated: values do not integrate to a positive mass");
        norm_ = 1.0 / total;
        mean_ = cum_moment_.back() * norm_;
        variance_ = norm_ * integrate(
                                [&](double t) {
                                    const double c = t - mean_;
                                    return c * c * raw_pdf(t);
                                },
                                x_.front(), x_.back(), opt);
        if (!(variance_ > 0.0) || !std::isfinite(variance_))
            throw std::invalid_argument("make_tabulated: variance must be finite and positive");

        family_ = Family::tabulated;
        params_ = {};
        support_ = {x_.front(), x_.back()};
        lower_trunc_ = x_.front();
        upper_trunc_ = x_.back();
    }

    double pdf(double x) const override {
        check_finite_arg(x);
        if (x <= x_.front() || x >= x_.back()) return 0.0;
        return norm_ * raw_pdf(x);
    }
    double log_pdf(double x) const override {
        const double p = pdf(x);
        return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    double cdf(double x) const override {
        check_finite_arg(x);
        if (x <= x_.front()) return 0.0;
        if (x >= x_.back()) return 1.0;
        const std::size_t i = panel_of(x);
        const double extra = integrate_panel([&](double t) { return raw_pdf(t); }, x_[i], x);
        return std::min(1.0, norm_ * (cum_mass_[i] + extra));
    }
    double quantile(double u) const override {
        if (u <= 0.0) return x_.front();
        if (u >= 1.0) return x_.back();
        double lo = x_.front(), hi = x_.back();
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    double mean() const override { return mean_; }
    double variance() const override { return variance_; }
    double partial_first_moment(double x) const override {
        check_finite_arg(x);
        if (x <= x_.front()) return 0.0;
        if (x >= x_.back()) return mean_;
        const std::size_t i = panel_of(x);
        const double extra = integrate_panel([&](double t) { return t * raw_pdf(t); }, x_[i], x);
        return norm_ * (cum_moment_[i] + extra);
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "tabulated(" << x_.size() << " points on [" << x_.front() << ", " << x_.back() << "])";
        return os.str();
    }

private:
    void validate() const {
        if (x_.size() != y_.size())
            throw std::invalid_argument("make_tabulated: grid/value size mismatch");
        if (x_.size() < 8)
            throw std::invalid_argument("make_tabulated: need at least 8 grid points");
        bool any_positive = false;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (!std::isfinite(x_[i]) || !std::isfinite(y_[i]))
                throw std::invalid_argument("make_tabulated: non-finite entry");
            if (i > 0 && !(x_[i] > x_[i - 1]))
                throw std::invalid_argument("make_tabulated: grid must be strictly ascending");
            if (y_[i] < 0.0)
                throw std::invalid_argument("make_tabulated: negative density value");
            if (y_[i] > 0.0) any_positive = true;
        }
        if (!any_positive) throw std::invalid_argument("make_tabulated: all values are zero");
        for (std::size_t i = 1; i + 1 < x_.size(); ++i)
            if (!(y_[i] > 0.0))
                throw std::invalid_argument("make_tabulated: density must be positive on the interior");
    }

    std::size_t panel_of(double x) const {
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin());
        return std::min(std::max<std::size_t>(i, 1) - 1, x_.size() - 2);
    }

    // Unnormalized cubic Hermite value.
    double raw_pdf(double x) const {
        const std::size_t i = panel_of(x);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        const double v =
            h00 * y_[i] + h10 * h * slopes_[i] + h01 * y_[i + 1] + h11 * h * slopes_[i + 1];
        return std::max(v, 0.0);
    }

    std::vector<double> x_, y_, slopes_;
    std::vector<double> cum_mass_, cum_moment_;
    double norm_ = 1.0, mean_ = 0.0, variance_ = 1.0;
};

}  // namespace

std::shared_ptr<const DensityBackend> make_tabulated_backend(std::vector<double> grid,
                                                             std::vector<double> values) {
    return std::make_shared<TabulatedBackend>(std::move(grid), std::move(values));
}

}  // namespace steindiff::detail

namespace steindiff {

TargetDensity TargetDensity::load_tabulated_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open density CSV: " + path);
    std::vector<double> xs, ps;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',' || c == ';' || c == '\t') c = ' ';
        std::istringstream ls(line);
        double x, p;
        if (!(ls >> x >> p)) {
            if (lineno == 1) continue;  // header row
            throw std::runtime_error("density CSV: cannot parse line " + std::to_string(lineno) +
                                     " of " + path);
        }
        xs.push_back(x);
        ps.push_back(p);
    }
    return make_tabulated(std::move(xs), std::move(ps));
}

}  // namespace steindiff
