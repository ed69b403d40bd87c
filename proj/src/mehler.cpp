#include "steindiff/mehler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace steindiff {

AuxMoments aux_gaussian_integrals(double k_coef, double c, double a) {
    const double d = 1.0 + 2.0 * k_coef * (1.0 - a * a);
    if (!(d > 0.0))
        throw std::domain_error("aux_gaussian_integrals: 1 + 2K(1-a^2) = " + std::to_string(d) +
                                " must be positive");
    const double core = std::exp(-c * c * k_coef / d);
    const double inv_sqrt = 1.0 / std::sqrt(d);
    return {inv_sqrt * core, c * inv_sqrt * inv_sqrt * inv_sqrt * core};
}

const GaussLegendreRule& gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration on P_n over [-1,1] from the Chebyshev guess.
        double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        // map [-1,1] -> (0,1)
        rule.nodes[i] = 0.5 * (1.0 - z);
        rule.nodes[order - 1 - i] = 0.5 * (1.0 + z);
        const double w = 1.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

bool closed_form_available(const GaussianFunctional& f) {
    if (std::holds_alternative<QuadraticForm>(f.closed_form())) return true;
    if (std::holds_alternative<ExpLinearForm>(f.closed_form())) return true;
    if (std::holds_alternative<GaussExpForm>(f.closed_form())) return f.identity_covariance();
    return false;
}

namespace {

// E'[grad h_G(aN + sqrt(1-a^2) N')] for the closed forms, written into `out`.
void closed_inner_expectation(const GaussianFunctional& g, std::span<const double> n_real,
                              double a, std::span<double> out) {
    const int dim = g.dim();
    if (const auto* q = std::get_if<QuadraticForm>(&g.closed_form())) {
        // gradient is linear; independent copy averages to zero
        Eigen::Map<const Eigen::VectorXd> nv(n_real.data(), dim);
        Eigen::Map<Eigen::VectorXd> ov(out.data(), dim);
        ov = a * ((q->Q + q->Q.transpose()) * nv) + q->d;
        return;
    }
    if (const auto* el = std::get_if<ExpLinearForm>(&g.closed_form())) {
        Eigen::Map<const Eigen::VectorXd> nv(n_real.data(), dim);
        const double wn = el->w.dot(nv);
        const double wkw = el->w.dot(g.covariance() * el->w);
        const double core =
            el->scale * std::exp(a * wn + 0.5 * (1.0 - a * a) * wkw + el->kappa);
        for (int j = 0; j < dim; ++j) out[j] = el->w[j] * core;
        return;
    }
    const auto& ge = std::get<GaussExpForm>(g.closed_form());
    // product of per-coordinate moments (identity covariance)
    double prod = 1.0;
    for (int i = 0; i < dim; ++i) {
        const auto mom = aux_gaussian_integrals(-ge.lambda[i], a * n_real[i], a);
        out[i] = mom.moment1 / mom.moment0;  // filled with ratios first
        prod *= mom.moment0;
    }
    const double common = ge.scale * std::exp(ge.kappa) * prod;
    for (int i = 0; i < dim; ++i) out[i] *= 2.0 * ge.lambda[i] * common;
}

bool equal_lambda(const GaussExpForm& ge) {
    for (Eigen::Index i = 1; i < ge.lambda.size(); ++i)
        if (ge.lambda[i] != ge.lambda[0]) return false;
    return true;
}

}  // namespace

ScalarProductEstimate mehler_scalar_product(const GaussianFunctional& target,
                                            const GaussianFunctional& source,
                                            std::span<const double> realization,
                                            const MehlerConfig& config) {
    if (target.dim() != source.dim())
        throw std::invalid_argument("mehler_scalar_product: target/source dimension mismatch");
    if (static_cast<int>(realization.size()) != target.dim())
        throw std::invalid_argument("mehler_scalar_product: realization dimension mismatch");
    if (config.quad_nodes < 16)
        throw std::invalid_argument("mehler_scalar_product: quad_nodes must be >= 16");

    const bool same = &target == &source;
    const bool closed_ok = closed_form_available(source);
    InnerRoute route = config.route.value_or(closed_ok ? InnerRoute::closed_form
                                                       : InnerRoute::monte_carlo);
    if (route == InnerRoute::closed_form && !closed_ok)
        throw std::invalid_argument(
            "mehler_scalar_product: no closed-form inner expectation for " + source.label());

    const int dim = target.dim();
    const auto& rule = gauss_legendre(config.quad_nodes);

    std::vector<double> grad_target(dim);
    target.gradient(realization, grad_target);
    // weights K grad once per realization
    std::vector<double> k_grad(dim);
    if (target.identity_covariance()) {
        std::copy(grad_target.begin(), grad_target.end(), k_grad.begin());
    } else {
        Eigen::Map<const Eigen::VectorXd> gv(grad_target.data(), dim);
        Eigen::Map<Eigen::VectorXd>(k_grad.data(), dim) = target.covariance() * gv;
    }

    double acc = 0.0;

    if (route == InnerRoute::closed_form) {
        const auto* ge = std::get_if<GaussExpForm>(&source.closed_form());
        if (same && ge && equal_lambda(*ge) && target.identity_covariance()) {
            // All lambdas equal and K = I: the whole sum collapses to a
            // function of S = |N|^2.
            const double lambda = ge->lambda[0];
            const double s = std::inner_product(realization.begin(), realization.end(),
                                                realization.begin(), 0.0);
            const double hcore = ge->scale * std::exp(lambda * s + ge->kappa);
            for (int k = 0; k < config.quad_nodes; ++k) {
                const double a = rule.nodes[k];
                const double d = 1.0 - 2.0 * lambda * (1.0 - a * a);
                if (!(d > 0.0))
                    throw std::domain_error("mehler_scalar_product: closed form undefined at "
                                            "quadrature node (1+2K(1-a^2) <= 0)");
                const double prod = std::pow(d, -0.5 * dim) * std::exp(lambda * a * a * s / d);
                const double node_value = hcore * ge->scale * std::exp(ge->kappa) * prod *
                                          4.0 * lambda * lambda * s * a / d;
                acc += rule.weights[k] * node_value;
            }
            return {acc, InnerRoute::closed_form};
        }
        std::vector<double> inner(dim);
        for (int k = 0; k < config.quad_nodes; ++k) {
            closed_inner_expectation(source, realization, rule.nodes[k], inner);
            acc += rule.weights[k] *
                   std::inner_product(k_grad.begin(), k_grad.end(), inner.begin(), 0.0);
        }
        return {acc, InnerRoute::closed_form};
    }

    // Monte Carlo inner expectation: one shared batch of independent copies,
    // rescaled per quadrature node, keeps the integrand smooth in a.
    const int m = std::max(1, config.inner_samples);
    Rng rng(config.seed);
    std::vector<double> copies(static_cast<std::size_t>(m) * dim);
    for (int j = 0; j < m; ++j)
        source.sample(rng, std::span<double>(copies.data() + static_cast<std::size_t>(j) * dim,
                                             dim));
    std::vector<double> point(dim), grad_src(dim), inner(dim);
    for (int k = 0; k < config.quad_nodes; ++k) {
        const double a = rule.nodes[k];
        const double beta = std::sqrt(std::max(0.0, 1.0 - a * a));
        std::fill(inner.begin(), inner.end(), 0.0);
        for (int j = 0; j < m; ++j) {
            const double* cj = copies.data() + static_cast<std::size_t>(j) * dim;
            for (int i = 0; i < dim; ++i) point[i] = a * realization[i] + beta * cj[i];
            source.gradient(point, grad_src);
            for (int i = 0; i < dim; ++i) inner[i] += grad_src[i];
        }
        for (int i = 0; i < dim; ++i) inner[i] /= m;
        acc += rule.weights[k] *
               std::inner_product(k_grad.begin(), k_grad.end(), inner.begin(), 0.0);
    }
    return {acc, InnerRoute::monte_carlo};
}

ScalarProductEstimate mehler_scalar_product(const GaussianFunctional& f,
                                            std::span<const double> realization,
                                            const MehlerConfig& config) {
    return mehler_scalar_product(f, f, realization, config);
}

double BinnedRegression::operator()(double y) const {
    if (bins_.empty()) throw std::logic_error("BinnedRegression: no bins");
    // first bin whose upper edge is >= y
    std::size_t lo = 0, hi = bins_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (bins_[mid].y_hi < y)
            lo = mid + 1;
        else
            hi = mid;
    }
    return bins_[lo].v_mean;
}

BinnedRegression conditional_projection(std::span<const double> ys, std::span<const double> vs,
                                        int bins) {
    if (ys.size() != vs.size())
        throw std::invalid_argument("conditional_projection: size mismatch");
    if (ys.size() < 10000)
        throw std::invalid_argument("conditional_projection: need at least 10^4 pairs");
    if (bins < 1) throw std::invalid_argument("conditional_projection: bins must be >= 1");

    const std::size_t n = ys.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });

    BinnedRegression reg;
    const std::size_t per = n / bins;
    std::size_t start = 0;
    for (int b = 0; b < bins && start < n; ++b) {
        std::size_t stop = (b + 1 == bins) ? n : std::min(n, start + per);
        // merge undersized trailing bins forward
        if (stop - start < 50) {
            stop = std::min(n, start + 50);
            reg.merged_ = true;
        }
        double sy = 0.0, sv = 0.0, svv = 0.0;
        for (std::size_t i = start; i < stop; ++i) {
            sy += ys[order[i]];
            sv += vs[order[i]];
        }
        const auto count = static_cast<double>(stop - start);
        const double vm = sv / count;
        for (std::size_t i = start; i < stop; ++i) {
            const double dvi = vs[order[i]] - vm;
            svv += dvi * dvi;
        }
        BinnedRegression::Bin bin;
        bin.y_lo = ys[order[start]];
        bin.y_hi = ys[order[stop - 1]];
        bin.y_mean = sy / count;
        bin.v_mean = vm;
        bin.v_se = count > 1 ? std::sqrt(svv / (count * (count - 1))) : 0.0;
        bin.count = static_cast<std::int64_t>(stop - start);
        reg.bins_.push_back(bin);
        start = stop;
    }
    return reg;
}

}  // namespace steindiff
