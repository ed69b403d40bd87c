#pragma once

#include "steindiff/gaussian_functional.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace steindiff {

struct AuxMoments {
    double moment0;  // E exp(-K(C + sqrt(1-a^2) Z)^2)
    double moment1;  // E (C + sqrt(1-a^2) Z) exp(-K(...)^2)
};

/// The two Gaussian integrals behind every closed-form inner expectation.
/// Requires 1 + 2K(1-a^2) > 0.
AuxMoments aux_gaussian_integrals(double k_coef, double c, double a);

struct GaussLegendreRule {
    std::vector<double> nodes;    // on (0,1)
    std::vector<double> weights;
};

/// Fixed-node Gauss-Legendre rule on (0,1); cached per order.
const GaussLegendreRule& gauss_legendre(int order);

enum class InnerRoute { closed_form, monte_carlo };

struct MehlerConfig {
    int quad_nodes = 64;
    int inner_samples = 1024;         // monte_carlo route only
    std::uint64_t seed = 1;
    std::optional<InnerRoute> route;  // default: closed form when available
};

struct ScalarProductEstimate {
    double value = 0.0;
    InnerRoute method = InnerRoute::closed_form;
};

/// <D(-L)^{-1}(Y - EY), DY> for Y = h(N) at one realization of N, via the
/// interpolation representation: the integral over a in (0,1) of
/// sum_ij K_ij d_i h(N) E'[d_j h(aN + sqrt(1-a^2) N')].
ScalarProductEstimate mehler_scalar_product(const GaussianFunctional& f,
                                            std::span<const double> realization,
                                            const MehlerConfig& config);

/// Generalized source: <D(-L)^{-1}(G - EG), DF>. The closed-form route needs
/// source == target (or a QuadraticForm/ExpLinearForm source); otherwise the
/// inner expectation is sampled.
ScalarProductEstimate mehler_scalar_product(const GaussianFunctional& target,
                                            const GaussianFunctional& source,
                                            std::span<const double> realization,
                                            const MehlerConfig& config);

bool closed_form_available(const GaussianFunctional& f);

/// Piecewise-constant conditional expectation from equal-count bins.
class BinnedRegression {
public:
    struct Bin {
        double y_lo, y_hi;
        double y_mean;
        double v_mean;
        double v_se;
        std::int64_t count;
    };

    double operator()(double y) const;
    const std::vector<Bin>& bins() const { return bins_; }
    bool merged_bins() const { return merged_; }

private:
    friend BinnedRegression conditional_projection(std::span<const double>,
                                                   std::span<const double>, int);
    std::vector<Bin> bins_;
    bool merged_ = false;
};

/// E[V | Y = y] estimated from >= 10^4 (y, v) pairs with `bins` equal-count
/// bins; bins that end up with fewer than 50 samples are merged.
BinnedRegression conditional_projection(std::span<const double> ys, std::span<const double> vs,
                                        int bins = 64);

}  // namespace steindiff
